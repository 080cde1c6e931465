"""Brute-force verification on fully enumerated sequence spaces.

With a vocabulary of at most 5 and length at most 4 the whole sequence
space fits in memory, so the KL-regularized fusion objective, its
closed-form maximizer, and the reward identity can all be computed
exactly and cross-checked against random search. This is the ground truth
the rest of the package is verified against.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpace, SupportMismatch, ZeroProbability

PROB_FLOOR = 1e-12


@dataclass
class EnumeratedSpace:
    vocab_size: int
    length: int
    source_dists: np.ndarray  # (n_sources, n_sequences)
    reward: np.ndarray  # (n_sequences,)
    gamma: np.ndarray  # (n_sources,)
    beta: float

    def __post_init__(self):
        if not 2 <= self.vocab_size <= 5 or not 1 <= self.length <= 4:
            raise ValueError("vocab_size must be in [2, 5] and length in [1, 4]")
        n_seq = self.vocab_size**self.length
        self.source_dists = np.asarray(self.source_dists, dtype=float)
        self.reward = np.asarray(self.reward, dtype=float)
        self.gamma = np.asarray(self.gamma, dtype=float)
        if self.source_dists.ndim != 2 or self.source_dists.shape[1] != n_seq:
            raise ValueError(f"source_dists must have shape (N, {n_seq})")
        if self.reward.shape != (n_seq,):
            raise ValueError(f"reward must have shape ({n_seq},)")
        if self.gamma.shape != (self.source_dists.shape[0],):
            raise ValueError("gamma length must match the number of sources")
        if np.any(self.gamma < 0) or abs(self.gamma.sum() - 1.0) > 1e-12:
            raise ValueError("gamma must lie on the simplex")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if np.any(np.abs(self.source_dists.sum(axis=1) - 1.0) > 1e-12):
            raise SupportMismatch("each source distribution must sum to 1")
        # the closed form is undefined on zero-support fused sources; floor
        # and renormalize rather than fail, but say so
        touched = (self.source_dists < PROB_FLOOR) & (self.gamma[:, None] > 0)
        if np.any(touched):
            warnings.warn(
                "flooring near-zero source probabilities at 1e-12 and renormalizing",
                stacklevel=2,
            )
        if np.any(self.source_dists < PROB_FLOOR):
            self.source_dists = np.maximum(self.source_dists, PROB_FLOOR)
            self.source_dists /= self.source_dists.sum(axis=1, keepdims=True)

    @property
    def n_sequences(self) -> int:
        return self.vocab_size**self.length

    def fused_log(self) -> np.ndarray:
        """Log of the gamma-weighted geometric mean of the sources."""
        return self.gamma @ np.log(self.source_dists)


def optimal_pivot(space: EnumeratedSpace) -> np.ndarray:
    """Closed-form maximizer: fused source tilted by exp(reward/beta)."""
    logits = space.fused_log() + space.reward / space.beta
    if not np.all(np.isfinite(logits)):
        raise DegenerateSpace("non-finite fused log-probabilities")
    shifted = logits - logits.max()
    unnorm = np.exp(shifted)
    return unnorm / unnorm.sum()


def objective_value(policy: np.ndarray, space: EnumeratedSpace) -> np.ndarray | float:
    """Expected reward minus beta times the gamma-weighted KL to each source.

    Accepts a single policy vector or a batch (rows are policies). Zero
    policy entries contribute 0 to the entropy term (lim q->0 of q log q).
    """
    policy = np.asarray(policy, dtype=float)
    single = policy.ndim == 1
    q = policy[None, :] if single else policy
    if q.shape[1] != space.n_sequences:
        raise SupportMismatch(f"policy length {q.shape[1]} != {space.n_sequences}")
    if np.any(q < -1e-15) or np.any(np.abs(q.sum(axis=1) - 1.0) > 1e-9):
        raise SupportMismatch("policy is not a probability vector")
    q = np.maximum(q, 0.0)
    entropy_term = np.where(q > 0, q * np.log(np.where(q > 0, q, 1.0)), 0.0).sum(axis=1)
    # sum_i gamma_i * KL(q || p_i) = sum q log q - q . fused_log  (gammas sum to 1)
    value = q @ space.reward - space.beta * (entropy_term - q @ space.fused_log())
    return float(value[0]) if single else value


def reconstruct_reward(optimal: np.ndarray, space: EnumeratedSpace) -> np.ndarray:
    """Invert the closed form: beta * log(optimal / fused source).

    Equals the true reward up to one additive constant per space (the log
    partition term).
    """
    optimal = np.asarray(optimal, dtype=float)
    if np.any(optimal <= 0):
        raise ZeroProbability("optimal policy must be strictly positive")
    return space.beta * (np.log(optimal) - space.fused_log())


def random_space(rng: np.random.Generator, vocab_size=None, length=None, n_sources=None) -> EnumeratedSpace:
    """A random well-conditioned space for property testing."""
    vocab_size = int(vocab_size if vocab_size is not None else rng.integers(2, 5))
    length = int(length if length is not None else rng.integers(1, 4))
    n_sources = int(n_sources if n_sources is not None else rng.integers(1, 4))
    n_seq = vocab_size**length
    dists = rng.dirichlet(np.ones(n_seq), size=n_sources)
    gamma = rng.dirichlet(np.ones(n_sources))
    gamma = gamma / gamma.sum()
    gamma[-1] = 1.0 - gamma[:-1].sum()
    return EnumeratedSpace(
        vocab_size=vocab_size,
        length=length,
        source_dists=dists,
        reward=rng.normal(0.0, 1.0, size=n_seq),
        gamma=gamma,
        beta=float(rng.uniform(0.5, 4.0)),
    )


def verify_space(space: EnumeratedSpace, n_random: int = 10_000, seed: int = 0) -> dict:
    """Check optimality and the reward identity by brute force.

    Returns worst-case residuals: how far any random simplex point or
    vertex gets above the closed-form optimum, and the spread of the
    reconstructed-reward offset.
    """
    rng = np.random.default_rng(seed)
    star = optimal_pivot(space)
    best = objective_value(star, space)
    candidates = rng.dirichlet(np.ones(space.n_sequences), size=n_random)
    vertices = np.eye(space.n_sequences)
    gap = max(
        float(objective_value(candidates, space).max() - best),
        float(objective_value(vertices, space).max() - best),
    )
    offset = reconstruct_reward(star, space) - space.reward
    return {
        "optimality_gap": gap,  # > 0 would mean some candidate beat the closed form
        "normalization_residual": abs(float(star.sum()) - 1.0),
        "reward_offset_spread": float(offset.max() - offset.min()),
    }


# -- fixtures --------------------------------------------------------------

def space_to_json(space: EnumeratedSpace) -> dict:
    return {
        "vocab_size": space.vocab_size,
        "length": space.length,
        "source_dists": space.source_dists.tolist(),
        "reward": space.reward.tolist(),
        "gamma": space.gamma.tolist(),
        "beta": space.beta,
    }


def space_from_json(payload: dict) -> EnumeratedSpace:
    return EnumeratedSpace(
        vocab_size=payload["vocab_size"],
        length=payload["length"],
        source_dists=np.array(payload["source_dists"]),
        reward=np.array(payload["reward"]),
        gamma=np.array(payload["gamma"]),
        beta=payload["beta"],
    )


def load_space(path) -> EnumeratedSpace:
    with open(path, "r", encoding="utf-8") as fh:
        return space_from_json(json.load(fh))
