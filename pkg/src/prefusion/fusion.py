"""Fused source log-probability construction.

The reference side of every fused objective is a gamma-weighted geometric
mean of source-model sequence probabilities, which in log space is a convex
combination of per-source log-probs. Three weighting strategies are
provided (max-margin winner-takes-all, uniform average, confidence), plus
the per-response clipping that bounds each source by the frozen initial
pivot snapshot: floored for preferred responses, capped for dispreferred
ones. Clipping is weakly monotone in the source value, so it can never
invert a preference ordering.

All comparisons here operate on length-normalized log-probs by default
(raw sums from different tokenizers are incomparable); callers running the
no-length-norm ablation pass raw sums instead, consistently on both sides.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import EmptySourceList, NonPositiveEps, WeightLengthMismatch, ZeroModels
from .records import ModelRoster, PreferenceRecord, ScoredResponse, normalized_logprob

SIMPLEX_TOL = 1e-12


class ResponseRole(enum.Enum):
    PREFERRED = "preferred"
    DISPREFERRED = "dispreferred"


#: which clipping role each response slot plays (y_ws counts as preferred)
ROLE_BY_RESPONSE = {
    "y_w": ResponseRole.PREFERRED,
    "y_ws": ResponseRole.PREFERRED,
    "y_l": ResponseRole.DISPREFERRED,
}


@dataclass(frozen=True)
class FusionWeights:
    gamma: tuple[float, ...]

    def __post_init__(self):
        if not self.gamma:
            raise ZeroModels("weight vector is empty")
        if any(g < 0 for g in self.gamma):
            raise ValueError(f"negative weight in {self.gamma}")
        if abs(sum(self.gamma) - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"weights sum to {sum(self.gamma)!r}, not 1")


def clip_logprob(source_nlp: float, init_pivot_nlp: float, role: ResponseRole) -> float:
    """Bound a source log-prob by the initial-pivot snapshot value.

    Preferred responses are floored (a source may not rate y_w below the
    snapshot); dispreferred responses are capped.
    """
    if role is ResponseRole.PREFERRED:
        return max(source_nlp, init_pivot_nlp)
    return min(source_nlp, init_pivot_nlp)


def weights_max_margin(source_nlps, pivot_nlp: float) -> FusionWeights:
    """Winner-takes-all weight on the source farthest from the pivot.

    Ties break toward the lowest source index (roster order).
    """
    source_nlps = list(source_nlps)
    if not source_nlps:
        raise EmptySourceList("no source log-probs given")
    margins = [abs(nlp - pivot_nlp) for nlp in source_nlps]
    best = max(range(len(margins)), key=lambda i: (margins[i], -i))
    return FusionWeights(tuple(1.0 if i == best else 0.0 for i in range(len(margins))))


def weights_average(n: int) -> FusionWeights:
    if n < 1:
        raise ZeroModels(f"n={n}")
    return FusionWeights(tuple(1.0 / n for _ in range(n)))


def weights_confidence(source_nlps, eps: float = 1e-8) -> FusionWeights:
    """Inverse negative-log-likelihood weighting, normalized to the simplex."""
    if eps <= 0:
        raise NonPositiveEps(f"eps={eps}")
    source_nlps = list(source_nlps)
    if not source_nlps:
        raise EmptySourceList("no source log-probs given")
    conf = [1.0 / (-nlp + eps) for nlp in source_nlps]
    total = sum(conf)
    gamma = [c / total for c in conf]
    # compensate float round-off so the simplex invariant holds exactly
    gamma[-1] = 1.0 - sum(gamma[:-1])
    return FusionWeights(tuple(gamma))


def _response_nlp(resp: ScoredResponse, model_id: str, length_norm: bool) -> float:
    if length_norm:
        return normalized_logprob(resp, model_id)
    return resp.logprob(model_id)


def source_nlps(
    resp: ScoredResponse, roster: ModelRoster, length_norm: bool = True
) -> list[float]:
    return [_response_nlp(resp, sid, length_norm) for sid in roster.source_ids]


def fused_logprob(
    record: PreferenceRecord,
    response: str,
    roster: ModelRoster,
    weights: FusionWeights,
    clipping: bool,
    length_norm: bool = True,
) -> float:
    """Log of the gamma-weighted geometric mean of (clipped) source probs.

    ``response`` selects y_w, y_l, or y_ws; the clipping role follows that
    choice. The clipping reference is the frozen init-pivot column in the
    record, never the live pivot.
    """
    if len(weights.gamma) != len(roster.source_ids):
        raise WeightLengthMismatch(
            f"{len(weights.gamma)} weights for {len(roster.source_ids)} sources"
        )
    resp = record.response(response)
    role = ROLE_BY_RESPONSE[response]
    init_nlp = _response_nlp(resp, roster.init_pivot_id, length_norm)
    total = 0.0
    for gamma, sid in zip(weights.gamma, roster.source_ids):
        nlp = _response_nlp(resp, sid, length_norm)
        if clipping:
            nlp = clip_logprob(nlp, init_nlp, role)
        total += gamma * nlp
    return total
