"""Tabular autoregressive toy language model with exact gradients.

The model is a softmax table indexed by (prompt context, position,
truncated token history, next token). Everything about it is exact: the
conditional log-likelihood of a sequence, the gradient of that likelihood
with respect to the table, and full enumeration of the sequence space.
That makes every objective in this package trainable end-to-end without an
autodiff dependency, and lets brute-force checks close the loop.

Histories shorter than the model order are left-padded with token 0 (a
deterministic convention; context id and position already disambiguate the
sequence start).

Dataset convention for training: a record's ``prompt_id`` is the integer
context id and each response's ``text`` is the comma-separated token
sequence, e.g. ``"2,0,1"``.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass, field, replace as dc_replace

import numpy as np

from .errors import EmptyDataset, SequenceTooLong, TokenOutOfRange
from .objectives import LossReport, ObjectiveConfig, evaluate_record
from .records import ModelRoster, ModelScore, PreferenceRecord, ScoredResponse

PARAMS_FORMAT = "prefusion-toylm"
PARAMS_VERSION = 1


@dataclass
class ToyModelParams:
    vocab_size: int
    max_len: int
    history_order: int = 1
    num_contexts: int = 1
    scores: np.ndarray = field(default=None)  # (contexts, max_len, V**k, V)

    def __post_init__(self):
        if not 2 <= self.vocab_size <= 16:
            raise ValueError("vocab_size must be in [2, 16]")
        if not 1 <= self.max_len <= 6:
            raise ValueError("max_len must be in [1, 6]")
        shape = (
            self.num_contexts,
            self.max_len,
            self.vocab_size**self.history_order,
            self.vocab_size,
        )
        if self.scores is None:
            self.scores = np.zeros(shape)
        else:
            self.scores = np.asarray(self.scores, dtype=float)
            if self.scores.shape != shape:
                raise ValueError(f"scores shape {self.scores.shape} != {shape}")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("scores must be finite")

    def copy(self) -> "ToyModelParams":
        return ToyModelParams(
            self.vocab_size,
            self.max_len,
            self.history_order,
            self.num_contexts,
            self.scores.copy(),
        )


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    steps: int
    batch_size: int
    seed: int
    objective: ObjectiveConfig
    momentum: float = 0.0
    # optional linear ramp for the WRPO alpha coefficient
    alpha_ramp: tuple[float, float] | None = None

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.steps < 0 or self.batch_size < 1:
            raise ValueError("steps must be >= 0 and batch_size >= 1")


def _check_sequence(params: ToyModelParams, tokens) -> list[int]:
    tokens = list(tokens)
    if len(tokens) > params.max_len:
        raise SequenceTooLong(f"length {len(tokens)} > max_len {params.max_len}")
    for t in tokens:
        if not 0 <= t < params.vocab_size:
            raise TokenOutOfRange(f"token {t} outside vocab of {params.vocab_size}")
    return tokens


def _log_softmax(row: np.ndarray) -> np.ndarray:
    shifted = row - row.max()
    return shifted - np.log(np.exp(shifted).sum())


def _next_history(params: ToyModelParams, hist: int, token: int) -> int:
    if params.history_order == 0:
        return 0
    return (hist * params.vocab_size + token) % (params.vocab_size**params.history_order)


def model_logprob(params: ToyModelParams, context_id: int, tokens):
    """Exact conditional log-likelihood: (per-token log-probs, sum)."""
    tokens = _check_sequence(params, tokens)
    hist = 0
    per_token = []
    for pos, t in enumerate(tokens):
        lps = _log_softmax(params.scores[context_id, pos, hist])
        per_token.append(float(lps[t]))
        hist = _next_history(params, hist, t)
    return per_token, float(sum(per_token))


def logprob_grad(params: ToyModelParams, context_id: int, tokens, out: np.ndarray, coeff: float = 1.0):
    """Accumulate coeff * d(sum log-prob)/d(scores) into ``out``; returns the sum."""
    tokens = _check_sequence(params, tokens)
    hist = 0
    total = 0.0
    for pos, t in enumerate(tokens):
        row = params.scores[context_id, pos, hist]
        lps = _log_softmax(row)
        total += float(lps[t])
        probs = np.exp(lps)
        out[context_id, pos, hist] -= coeff * probs
        out[context_id, pos, hist, t] += coeff
        hist = _next_history(params, hist, t)
    return total


def enumerate_sequences(vocab_size: int, length: int):
    return list(itertools.product(range(vocab_size), repeat=length))


def enumerate_logprobs(params: ToyModelParams, context_id: int, length: int) -> np.ndarray:
    """Log-prob of every sequence of the given length, in lexicographic order."""
    if length > params.max_len:
        raise SequenceTooLong(f"length {length} > max_len {params.max_len}")
    return np.array(
        [model_logprob(params, context_id, seq)[1] for seq in enumerate_sequences(params.vocab_size, length)]
    )


def sample(params: ToyModelParams, context_id: int, length: int, rng_seed: int):
    """Ancestral sampling; deterministic per seed."""
    if length > params.max_len:
        raise SequenceTooLong(f"length {length} > max_len {params.max_len}")
    rng = np.random.default_rng(rng_seed)
    hist = 0
    out = []
    for pos in range(length):
        probs = np.exp(_log_softmax(params.scores[context_id, pos, hist]))
        t = int(rng.choice(params.vocab_size, p=probs / probs.sum()))
        out.append(t)
        hist = _next_history(params, hist, t)
    return out


# -- dataset glue ----------------------------------------------------------

def tokens_from_text(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok != ""]


def context_from_prompt_id(prompt_id: str) -> int:
    return int(prompt_id)


def refresh_pivot_scores(params: ToyModelParams, record: PreferenceRecord, pivot_id: str) -> PreferenceRecord:
    """Replace the pivot column of every response with values under ``params``.

    Source and init-pivot columns stay frozen as read from the dataset.
    """
    ctx = context_from_prompt_id(record.prompt_id)
    updates = {}
    for which in ("y_w", "y_l", "y_ws"):
        resp = getattr(record, which)
        if resp is None:
            continue
        tokens = tokens_from_text(resp.text)
        _, lp = model_logprob(params, ctx, tokens)
        per_model = dict(resp.per_model)
        per_model[pivot_id] = ModelScore(lp, len(tokens))
        updates[which] = ScoredResponse(text=resp.text, per_model=per_model)
    return dc_replace(record, **updates)


def evaluate_dataset(params: ToyModelParams, records, roster: ModelRoster, config: ObjectiveConfig):
    """Mean loss, preference accuracy, and mean disparity over a dataset."""
    losses, disparities, correct = [], [], 0
    for record in records:
        record = refresh_pivot_scores(params, record, roster.pivot_id)
        rep = evaluate_record(record, roster, config)
        losses.append(rep.loss)
        disparities.append(rep.disparity_coeff)
        if rep.pivot_margin > 0:
            correct += 1
    n = len(losses)
    if n == 0:
        raise EmptyDataset("no records to evaluate")
    return {
        "loss": sum(losses) / n,
        "accuracy": correct / n,
        "mean_disparity": sum(disparities) / n,
    }


def train(params: ToyModelParams, dataset, roster: ModelRoster, train_config: TrainConfig):
    """Plain (optionally momentum) gradient descent on the batch-mean loss.

    Pivot log-probs are recomputed from the current table every step; all
    other columns stay frozen. Deterministic given the seed: batches are
    drawn from one generator and reductions run in fixed order.
    """
    dataset = list(dataset)
    if not dataset:
        raise EmptyDataset("training dataset is empty")
    params = params.copy()
    rng = np.random.default_rng(train_config.seed)
    velocity = np.zeros_like(params.scores)
    history = []
    for step in range(train_config.steps):
        config = train_config.objective
        if train_config.alpha_ramp is not None:
            start, end = train_config.alpha_ramp
            frac = step / max(1, train_config.steps - 1)
            config = dc_replace(config, alpha=start + (end - start) * frac)
        idx = rng.integers(0, len(dataset), size=train_config.batch_size)
        grad = np.zeros_like(params.scores)
        losses, disparities, correct = [], [], 0
        for i in idx:
            record = refresh_pivot_scores(params, dataset[int(i)], roster.pivot_id)
            rep: LossReport = evaluate_record(record, roster, config)
            losses.append(rep.loss)
            disparities.append(rep.disparity_coeff)
            if rep.pivot_margin > 0:
                correct += 1
            ctx = context_from_prompt_id(record.prompt_id)
            logprob_grad(params, ctx, tokens_from_text(record.y_w.text), grad, rep.grad_w)
            logprob_grad(params, ctx, tokens_from_text(record.y_l.text), grad, rep.grad_l)
            if rep.grad_ws is not None:
                logprob_grad(params, ctx, tokens_from_text(record.y_ws.text), grad, rep.grad_ws)
        grad /= train_config.batch_size
        velocity = train_config.momentum * velocity + grad
        params.scores = params.scores - train_config.learning_rate * velocity
        history.append(
            {
                "step": step,
                "loss": sum(losses) / len(losses),
                "accuracy": correct / len(losses),
                "mean_disparity": sum(disparities) / len(disparities),
            }
        )
    return params, history


# -- serialization ---------------------------------------------------------

def save_params(params: ToyModelParams, path):
    payload = {
        "format": PARAMS_FORMAT,
        "version": PARAMS_VERSION,
        "vocab_size": params.vocab_size,
        "max_len": params.max_len,
        "history_order": params.history_order,
        "num_contexts": params.num_contexts,
        "scores": params.scores.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_params(path) -> ToyModelParams:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != PARAMS_FORMAT:
        raise ValueError(f"not a {PARAMS_FORMAT} file: {path}")
    if payload.get("version") != PARAMS_VERSION:
        raise ValueError(f"unsupported params version {payload.get('version')}")
    return ToyModelParams(
        vocab_size=payload["vocab_size"],
        max_len=payload["max_len"],
        history_order=payload["history_order"],
        num_contexts=payload["num_contexts"],
        scores=np.array(payload["scores"]),
    )


def save_history_csv(history, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "loss", "accuracy", "mean_disparity"])
        for row in history:
            writer.writerow([row["step"], repr(row["loss"]), repr(row["accuracy"]), repr(row["mean_disparity"])])
