"""Loss family over preference records.

Every objective returns a per-record loss together with analytic gradients
with respect to the pivot model's *raw* sequence log-probabilities (the
quantity a trainable model exposes). When length normalization is on, the
1/len factor is part of the differentiated term and therefore appears in
the gradients. The fused-reference variants replace the reference model
with the clipped, gamma-weighted geometric mean built by :mod:`.fusion`.

Selectors: ``dpo``, ``ipo``, ``wrpo`` (single reference model, taken as
the roster's init pivot), ``fpo`` (fused reference, no clipping, no length
norm), ``infifpo``, ``infifpo_ipo``, ``infifpo_wrpo`` (fused reference
with the configured clipping/normalization switches).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace as dc_replace

from .errors import MissingInternalResponse, PrefusionError
from .fusion import (
    FusionWeights,
    fused_logprob,
    source_nlps,
    weights_average,
    weights_confidence,
    weights_max_margin,
)
from .records import ModelRoster, ModelScore, PreferenceRecord, ScoredResponse

OBJECTIVES = ("dpo", "ipo", "wrpo", "fpo", "infifpo", "infifpo_ipo", "infifpo_wrpo")
STRATEGIES = ("max_margin", "average", "confidence")


@dataclass(frozen=True)
class ObjectiveConfig:
    objective: str = "infifpo"
    beta: float = 2.5
    strategy: str = "max_margin"
    length_norm: bool = True
    clipping: bool = True
    alpha: float = 0.5
    confidence_eps: float = 1e-8
    # max-margin selection granularity: one winner per response (default)
    # or one winner per preference pair from summed margins
    margin_granularity: str = "per_response"

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.margin_granularity not in ("per_response", "per_pair"):
            raise ValueError(f"unknown granularity {self.margin_granularity!r}")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.confidence_eps <= 0:
            raise ValueError("confidence_eps must be > 0")


@dataclass(frozen=True)
class LossReport:
    loss: float
    grad_w: float
    grad_l: float
    disparity_coeff: float
    margin: float  # the objective's own margin term (sigmoid argument / h)
    pivot_margin: float = 0.0  # pivot-side (y_w minus y_l) log-prob gap
    grad_ws: float | None = None
    selected_source: dict[str, int] | None = None

    def as_dict(self):
        out = {
            "loss": self.loss,
            "grad_w": self.grad_w,
            "grad_l": self.grad_l,
            "disparity_coeff": self.disparity_coeff,
            "margin": self.margin,
            "pivot_margin": self.pivot_margin,
        }
        if self.grad_ws is not None:
            out["grad_ws"] = self.grad_ws
        if self.selected_source is not None:
            out["selected_source"] = self.selected_source
        return out


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _disparity(x: float) -> float:
    # the coefficient is strictly inside (0, 1) for finite arguments; keep
    # that true at float resolution even when the sigmoid saturates
    return min(max(sigmoid(x), 5e-324), math.nextafter(1.0, 0.0))


def neg_log_sigmoid(x: float) -> float:
    # -log(sigma(x)), stable on both tails
    if x >= 0:
        return math.log1p(math.exp(-x))
    return -x + math.log1p(math.exp(x))


def _nlp(resp: ScoredResponse, model_id: str, length_norm: bool) -> float:
    s = resp.score(model_id)
    return s.lp / s.length if length_norm else s.lp


def _grad_scale(resp: ScoredResponse, model_id: str, length_norm: bool) -> float:
    # d(normalized lp)/d(raw lp)
    return 1.0 / resp.score(model_id).length if length_norm else 1.0


def _pair_weights(record, roster, config):
    """Fusion weights for (y_w, y_l[, y_ws]) under the configured strategy.

    Returns (weights_by_response, selected_by_response or None). Weight
    computation always uses unclipped values; clipping only enters the
    fused combination itself.
    """
    responses = ["y_w", "y_l"] + (["y_ws"] if record.y_ws is not None else [])
    ln = config.length_norm
    if config.strategy == "average":
        w = weights_average(len(roster.source_ids))
        return {r: w for r in responses}, None
    if config.strategy == "confidence":
        return (
            {
                r: weights_confidence(
                    source_nlps(record.response(r), roster, ln), config.confidence_eps
                )
                for r in responses
            },
            None,
        )
    # max_margin
    if config.margin_granularity == "per_pair":
        margins = [0.0] * len(roster.source_ids)
        for r in ("y_w", "y_l"):
            resp = record.response(r)
            pivot = _nlp(resp, roster.pivot_id, ln)
            for i, nlp in enumerate(source_nlps(resp, roster, ln)):
                margins[i] += abs(nlp - pivot)
        best = max(range(len(margins)), key=lambda i: (margins[i], -i))
        w = FusionWeights(tuple(1.0 if i == best else 0.0 for i in range(len(margins))))
        return {r: w for r in responses}, {r: best for r in responses}
    weights, selected = {}, {}
    for r in responses:
        resp = record.response(r)
        w = weights_max_margin(
            source_nlps(resp, roster, ln), _nlp(resp, roster.pivot_id, ln)
        )
        weights[r] = w
        selected[r] = w.gamma.index(1.0)
    return weights, selected


def _reference_nlps(record, roster, config, fused: bool, clipping: bool):
    """Reference-side (normalized) log-prob per response slot."""
    responses = ["y_w", "y_l"] + (["y_ws"] if record.y_ws is not None else [])
    if not fused:
        return {r: _nlp(record.response(r), roster.init_pivot_id, config.length_norm) for r in responses}, None
    weights, selected = _pair_weights(record, roster, config)
    refs = {
        r: fused_logprob(record, r, roster, weights[r], clipping, config.length_norm)
        for r in responses
    }
    return refs, selected


def _sigmoid_pair_report(record, roster, config, refs, selected):
    beta = config.beta
    ln = config.length_norm
    p_w = _nlp(record.y_w, roster.pivot_id, ln)
    p_l = _nlp(record.y_l, roster.pivot_id, ln)
    arg = beta * ((p_w - refs["y_w"]) - (p_l - refs["y_l"]))
    coeff = sigmoid(-arg)
    return LossReport(
        loss=neg_log_sigmoid(arg),
        grad_w=-coeff * beta * _grad_scale(record.y_w, roster.pivot_id, ln),
        grad_l=coeff * beta * _grad_scale(record.y_l, roster.pivot_id, ln),
        disparity_coeff=_disparity(beta * (refs["y_w"] - refs["y_l"]) - beta * (p_w - p_l)),
        margin=arg,
        pivot_margin=p_w - p_l,
        selected_source=selected,
    )


def _ipo_report(record, roster, config, refs, selected, beta_inside: bool):
    beta = config.beta
    ln = config.length_norm
    p_w = _nlp(record.y_w, roster.pivot_id, ln)
    p_l = _nlp(record.y_l, roster.pivot_id, ln)
    scale = beta if beta_inside else 1.0
    h = scale * ((p_w - refs["y_w"]) - (p_l - refs["y_l"]))
    resid = h - 1.0 / (2.0 * beta)
    return LossReport(
        loss=resid * resid,
        grad_w=2.0 * resid * scale * _grad_scale(record.y_w, roster.pivot_id, ln),
        grad_l=-2.0 * resid * scale * _grad_scale(record.y_l, roster.pivot_id, ln),
        disparity_coeff=_disparity(beta * (refs["y_w"] - refs["y_l"]) - beta * (p_w - p_l)),
        margin=h,
        pivot_margin=p_w - p_l,
        selected_source=selected,
    )


def _wrpo_report(record, roster, config, refs, selected):
    if record.y_ws is None:
        raise MissingInternalResponse("objective requires a y_ws response")
    beta, alpha = config.beta, config.alpha
    ln = config.length_norm
    p_w = _nlp(record.y_w, roster.pivot_id, ln)
    p_l = _nlp(record.y_l, roster.pivot_id, ln)
    p_ws = _nlp(record.y_ws, roster.pivot_id, ln)
    m_ws = p_ws - refs["y_ws"]
    m_wp = p_w - refs["y_w"]
    m_l = p_l - refs["y_l"]
    arg = alpha * beta * m_ws + (1.0 - alpha) * beta * m_wp - beta * m_l
    coeff = sigmoid(-arg)
    return LossReport(
        loss=neg_log_sigmoid(arg),
        grad_w=-coeff * (1.0 - alpha) * beta * _grad_scale(record.y_w, roster.pivot_id, ln),
        grad_l=coeff * beta * _grad_scale(record.y_l, roster.pivot_id, ln),
        grad_ws=-coeff * alpha * beta * _grad_scale(record.y_ws, roster.pivot_id, ln),
        disparity_coeff=_disparity(beta * (refs["y_w"] - refs["y_l"]) - beta * (p_w - p_l)),
        margin=arg,
        pivot_margin=p_w - p_l,
        selected_source=selected,
    )


def evaluate_record(
    record: PreferenceRecord, roster: ModelRoster, config: ObjectiveConfig
) -> LossReport:
    """Dispatch to the configured objective."""
    name = config.objective
    if name == "fpo":
        config = dc_replace(config, objective="infifpo", length_norm=False, clipping=False)
        name = "infifpo"
    fused = name.startswith("infifpo")
    refs, selected = _reference_nlps(record, roster, config, fused, fused and config.clipping)
    if name in ("dpo", "infifpo"):
        return _sigmoid_pair_report(record, roster, config, refs, selected)
    if name in ("ipo", "infifpo_ipo"):
        return _ipo_report(record, roster, config, refs, selected, beta_inside=(name == "ipo"))
    if name in ("wrpo", "infifpo_wrpo"):
        return _wrpo_report(record, roster, config, refs, selected)
    raise PrefusionError(f"unhandled objective {name!r}")


def _single_ref_roster(pivot_id: str, ref_id: str) -> ModelRoster:
    return ModelRoster(pivot_id=pivot_id, init_pivot_id=ref_id, source_ids=(ref_id,))


def dpo_loss(record, ref_id, config, pivot_id):
    roster = _single_ref_roster(pivot_id, ref_id)
    return evaluate_record(record, roster, dc_replace(config, objective="dpo"))


def ipo_loss(record, ref_id, config, pivot_id):
    roster = _single_ref_roster(pivot_id, ref_id)
    return evaluate_record(record, roster, dc_replace(config, objective="ipo"))


def wrpo_loss(record, ref_id, config, pivot_id):
    roster = _single_ref_roster(pivot_id, ref_id)
    return evaluate_record(record, roster, dc_replace(config, objective="wrpo"))


def fpo_loss(record, roster, config):
    return evaluate_record(record, roster, dc_replace(config, objective="fpo"))


def infifpo_loss(record, roster, config):
    return evaluate_record(record, roster, dc_replace(config, objective="infifpo"))


def infifpo_ipo_loss(record, roster, config):
    return evaluate_record(record, roster, dc_replace(config, objective="infifpo_ipo"))


def infifpo_wrpo_loss(record, roster, config):
    return evaluate_record(record, roster, dc_replace(config, objective="infifpo_wrpo"))


def batch_loss(records, roster, config):
    """Mean loss over records with per-record reports, fixed order."""
    reports = [evaluate_record(r, roster, config) for r in records]
    mean = sum(rep.loss for rep in reports) / len(reports) if reports else 0.0
    return mean, reports


def grad_check(
    objective: str,
    record: PreferenceRecord,
    roster: ModelRoster,
    config: ObjectiveConfig,
    h: float = 1e-5,
) -> float:
    """Max relative error between analytic gradients and central differences.

    Each pivot sequence log-prob (y_w, y_l, and y_ws when present) is
    perturbed by +-h; relative error uses max(1, |analytic|) in the
    denominator.
    """
    config = dc_replace(config, objective=objective)
    report = evaluate_record(record, roster, config)
    slots = [("y_w", report.grad_w), ("y_l", report.grad_l)]
    if report.grad_ws is not None:
        slots.append(("y_ws", report.grad_ws))
    worst = 0.0
    for which, analytic in slots:
        plus = evaluate_record(_perturbed(record, which, roster.pivot_id, h), roster, config).loss
        minus = evaluate_record(_perturbed(record, which, roster.pivot_id, -h), roster, config).loss
        numeric = (plus - minus) / (2.0 * h)
        worst = max(worst, abs(analytic - numeric) / max(1.0, abs(analytic)))
    return worst


def _perturbed(record: PreferenceRecord, which: str, pivot_id: str, delta: float):
    resp = record.response(which)
    score = resp.score(pivot_id)
    per_model = dict(resp.per_model)
    per_model[pivot_id] = ModelScore(score.lp + delta, score.length)
    new_resp = ScoredResponse(text=resp.text, per_model=per_model)
    return dc_replace(record, **{which: new_resp})
