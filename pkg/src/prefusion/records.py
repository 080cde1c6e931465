"""Domain types and JSONL schema for preference records.

A record pairs a preferred and a dispreferred response, each scored by every
model in the roster as a sequence log-probability sum (nats) together with
that model's own token count for the response. All arithmetic downstream
stays in log space; raw probabilities are never materialized.

JSONL schema (one record per line)::

    {"prompt_id": str,
     "y_w":  {"text": str, "scores": {model_id: {"lp": float, "len": int}}},
     "y_l":  {...},
     "y_ws": {...}}          # optional

Floats are serialized with full round-trip precision (Python repr), so
``validate_record(emit_record(r))`` is bit-exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import (
    MissingModel,
    NonFiniteLogprob,
    PositiveLogprob,
    ValidationError,
    ZeroTokenLen,
)


@dataclass(frozen=True)
class ModelScore:
    """One model's view of one response: log-prob sum and token count."""

    lp: float
    length: int


@dataclass(frozen=True)
class ScoredResponse:
    text: str
    per_model: dict[str, ModelScore] = field(default_factory=dict)

    def score(self, model_id: str) -> ModelScore:
        try:
            return self.per_model[model_id]
        except KeyError:
            raise MissingModel(f"model {model_id!r} not scored on response") from None

    def logprob(self, model_id: str) -> float:
        return self.score(model_id).lp


@dataclass(frozen=True)
class PreferenceRecord:
    prompt_id: str
    y_w: ScoredResponse
    y_l: ScoredResponse
    y_ws: ScoredResponse | None = None

    def response(self, which: str) -> ScoredResponse:
        if which == "y_w":
            return self.y_w
        if which == "y_l":
            return self.y_l
        if which == "y_ws":
            if self.y_ws is None:
                raise ValidationError("record has no y_ws response", field="y_ws")
            return self.y_ws
        raise ValueError(f"unknown response selector {which!r}")


@dataclass(frozen=True)
class ModelRoster:
    """Identifies the trainable pivot, its frozen snapshot, and the sources."""

    pivot_id: str
    init_pivot_id: str
    source_ids: tuple[str, ...]

    def __post_init__(self):
        if not self.source_ids:
            raise ValueError("source_ids must be non-empty")
        if len(set(self.source_ids)) != len(self.source_ids):
            raise ValueError("duplicate source_ids")
        if self.pivot_id in self.source_ids:
            raise ValueError("pivot_id must not appear among source_ids")

    @property
    def all_ids(self) -> tuple[str, ...]:
        ids = [self.pivot_id, self.init_pivot_id]
        for sid in self.source_ids:
            if sid not in ids:
                ids.append(sid)
        return tuple(ids)


def normalized_logprob(resp: ScoredResponse, model_id: str) -> float:
    """Per-token average log-prob (nats/token) under the given model."""
    s = resp.score(model_id)
    return s.lp / s.length


def _validate_response(raw, name, roster, index):
    if not isinstance(raw, dict):
        raise ValidationError("response must be an object", field=name, record_index=index)
    scores = raw.get("scores")
    if not isinstance(scores, dict):
        raise ValidationError("missing scores object", field=f"{name}.scores", record_index=index)
    per_model = {}
    for model_id, entry in scores.items():
        fld = f"{name}.scores.{model_id}"
        if not isinstance(entry, dict) or "lp" not in entry or "len" not in entry:
            raise ValidationError("score entry needs lp and len", field=fld, record_index=index)
        lp = entry["lp"]
        length = entry["len"]
        if not isinstance(lp, (int, float)) or isinstance(lp, bool) or not math.isfinite(lp):
            raise NonFiniteLogprob(f"lp={lp!r}", field=fld, record_index=index)
        if lp > 0:
            raise PositiveLogprob(f"lp={lp!r} > 0", field=fld, record_index=index)
        if not isinstance(length, int) or isinstance(length, bool) or length < 1:
            raise ZeroTokenLen(f"len={length!r} < 1", field=fld, record_index=index)
        per_model[model_id] = ModelScore(float(lp), length)
    for required in roster.all_ids:
        if required not in per_model:
            raise MissingModel(
                f"roster model {required!r} absent", field=f"{name}.scores", record_index=index
            )
    return ScoredResponse(text=str(raw.get("text", "")), per_model=per_model)


def validate_record(raw_record, roster: ModelRoster, index: int | None = None) -> PreferenceRecord:
    """Check one parsed JSONL object against the schema and roster.

    Raises a :class:`ValidationError` subclass naming the offending field
    and record index; returns an immutable :class:`PreferenceRecord` on
    success.
    """
    if not isinstance(raw_record, dict):
        raise ValidationError("record must be a JSON object", record_index=index)
    for required in ("prompt_id", "y_w", "y_l"):
        if required not in raw_record:
            raise ValidationError("missing key", field=required, record_index=index)
    y_w = _validate_response(raw_record["y_w"], "y_w", roster, index)
    y_l = _validate_response(raw_record["y_l"], "y_l", roster, index)
    if set(y_w.per_model) != set(y_l.per_model):
        raise MissingModel("y_w and y_l score different model sets", field="y_l.scores", record_index=index)
    y_ws = None
    if raw_record.get("y_ws") is not None:
        y_ws = _validate_response(raw_record["y_ws"], "y_ws", roster, index)
        if set(y_ws.per_model) != set(y_w.per_model):
            raise MissingModel("y_ws scores a different model set", field="y_ws.scores", record_index=index)
    return PreferenceRecord(prompt_id=str(raw_record["prompt_id"]), y_w=y_w, y_l=y_l, y_ws=y_ws)


def _response_to_json(resp: ScoredResponse):
    return {
        "text": resp.text,
        "scores": {m: {"lp": s.lp, "len": s.length} for m, s in resp.per_model.items()},
    }


def record_to_json(record: PreferenceRecord) -> dict:
    out = {
        "prompt_id": record.prompt_id,
        "y_w": _response_to_json(record.y_w),
        "y_l": _response_to_json(record.y_l),
    }
    if record.y_ws is not None:
        out["y_ws"] = _response_to_json(record.y_ws)
    return out


def emit_record(record: PreferenceRecord) -> str:
    """One JSONL line; inverse of validate_record on valid records."""
    return json.dumps(record_to_json(record), sort_keys=True)


def read_jsonl(path, roster: ModelRoster):
    """Stream validated records from a JSONL file, one at a time.

    Line numbers are 1-based in error messages; blank lines are skipped.
    """
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"invalid JSON: {exc}", record_index=lineno) from None
            yield validate_record(raw, roster, index=lineno)
