"""Turn a plain prompt/response corpus into the scored dataset schema.

Input corpus (one JSON object per line):

    {"prompt_id": "12", "prompt": "...", "y_w": "...", "y_l": "...",
     "y_ws": "..."}          # y_ws optional

Output records follow the training dataset schema: every endpoint in the
job scores every response, and each response carries that model's own
token count. A failure scores only the affected record; it lands in the
rejects file with the error class name and the job moves on.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

from .client import score_response
from .errors import RecordError, SchemaViolation
from .job import ExtractionJob

RESPONSE_KEYS = ("y_w", "y_l", "y_ws")


@dataclass
class ExtractionResult:
    emitted: int
    rejected: int

    @property
    def total(self) -> int:
        return self.emitted + self.rejected


def _parse_corpus_line(line: str, line_no: int) -> dict:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"line {line_no}: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise SchemaViolation(f"line {line_no}: expected an object")
    for key in ("prompt_id", "prompt", "y_w", "y_l"):
        if key not in raw:
            raise SchemaViolation(f"line {line_no}: missing field {key}")
    return raw


def _check_entry(model_id: str, lp: float, token_len: int) -> None:
    if lp > 0:
        raise SchemaViolation(f"{model_id}: positive log-prob {lp}")
    if token_len < 1:
        raise SchemaViolation(f"{model_id}: token count {token_len} < 1")


def score_record(raw: dict, job: ExtractionJob, session=None) -> dict:
    """Score every response in one corpus row against every endpoint."""
    prompt = str(raw["prompt"])
    record = {"prompt_id": str(raw["prompt_id"])}
    for key in RESPONSE_KEYS:
        if key not in raw or raw[key] is None:
            continue
        text = str(raw[key])
        scores = {}
        for model_id, spec in job.endpoints.items():
            lp, token_len = score_response(
                spec, prompt, text, job.timeout, job.retries, session=session
            )
            _check_entry(model_id, lp, token_len)
            scores[model_id] = {"lp": lp, "len": token_len}
        record[key] = {"text": text, "scores": scores}
    return record


def extract_logprobs(
    corpus_path: str,
    job: ExtractionJob,
    out_path: str,
    rejects_path: Optional[str] = None,
) -> ExtractionResult:
    """Score a corpus file and write the dataset; returns emit/reject counts.

    Records are processed with up to ``job.batch_size`` in flight, but the
    output preserves the input order exactly, and runs are deterministic
    for a fixed corpus and endpoint state.
    """
    with open(corpus_path, encoding="utf-8") as fh:
        lines = [line for line in fh if line.strip()]

    def work(item):
        line_no, line = item
        try:
            raw = _parse_corpus_line(line, line_no)
            return score_record(raw, job), None
        except RecordError as exc:
            return None, {
                "line": line_no,
                "error": type(exc).__name__,
                "detail": str(exc),
            }

    emitted = 0
    rejects = []
    # sessions are not reliably thread safe; each request opens its own
    # connection instead
    with ThreadPoolExecutor(max_workers=job.batch_size) as pool:
        results = pool.map(work, enumerate(lines, start=1))
        with open(out_path, "w", encoding="utf-8") as out:
            for record, reject in results:
                if reject is not None:
                    rejects.append(reject)
                    continue
                out.write(json.dumps(record, sort_keys=True) + "\n")
                emitted += 1
    if rejects_path is not None:
        with open(rejects_path, "w", encoding="utf-8") as fh:
            for row in rejects:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    return ExtractionResult(emitted=emitted, rejected=len(rejects))
