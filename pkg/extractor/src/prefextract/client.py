"""HTTP client for teacher-forced response scoring.

The endpoint contract is a single POST route:

    POST {url}/v1/score
    {"model": "...", "prompt": "...", "response": "..."}

    200 -> {"token_logprobs": [...], "tokens": [...]}
    400 -> {"error": {"type": "tokenization_error", "message": "..."}}

The token log-probs cover the response only, conditioned on the prompt,
so the sequence log-prob is their sum and the model-specific length is
the token count.
"""

import math
import time

import requests

from .errors import EndpointUnreachable, SchemaViolation, TokenizationFailure
from .job import EndpointSpec


def score_response(
    spec: EndpointSpec,
    prompt: str,
    response: str,
    timeout: float,
    retries: int,
    session=None,
):
    """Return (lp, token_len) for one response under one endpoint."""
    post = (session or requests).post
    headers = {}
    key = spec.api_key()
    if key is not None:
        headers["Authorization"] = f"Bearer {key}"
    payload = {"model": spec.model, "prompt": prompt, "response": response}
    url = spec.url.rstrip("/") + "/v1/score"
    last_error = None
    for attempt in range(retries + 1):
        try:
            reply = post(url, json=payload, headers=headers, timeout=timeout)
        except requests.RequestException as exc:
            last_error = f"{type(exc).__name__}: {exc}"
            if attempt < retries:
                time.sleep(0.05 * (attempt + 1))
            continue
        if reply.status_code >= 500:
            last_error = f"server error {reply.status_code}"
            if attempt < retries:
                time.sleep(0.05 * (attempt + 1))
            continue
        if reply.status_code == 400:
            detail = ""
            try:
                detail = reply.json().get("error", {}).get("message", "")
            except ValueError:
                pass
            raise TokenizationFailure(detail or "endpoint rejected the text")
        if reply.status_code != 200:
            raise EndpointUnreachable(f"unexpected status {reply.status_code}")
        return _parse_scores(reply)
    raise EndpointUnreachable(last_error or "no response from endpoint")


def _parse_scores(reply):
    try:
        body = reply.json()
        logprobs = body["token_logprobs"]
    except (ValueError, KeyError, TypeError) as exc:
        raise SchemaViolation(f"malformed endpoint reply: {exc}") from exc
    if not isinstance(logprobs, list) or not logprobs:
        raise SchemaViolation("endpoint returned no token log-probs")
    total = 0.0
    for lp in logprobs:
        if not isinstance(lp, (int, float)) or not math.isfinite(lp) or lp > 0:
            raise SchemaViolation(f"bad token log-prob {lp!r}")
        total += float(lp)
    return total, len(logprobs)
