"""Extraction job description.

A job maps each roster id to exactly one scoring endpoint and carries the
I/O paths plus request-level knobs. Credentials never live in the config
file; an endpoint names an environment variable instead.

Config format (JSON):

    {"version": 1,
     "endpoints": {"pivot": {"url": "http://...", "model": "char-a",
                             "api_key_env": "PIVOT_API_KEY"},
                   ...},
     "batch_size": 4,
     "timeout": 10.0,
     "retries": 2}
"""

import json
import os
from dataclasses import dataclass, field

from .errors import JobConfigError


@dataclass(frozen=True)
class EndpointSpec:
    url: str
    model: str
    api_key_env: str = ""

    def api_key(self):
        # resolved at request time so tests can monkeypatch the environment
        if not self.api_key_env:
            return None
        value = os.environ.get(self.api_key_env)
        if value is None:
            raise JobConfigError(
                f"credential variable {self.api_key_env} is not set"
            )
        return value


@dataclass(frozen=True)
class ExtractionJob:
    endpoints: dict = field(default_factory=dict)  # roster id -> EndpointSpec
    batch_size: int = 4
    timeout: float = 10.0
    retries: int = 2

    def __post_init__(self):
        if not self.endpoints:
            raise JobConfigError("job needs at least one endpoint")
        for rid, spec in self.endpoints.items():
            if not isinstance(spec, EndpointSpec):
                raise JobConfigError(f"endpoint for {rid} is not an EndpointSpec")
            if not spec.url or not spec.model:
                raise JobConfigError(f"endpoint for {rid} needs url and model")
        if self.batch_size < 1:
            raise JobConfigError("batch_size must be at least 1")
        if self.timeout <= 0:
            raise JobConfigError("timeout must be positive")
        if self.retries < 0:
            raise JobConfigError("retries must be non-negative")


def load_job(path: str) -> ExtractionJob:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if raw.get("version") != 1:
        raise JobConfigError("unsupported job config version")
    endpoints_raw = raw.get("endpoints")
    if not isinstance(endpoints_raw, dict):
        raise JobConfigError("config needs an endpoints object")
    endpoints = {}
    for rid, entry in endpoints_raw.items():
        try:
            endpoints[rid] = EndpointSpec(
                url=entry["url"],
                model=entry["model"],
                api_key_env=entry.get("api_key_env", "") or "",
            )
        except (KeyError, TypeError) as exc:
            raise JobConfigError(f"bad endpoint entry for {rid}: {exc}") from exc
    return ExtractionJob(
        endpoints=endpoints,
        batch_size=int(raw.get("batch_size", 4)),
        timeout=float(raw.get("timeout", 10.0)),
        retries=int(raw.get("retries", 2)),
    )
