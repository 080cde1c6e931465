"""Local scoring endpoint used by the tests.

Serves the extractor's POST /v1/score contract from a background thread,
backed by a deterministic character-level model: each model name gets a
fixed unigram distribution over printable ASCII, and its tokenizer splits
the text into fixed-size character chunks. Deterministic by construction,
so repeated extractions are bit-exact.
"""

import json
import math
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
SAMPLE_CORPUS = FIXTURES / "sample_corpus.jsonl"

CHARSET = [chr(c) for c in range(32, 127)]

# model name -> (seed, chunk size); char-a/char-b share a tokenizer
MODELS = {
    "char-a": (1, 1),
    "char-b": (2, 1),
    "char-c": (3, 2),
    "char-d": (4, 2),
}


def _char_logprobs(seed: int) -> dict:
    weights = {c: 1.0 + ((seed * 2654435761 ^ ord(c) * 40503) % 997) / 997.0 for c in CHARSET}
    total = sum(weights.values())
    return {c: math.log(w / total) for c, w in weights.items()}


LOGPROB_TABLES = {name: _char_logprobs(seed) for name, (seed, _) in MODELS.items()}


def score_text(model: str, text: str):
    """Reference scoring used by both the server and the tests' asserts."""
    table = LOGPROB_TABLES[model]
    chunk = MODELS[model][1]
    tokens = [text[i : i + chunk] for i in range(0, len(text), chunk)]
    logprobs = [sum(table[c] for c in tok) for tok in tokens]
    return tokens, logprobs


class _Handler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def _reply(self, status: int, payload: dict):
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        if self.path != "/v1/score":
            self._reply(404, {"error": {"type": "not_found"}})
            return
        expected = self.server.expected_key
        if expected is not None:
            if self.headers.get("Authorization") != f"Bearer {expected}":
                self._reply(401, {"error": {"type": "auth"}})
                return
        length = int(self.headers.get("Content-Length", 0))
        try:
            payload = json.loads(self.rfile.read(length))
            model = payload["model"]
            text = payload["response"]
        except (ValueError, KeyError):
            self._reply(400, {"error": {"type": "bad_request", "message": "malformed request"}})
            return
        if model not in MODELS:
            self._reply(404, {"error": {"type": "unknown_model"}})
            return
        if not text or any(c not in LOGPROB_TABLES[model] for c in text):
            self._reply(
                400,
                {"error": {"type": "tokenization_error", "message": f"cannot tokenize {text!r}"}},
            )
            return
        if self.server.fail_next > 0:
            self.server.fail_next -= 1
            self._reply(503, {"error": {"type": "overloaded"}})
            return
        tokens, logprobs = score_text(model, text)
        self._reply(200, {"tokens": tokens, "token_logprobs": logprobs})


class ScoringServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self):
        super().__init__(("127.0.0.1", 0), _Handler)
        self.expected_key = None
        self.fail_next = 0  # next N requests answer 503, for retry tests

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self.server_address[1]}"
