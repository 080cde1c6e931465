import json
import os

import pytest

from prefextract import (
    EndpointSpec,
    ExtractionJob,
    JobConfigError,
    TokenizationFailure,
    extract_logprobs,
    load_job,
    score_record,
)
from prefextract.client import score_response
from conftest_helpers import SAMPLE_CORPUS, score_text


def make_job(server, models=("char-a", "char-b"), ids=("pivot", "src"), **kw):
    endpoints = {rid: EndpointSpec(server.url, model) for rid, model in zip(ids, models)}
    return ExtractionJob(endpoints=endpoints, **kw)


class TestJobConfig:
    def test_load_round_trip(self, tmp_path):
        path = tmp_path / "job.json"
        path.write_text(
            json.dumps(
                {
                    "version": 1,
                    "endpoints": {"pivot": {"url": "http://x", "model": "m"}},
                    "batch_size": 2,
                    "timeout": 5.0,
                    "retries": 1,
                }
            )
        )
        job = load_job(str(path))
        assert job.endpoints["pivot"].url == "http://x"
        assert (job.batch_size, job.timeout, job.retries) == (2, 5.0, 1)

    def test_rejects_empty_endpoints(self):
        with pytest.raises(JobConfigError):
            ExtractionJob(endpoints={})

    def test_rejects_bad_batch_size(self):
        with pytest.raises(JobConfigError):
            ExtractionJob(endpoints={"p": EndpointSpec("http://x", "m")}, batch_size=0)

    def test_missing_credential_env(self):
        spec = EndpointSpec("http://x", "m", api_key_env="NO_SUCH_VAR_12345")
        with pytest.raises(JobConfigError):
            spec.api_key()


class TestScoring:
    def test_matches_reference_model(self, server):
        spec = EndpointSpec(server.url, "char-a")
        lp, n = score_response(spec, "hi", "honey", timeout=5.0, retries=0)
        _, logprobs = score_text("char-a", "honey")
        assert lp == pytest.approx(sum(logprobs), abs=1e-12)
        assert n == 5

    def test_same_tokenizer_same_token_len(self, server):
        job = make_job(server, models=("char-a", "char-b"), ids=("a", "b"))
        rec = score_record(
            {"prompt_id": "0", "prompt": "p", "y_w": "honey", "y_l": "milk"}, job
        )
        for resp in ("y_w", "y_l"):
            lens = {rec[resp]["scores"][m]["len"] for m in ("a", "b")}
            assert len(lens) == 1

    def test_chunk_tokenizer_differs(self, server):
        job = make_job(server, models=("char-a", "char-c"), ids=("a", "c"))
        rec = score_record(
            {"prompt_id": "0", "prompt": "p", "y_w": "honey", "y_l": "milk"}, job
        )
        assert rec["y_w"]["scores"]["a"]["len"] == 5
        assert rec["y_w"]["scores"]["c"]["len"] == 3

    def test_empty_response_is_tokenization_failure(self, server):
        spec = EndpointSpec(server.url, "char-a")
        with pytest.raises(TokenizationFailure):
            score_response(spec, "p", "", timeout=5.0, retries=0)

    def test_retry_survives_transient_errors(self, server):
        server.fail_next = 2
        spec = EndpointSpec(server.url, "char-a")
        lp, n = score_response(spec, "p", "ok", timeout=5.0, retries=3)
        assert n == 2 and lp < 0

    def test_credential_header_required(self, server, monkeypatch):
        server.expected_key = "sekrit"
        try:
            monkeypatch.setenv("SCORE_KEY", "sekrit")
            spec = EndpointSpec(server.url, "char-a", api_key_env="SCORE_KEY")
            lp, n = score_response(spec, "p", "ok", timeout=5.0, retries=0)
            assert n == 2
        finally:
            server.expected_key = None


class TestExtraction:
    def test_order_and_counts(self, server, tmp_path):
        job = make_job(server, batch_size=4)
        out = tmp_path / "out.jsonl"
        rejects = tmp_path / "rejects.jsonl"
        result = extract_logprobs(str(SAMPLE_CORPUS), job, str(out), str(rejects))
        assert result.rejected == 0
        with open(SAMPLE_CORPUS) as fh:
            expected_ids = [json.loads(line)["prompt_id"] for line in fh]
        with open(out) as fh:
            got_ids = [json.loads(line)["prompt_id"] for line in fh]
        assert got_ids == expected_ids
        assert os.path.getsize(rejects) == 0

    def test_deterministic(self, server, tmp_path):
        job = make_job(server, batch_size=3)
        outs = []
        for name in ("a.jsonl", "b.jsonl"):
            path = tmp_path / name
            extract_logprobs(str(SAMPLE_CORPUS), job, str(path), None)
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]

    def test_bad_line_goes_to_rejects(self, server, tmp_path):
        corpus = tmp_path / "corpus.jsonl"
        corpus.write_text(
            '{"prompt_id": "0", "prompt": "p", "y_w": "good", "y_l": "bad"}\n'
            '{"prompt_id": "1", "prompt": "p", "y_w": "good"}\n'
            '{"prompt_id": "2", "prompt": "p", "y_w": "", "y_l": "bad"}\n'
        )
        job = make_job(server)
        result = extract_logprobs(str(corpus), job, str(tmp_path / "o.jsonl"), str(tmp_path / "r.jsonl"))
        assert result.emitted == 1
        assert result.rejected == 2
        rows = [json.loads(line) for line in (tmp_path / "r.jsonl").read_text().splitlines()]
        assert {r["error"] for r in rows} == {"SchemaViolation", "TokenizationFailure"}
        assert {r["line"] for r in rows} == {2, 3}

    def test_unreachable_endpoint_fails_records_not_job(self, tmp_path):
        job = ExtractionJob(
            endpoints={"pivot": EndpointSpec("http://127.0.0.1:9", "char-a")},
            retries=0,
            timeout=0.5,
        )
        corpus = tmp_path / "corpus.jsonl"
        corpus.write_text('{"prompt_id": "0", "prompt": "p", "y_w": "a", "y_l": "b"}\n')
        result = extract_logprobs(str(corpus), job, str(tmp_path / "o.jsonl"), str(tmp_path / "r.jsonl"))
        assert result.emitted == 0 and result.rejected == 1
        row = json.loads((tmp_path / "r.jsonl").read_text())
        assert row["error"] == "EndpointUnreachable"
