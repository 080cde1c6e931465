"""Gating criterion: every record produced from the shipped sample corpus
passes validation on the consumer side, with zero schema rejects. The
consumer is exercised through its command line only."""

import json
import subprocess
import sys

from prefextract import EndpointSpec, ExtractionJob
from prefextract.cli import main as cli_main
from conftest_helpers import SAMPLE_CORPUS


def report(name, passed, detail=""):
    tag = "PASS" if passed else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{tag}] {name}{suffix}")
    assert passed, f"{name}{suffix}"


ROSTER = {
    "pivot_id": "pivot",
    "init_pivot_id": "pivot_init",
    "source_ids": ["src_a", "src_b"],
}
MODELS = {"pivot": "char-a", "pivot_init": "char-b", "src_a": "char-c", "src_b": "char-d"}


def test_round_trip_through_consumer_cli(server, tmp_path):
    job_path = tmp_path / "job.json"
    job_path.write_text(
        json.dumps(
            {
                "version": 1,
                "endpoints": {rid: {"url": server.url, "model": m} for rid, m in MODELS.items()},
                "batch_size": 4,
            }
        )
    )
    out = tmp_path / "dataset.jsonl"
    rejects = tmp_path / "rejects.jsonl"
    code = cli_main(
        [
            "run",
            "--corpus",
            str(SAMPLE_CORPUS),
            "--job",
            str(job_path),
            "--out",
            str(out),
            "--rejects",
            str(rejects),
        ]
    )
    n_corpus = sum(1 for line in SAMPLE_CORPUS.read_text().splitlines() if line.strip())
    n_rejects = len(rejects.read_text().splitlines())
    report(
        "extraction completes with zero rejects",
        code == 0 and n_rejects == 0,
        f"{n_corpus} corpus rows, {n_rejects} rejects",
    )

    config = tmp_path / "config.json"
    config.write_text(json.dumps({"version": 1, "roster": ROSTER}))
    proc = subprocess.run(
        [sys.executable, "-m", "prefusion.cli", "inspect", "--dataset", str(out), "--config", str(config)],
        capture_output=True,
        text=True,
    )
    accepted = proc.returncode == 0
    records = json.loads(proc.stdout)["records"] if accepted else 0
    report(
        "every emitted record passes consumer-side validation",
        accepted and records == n_corpus,
        f"exit {proc.returncode}, {records}/{n_corpus} records",
    )
