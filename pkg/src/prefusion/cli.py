"""Command-line entry point.

Verbs::

    prefusion score   --dataset d.jsonl --config cfg.json --out DIR
    prefusion train   --dataset d.jsonl --config cfg.json --out DIR
    prefusion verify  --fixtures DIR [--seed N]
    prefusion sample  --params p.json --context N --length N --seed N
    prefusion inspect --dataset d.jsonl --config cfg.json

Exit codes: 0 success, 1 validation error, 2 verification failure,
3 I/O error.

Config file (JSON, versioned)::

    {"version": 1,
     "roster": {"pivot_id": "...", "init_pivot_id": "...", "source_ids": [...]},
     "objective": {"objective": "infifpo", "beta": 2.5,
                   "strategy": "max_margin", "length_norm": true,
                   "clipping": true, "alpha": 0.5, "confidence_eps": 1e-8,
                   "margin_granularity": "per_response"},
     "train": {"learning_rate": 0.5, "steps": 500, "batch_size": 32,
               "seed": 42, "momentum": 0.0,
               "init": {"vocab_size": 4, "max_len": 4,
                        "history_order": 1, "num_contexts": 1}}}

``train.init`` may instead be ``{"params_path": "..."}`` to resume from a
saved table. All randomness flows from the manifest seed through named
sub-seeds, so identical inputs give byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import zlib
from collections import Counter

import numpy as np

from .errors import NoFixtures, PrefusionError, ValidationError
from .objectives import ObjectiveConfig, evaluate_record
from .records import ModelRoster, read_jsonl
from .toylm import (
    ToyModelParams,
    TrainConfig,
    load_params,
    sample as toylm_sample,
    save_history_csv,
    save_params,
    train as toylm_train,
)
from .verify import run_verification

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_VERIFY = 2
EXIT_IO = 3

CONFIG_VERSION = 1


def derive_seed(seed: int, name: str) -> int:
    """Named sub-seed so every random consumer hangs off one manifest seed."""
    ss = np.random.SeedSequence([seed, zlib.crc32(name.encode())])
    return int(ss.generate_state(1)[0])


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    if cfg.get("version") != CONFIG_VERSION:
        raise ValidationError(f"unsupported config version {cfg.get('version')!r}")
    return cfg


def roster_from_config(cfg: dict) -> ModelRoster:
    r = cfg.get("roster")
    if not isinstance(r, dict):
        raise ValidationError("config missing roster object", field="roster")
    try:
        return ModelRoster(
            pivot_id=r["pivot_id"],
            init_pivot_id=r["init_pivot_id"],
            source_ids=tuple(r["source_ids"]),
        )
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"bad roster: {exc}", field="roster") from None


def objective_from_config(cfg: dict) -> ObjectiveConfig:
    try:
        return ObjectiveConfig(**cfg.get("objective", {}))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad objective config: {exc}", field="objective") from None


def _write_failed(out_dir, paths):
    # partial output is removed on failure
    for p in paths:
        if os.path.exists(p):
            os.remove(p)


def cmd_score(args) -> int:
    cfg = load_config(args.config)
    roster = roster_from_config(cfg)
    objective = objective_from_config(cfg)
    os.makedirs(args.out, exist_ok=True)
    diag_path = os.path.join(args.out, "diagnostics.jsonl")
    summary_path = os.path.join(args.out, "summary.json")
    losses, disparities, correct = [], [], 0
    histogram = Counter()
    try:
        with open(diag_path, "w", encoding="utf-8") as diag:
            for record in read_jsonl(args.dataset, roster):
                rep = evaluate_record(record, roster, objective)
                losses.append(rep.loss)
                disparities.append(rep.disparity_coeff)
                if rep.pivot_margin > 0:
                    correct += 1
                if rep.selected_source is not None:
                    for which, idx in rep.selected_source.items():
                        histogram[roster.source_ids[idx]] += 1
                out = {"prompt_id": record.prompt_id}
                out.update(rep.as_dict())
                diag.write(json.dumps(out, sort_keys=True) + "\n")
    except ValidationError as exc:
        _write_failed(args.out, [diag_path, summary_path])
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if not losses:
        _write_failed(args.out, [diag_path, summary_path])
        print("error: dataset contains no records", file=sys.stderr)
        return EXIT_VALIDATION
    summary = {
        "records": len(losses),
        "mean_loss": sum(losses) / len(losses),
        "accuracy": correct / len(losses),
        "mean_disparity": sum(disparities) / len(disparities),
        "selection_histogram": dict(sorted(histogram.items())),
    }
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"scored {len(losses)} records; mean loss {summary['mean_loss']:.6f}")
    return EXIT_OK


def _init_params(train_cfg: dict) -> ToyModelParams:
    init = train_cfg.get("init")
    if not isinstance(init, dict):
        raise ValidationError("train config needs an init object", field="train.init")
    if "params_path" in init:
        return load_params(init["params_path"])
    return ToyModelParams(
        vocab_size=init["vocab_size"],
        max_len=init["max_len"],
        history_order=init.get("history_order", 1),
        num_contexts=init.get("num_contexts", 1),
    )


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    roster = roster_from_config(cfg)
    objective = objective_from_config(cfg)
    tc = cfg.get("train")
    if not isinstance(tc, dict):
        raise ValidationError("config missing train object", field="train")
    params = _init_params(tc)
    ramp = tc.get("alpha_ramp")
    train_config = TrainConfig(
        learning_rate=tc["learning_rate"],
        steps=tc["steps"],
        batch_size=tc["batch_size"],
        seed=derive_seed(int(tc["seed"]), "train"),
        objective=objective,
        momentum=tc.get("momentum", 0.0),
        alpha_ramp=tuple(ramp) if ramp else None,
    )
    try:
        dataset = list(read_jsonl(args.dataset, roster))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    trained, history = toylm_train(params, dataset, roster, train_config)
    os.makedirs(args.out, exist_ok=True)
    save_params(trained, os.path.join(args.out, "params.json"))
    save_history_csv(history, os.path.join(args.out, "metrics.csv"))
    final = history[-1]["loss"] if history else float("nan")
    print(f"trained {train_config.steps} steps; final batch loss {final:.6f}")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        results = run_verification(args.fixtures, seed=args.seed)
    except NoFixtures as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    failed = False
    for res in results:
        print(res.line())
        failed = failed or not res.passed
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_sample(args) -> int:
    params = load_params(args.params)
    tokens = toylm_sample(params, args.context, args.length, derive_seed(args.seed, "sample"))
    print(",".join(map(str, tokens)))
    return EXIT_OK


def cmd_inspect(args) -> int:
    cfg = load_config(args.config)
    roster = roster_from_config(cfg)
    count = 0
    with_ws = 0
    try:
        for record in read_jsonl(args.dataset, roster):
            count += 1
            if record.y_ws is not None:
                with_ws += 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(
        json.dumps(
            {"records": count, "with_y_ws": with_ws, "models": list(roster.all_ids)},
            sort_keys=True,
        )
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prefusion", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="evaluate the configured objective over a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("train", help="train the toy model on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("verify", help="run the invariant battery against fixtures")
    p.add_argument("--fixtures", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sample", help="draw a sequence from saved toy params")
    p.add_argument("--params", required=True)
    p.add_argument("--context", type=int, default=0)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("inspect", help="validate a dataset and print summary stats")
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except PrefusionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
