"""The invariant battery behind the ``verify`` command.

Each check returns a (name, passed, residual, detail) row; the command
prints one line per row and fails if any row fails. Fixture spaces come
from JSON files; everything else is generated from the given seed.
"""

from __future__ import annotations

import glob
import os
from dataclasses import dataclass

import numpy as np

from . import oracle
from .errors import NoFixtures, PrefusionError
from .fusion import ResponseRole, clip_logprob
from .objectives import OBJECTIVES, ObjectiveConfig, evaluate_record, grad_check
from .records import ModelRoster
from .synth import random_record


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    residual: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        tail = f" ({self.detail})" if self.detail else ""
        return f"[{status}] {self.name}: residual={self.residual:.3e}{tail}"


def check_fixture_spaces(fixtures_dir, seed: int, n_random: int = 10_000):
    search_dir = fixtures_dir
    subdir = os.path.join(fixtures_dir, "spaces")
    if os.path.isdir(subdir):
        search_dir = subdir
    paths = sorted(glob.glob(os.path.join(search_dir, "*.json")))
    if not paths:
        raise NoFixtures(f"no fixture spaces found in {fixtures_dir}")
    results = []
    for i, path in enumerate(paths):
        name = os.path.basename(path)
        try:
            space = oracle.load_space(path)
        except PrefusionError as exc:
            results.append(
                CheckResult(
                    f"fixture load {name}",
                    False,
                    float("nan"),
                    detail=f"{type(exc).__name__}: {exc}",
                )
            )
            continue
        res = oracle.verify_space(space, n_random=n_random, seed=seed + i)
        results.append(
            CheckResult(
                f"oracle optimality {name}",
                res["optimality_gap"] <= 1e-9,
                res["optimality_gap"],
            )
        )
        results.append(
            CheckResult(
                f"oracle normalization {name}",
                res["normalization_residual"] <= 1e-12,
                res["normalization_residual"],
            )
        )
        results.append(
            CheckResult(
                f"reward identity {name}",
                res["reward_offset_spread"] <= 1e-9,
                res["reward_offset_spread"],
            )
        )
    return results


def check_gradients(seed: int, n_records: int = 100, h: float = 1e-5):
    rng = np.random.default_rng(seed)
    roster = ModelRoster("pivot", "init", ("s0", "s1", "s2"))
    results = []
    for objective in OBJECTIVES:
        config = ObjectiveConfig(objective=objective)
        worst = 0.0
        needs_ws = objective in ("wrpo", "infifpo_wrpo")
        for _ in range(n_records):
            record = random_record(rng, roster, with_ws=needs_ws)
            worst = max(worst, grad_check(objective, record, roster, config, h))
        results.append(CheckResult(f"grad check {objective}", worst < 1e-6, worst))
    return results


def check_reduction_identity(seed: int, n_records: int = 200):
    """With one source equal to the init pivot and both switches off, the
    fused objective must coincide with plain DPO."""
    rng = np.random.default_rng(seed)
    roster = ModelRoster("pivot", "init", ("init",))
    fused_cfg = ObjectiveConfig(objective="infifpo", length_norm=False, clipping=False)
    dpo_cfg = ObjectiveConfig(objective="dpo", length_norm=False, clipping=False)
    worst = 0.0
    for _ in range(n_records):
        record = random_record(rng, roster)
        a = evaluate_record(record, roster, fused_cfg)
        b = evaluate_record(record, roster, dpo_cfg)
        worst = max(
            worst,
            abs(a.loss - b.loss),
            abs(a.grad_w - b.grad_w),
            abs(a.grad_l - b.grad_l),
        )
    return [CheckResult("reduction identity fused->dpo", worst <= 1e-12, worst)]


def check_clip_monotonicity(seed: int, n_triples: int = 100_000):
    rng = np.random.default_rng(seed)
    violations = 0
    worst = 0.0
    for _ in range(n_triples):
        t1, t2 = sorted(rng.uniform(-10.0, 0.0, size=2))
        init = float(rng.uniform(-10.0, 0.0))
        role = ResponseRole.PREFERRED if rng.random() < 0.5 else ResponseRole.DISPREFERRED
        gap = clip_logprob(t1, init, role) - clip_logprob(t2, init, role)
        if gap > 0:
            violations += 1
            worst = max(worst, gap)
    return [CheckResult("clip weak monotonicity", violations == 0, worst, f"{violations} violations")]


def run_verification(fixtures_dir, seed: int = 0):
    results = []
    results += check_fixture_spaces(fixtures_dir, seed)
    results += check_gradients(seed + 1)
    results += check_reduction_identity(seed + 2)
    results += check_clip_monotonicity(seed + 3)
    return results
