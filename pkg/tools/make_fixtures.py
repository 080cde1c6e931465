"""Regenerate the checked-in fixtures under fixtures/.

Deterministic: rerunning produces byte-identical files.
"""

import json
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from prefusion.oracle import random_space, space_to_json
from prefusion.records import emit_record
from prefusion.synth import make_ablation_dataset

ROOT = os.path.join(os.path.dirname(__file__), "..", "fixtures")


def main():
    os.makedirs(os.path.join(ROOT, "spaces"), exist_ok=True)

    records, roster, _ = make_ablation_dataset(seed=7, n_records=400)
    with open(os.path.join(ROOT, "toy_ablation.jsonl"), "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(emit_record(record) + "\n")

    rng = np.random.default_rng(2024)
    for i in range(4):
        space = random_space(rng)
        with open(os.path.join(ROOT, "spaces", f"space_{i}.json"), "w", encoding="utf-8") as fh:
            json.dump(space_to_json(space), fh, sort_keys=True)
            fh.write("\n")

    config = {
        "version": 1,
        "roster": {
            "pivot_id": roster.pivot_id,
            "init_pivot_id": roster.init_pivot_id,
            "source_ids": list(roster.source_ids),
        },
        "objective": {
            "objective": "infifpo",
            "beta": 2.5,
            "strategy": "max_margin",
            "length_norm": True,
            "clipping": True,
        },
        "train": {
            "learning_rate": 0.5,
            "steps": 500,
            "batch_size": 32,
            "seed": 42,
            "init": {"vocab_size": 4, "max_len": 4, "history_order": 1, "num_contexts": 2},
        },
    }
    with open(os.path.join(ROOT, "config_infifpo.json"), "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {len(records)} records and 4 spaces under {os.path.abspath(ROOT)}")


if __name__ == "__main__":
    main()
