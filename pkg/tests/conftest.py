import os

import numpy as np
import pytest

from prefusion.records import ModelRoster, ModelScore, PreferenceRecord, ScoredResponse

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "fixtures")


@pytest.fixture
def roster():
    return ModelRoster("pivot", "init", ("s0", "s1", "s2"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_record(roster, values, lengths=None, y_ws=False):
    """Build a record from {model_id: (nlp_w, nlp_l[, nlp_ws])} per-token values.

    lengths maps model_id to token_len (default 1, so lp == nlp).
    """
    lengths = lengths or {}

    def resp(tag, idx):
        per_model = {}
        for mid in roster.all_ids:
            n = lengths.get(mid, 1)
            per_model[mid] = ModelScore(values[mid][idx] * n, n)
        return ScoredResponse(text=tag, per_model=per_model)

    return PreferenceRecord(
        prompt_id="0",
        y_w=resp("w", 0),
        y_l=resp("l", 1),
        y_ws=resp("ws", 2) if y_ws else None,
    )


def fixture_path(*parts):
    return os.path.join(FIXTURES, *parts)
