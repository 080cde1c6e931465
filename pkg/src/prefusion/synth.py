"""Synthetic records and datasets for verification and toy training.

Two generators live here: fully random records (for gradient checks and
identity tests, where only schema validity matters) and a constructed toy
preference dataset in which frozen source columns encode the true pair
ordering while the pivot starts uninformed. The constructed dataset gives
the stability switches something real to do: source "tokenizers" differ in
granularity, so raw log-prob sums are incomparable without length
normalization, and one adversarial source orders pairs backwards, which
clipping against the initial pivot suppresses.
"""

from __future__ import annotations

import numpy as np

from .records import ModelRoster, ModelScore, PreferenceRecord, ScoredResponse
from .toylm import ToyModelParams, model_logprob


def random_record(
    rng: np.random.Generator,
    roster: ModelRoster,
    with_ws: bool = False,
    max_len: int = 8,
) -> PreferenceRecord:
    """A schema-valid record with independent random scores per model."""

    def response(tag):
        per_model = {}
        for mid in roster.all_ids:
            length = int(rng.integers(1, max_len + 1))
            per_model[mid] = ModelScore(float(-rng.uniform(0.0, 3.0) * length), length)
        return ScoredResponse(text=tag, per_model=per_model)

    return PreferenceRecord(
        prompt_id=str(int(rng.integers(0, 10_000))),
        y_w=response("w"),
        y_l=response("l"),
        y_ws=response("ws") if with_ws else None,
    )


ABLATION_ROSTER = ModelRoster(
    pivot_id="pivot",
    init_pivot_id="pivot_init",
    source_ids=("src_fine", "src_coarse", "src_anti"),
)


def make_ablation_dataset(
    seed: int,
    n_records: int,
    vocab_size: int = 4,
    max_len: int = 4,
    num_contexts: int = 2,
):
    """Toy preference pairs whose source columns encode the true ordering.

    A random "teacher" table defines response quality. Two faithful
    sources report the teacher's per-token log-probs through different
    tokenizer granularities (1x and 3x token counts); a third source is
    the teacher inverted, preferring the worse response. The pivot and
    init-pivot columns start uniform.

    Returns (records, roster, init_params).
    """
    rng = np.random.default_rng(seed)
    teacher = ToyModelParams(vocab_size, max_len, history_order=1, num_contexts=num_contexts)
    teacher.scores = rng.normal(0.0, 2.0, size=teacher.scores.shape)
    init = ToyModelParams(vocab_size, max_len, history_order=1, num_contexts=num_contexts)

    def scored(ctx, tokens):
        _, teacher_lp = model_logprob(teacher, ctx, tokens)
        _, init_lp = model_logprob(init, ctx, tokens)
        n = len(tokens)
        teacher_nlp = teacher_lp / n
        # decreasing in teacher quality, kept <= 0
        anti_nlp = min(-(8.0 + teacher_nlp), 0.0)
        per_model = {
            "pivot": ModelScore(init_lp, n),
            "pivot_init": ModelScore(init_lp, n),
            # same normalized value, different tokenizer granularity
            "src_fine": ModelScore(teacher_nlp * n, n),
            "src_coarse": ModelScore(teacher_nlp * 3 * n, 3 * n),
            "src_anti": ModelScore(anti_nlp * n, n),
        }
        return ScoredResponse(text=",".join(map(str, tokens)), per_model=per_model), teacher_nlp

    records = []
    for i in range(n_records):
        ctx = int(rng.integers(0, num_contexts))
        length_a = int(rng.integers(2, max_len + 1))
        length_b = int(rng.integers(2, max_len + 1))
        seq_a = [int(t) for t in rng.integers(0, vocab_size, size=length_a)]
        seq_b = [int(t) for t in rng.integers(0, vocab_size, size=length_b)]
        if seq_a == seq_b:
            continue
        resp_a, q_a = scored(ctx, seq_a)
        resp_b, q_b = scored(ctx, seq_b)
        if q_a >= q_b:
            y_w, y_l = resp_a, resp_b
        else:
            y_w, y_l = resp_b, resp_a
        records.append(PreferenceRecord(prompt_id=str(ctx), y_w=y_w, y_l=y_l))
    return records, ABLATION_ROSTER, init
