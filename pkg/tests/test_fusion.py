import pytest
from hypothesis import given, strategies as st

from prefusion.errors import EmptySourceList, NonPositiveEps, WeightLengthMismatch, ZeroModels
from prefusion.fusion import (
    FusionWeights,
    ResponseRole,
    clip_logprob,
    fused_logprob,
    weights_average,
    weights_confidence,
    weights_max_margin,
)
from prefusion.records import ModelRoster, ModelScore, PreferenceRecord, ScoredResponse

finite_nlp = st.floats(min_value=-50.0, max_value=0.0, allow_nan=False)


class TestClip:
    @pytest.mark.parametrize(
        "source,init,role,expected",
        [
            (-3.0, -2.0, ResponseRole.PREFERRED, -2.0),
            (-1.0, -2.0, ResponseRole.DISPREFERRED, -2.0),
            (-2.0, -2.0, ResponseRole.PREFERRED, -2.0),
            (-2.0, -2.0, ResponseRole.DISPREFERRED, -2.0),
        ],
    )
    def test_examples(self, source, init, role, expected):
        assert clip_logprob(source, init, role) == expected

    @given(t1=finite_nlp, t2=finite_nlp, init=finite_nlp, role=st.sampled_from(list(ResponseRole)))
    def test_weak_monotonicity(self, t1, t2, init, role):
        lo, hi = min(t1, t2), max(t1, t2)
        assert clip_logprob(lo, init, role) <= clip_logprob(hi, init, role)

    @given(t=finite_nlp, init=finite_nlp)
    def test_clip_direction(self, t, init):
        assert clip_logprob(t, init, ResponseRole.PREFERRED) >= init
        assert clip_logprob(t, init, ResponseRole.DISPREFERRED) <= init


class TestWeightStrategies:
    def test_max_margin_picks_largest_gap(self):
        w = weights_max_margin([-2.5, -1.0, -2.1], pivot_nlp=-2.0)
        assert w.gamma == (0.0, 1.0, 0.0)

    def test_max_margin_single_source(self):
        assert weights_max_margin([-5.0], -1.0).gamma == (1.0,)

    def test_max_margin_tie_breaks_low_index(self):
        assert weights_max_margin([-1.0, -3.0], -2.0).gamma == (1.0, 0.0)

    def test_max_margin_empty(self):
        with pytest.raises(EmptySourceList):
            weights_max_margin([], -1.0)

    @given(
        nlps=st.lists(finite_nlp, min_size=1, max_size=6),
        pivot=finite_nlp,
        shift=st.floats(min_value=-5.0, max_value=5.0, allow_nan=False),
    )
    def test_max_margin_shift_invariance(self, nlps, pivot, shift):
        base = weights_max_margin(nlps, pivot)
        shifted = weights_max_margin([x + shift for x in nlps], pivot + shift)
        assert base.gamma == shifted.gamma

    @pytest.mark.parametrize("n", [1, 3, 4, 7])
    def test_average(self, n):
        w = weights_average(n)
        assert all(g == pytest.approx(1.0 / n) for g in w.gamma)
        assert sum(w.gamma) == pytest.approx(1.0, abs=1e-12)

    def test_average_zero_models(self):
        with pytest.raises(ZeroModels):
            weights_average(0)

    def test_confidence_basic(self):
        w = weights_confidence([-1.0, -3.0], eps=1e-12)
        assert w.gamma[0] == pytest.approx(0.75, abs=1e-9)
        assert w.gamma[1] == pytest.approx(0.25, abs=1e-9)

    def test_confidence_identical_nlps_uniform(self):
        w = weights_confidence([-2.0, -2.0, -2.0])
        assert all(g == pytest.approx(1.0 / 3) for g in w.gamma)

    def test_confidence_eps_shifts(self):
        w = weights_confidence([0.0, -1.0], eps=1.0)
        assert w.gamma == pytest.approx((2.0 / 3, 1.0 / 3))

    def test_confidence_bad_eps(self):
        with pytest.raises(NonPositiveEps):
            weights_confidence([-1.0], eps=0.0)

    @given(nlps=st.lists(finite_nlp, min_size=1, max_size=6))
    def test_strategies_return_simplex_members(self, nlps):
        for w in (
            weights_max_margin(nlps, -1.0),
            weights_average(len(nlps)),
            weights_confidence(nlps),
        ):
            assert all(g >= 0 for g in w.gamma)
            assert abs(sum(w.gamma) - 1.0) <= 1e-12

    def test_max_margin_weights_are_one_hot(self):
        w = weights_max_margin([-1.0, -2.0, -3.0], -1.5)
        assert sorted(w.gamma) == [0.0, 0.0, 1.0]


def record_for(roster, nlps_by_model, lengths=None):
    lengths = lengths or {}

    def resp(tag, idx):
        per_model = {}
        for mid in roster.all_ids:
            n = lengths.get(mid, 1)
            per_model[mid] = ModelScore(nlps_by_model[mid][idx] * n, n)
        return ScoredResponse(tag, per_model)

    return PreferenceRecord("0", resp("w", 0), resp("l", 1))


class TestFusedLogprob:
    def test_single_source_identity(self):
        roster = ModelRoster("p", "i", ("s",))
        rec = record_for(roster, {"p": (-1.0, -2.0), "i": (-1.5, -1.5), "s": (-2.5, -0.5)})
        val = fused_logprob(rec, "y_w", roster, FusionWeights((1.0,)), clipping=False)
        assert val == pytest.approx(-2.5)

    def test_weighted_mean_in_log_space(self):
        roster = ModelRoster("p", "i", ("a", "b"))
        rec = record_for(
            roster, {"p": (-1.0, -1.0), "i": (-1.0, -1.0), "a": (-2.0, -2.0), "b": (-4.0, -4.0)}
        )
        val = fused_logprob(rec, "y_w", roster, FusionWeights((0.5, 0.5)), clipping=False)
        assert val == pytest.approx(-3.0)

    def test_clip_then_weight(self):
        roster = ModelRoster("p", "i", ("a", "b"))
        rec = record_for(
            roster, {"p": (-1.0, -1.0), "i": (-2.0, -2.0), "a": (-3.0, -3.0), "b": (-9.0, -9.0)}
        )
        val = fused_logprob(rec, "y_w", roster, FusionWeights((1.0, 0.0)), clipping=True)
        assert val == pytest.approx(-2.0)  # floored at the init pivot

    def test_uniform_weights_equal_mean(self):
        roster = ModelRoster("p", "i", ("a", "b", "c"))
        rec = record_for(
            roster,
            {"p": (-1.0, -1.0), "i": (-2.0, -2.0), "a": (-1.5, -4.0), "b": (-2.5, -1.0), "c": (-0.5, -6.0)},
        )
        for which, nlps in (("y_w", (-1.5, -2.0, -0.5)), ("y_l", (-4.0, -2.0, -6.0))):
            val = fused_logprob(rec, which, roster, weights_average(3), clipping=True)
            assert val == pytest.approx(sum(nlps) / 3)

    def test_weight_length_mismatch(self):
        roster = ModelRoster("p", "i", ("a", "b"))
        rec = record_for(roster, {"p": (-1.0, -1.0), "i": (-1.0, -1.0), "a": (-1.0, -1.0), "b": (-1.0, -1.0)})
        with pytest.raises(WeightLengthMismatch):
            fused_logprob(rec, "y_w", roster, FusionWeights((1.0,)), clipping=False)

    def test_length_normalization_applied(self):
        roster = ModelRoster("p", "i", ("s",))
        rec = record_for(
            roster,
            {"p": (-1.0, -1.0), "i": (-1.5, -1.5), "s": (-2.0, -3.0)},
            lengths={"s": 4},
        )
        assert fused_logprob(rec, "y_w", roster, FusionWeights((1.0,)), clipping=False) == pytest.approx(-2.0)
        raw = fused_logprob(rec, "y_w", roster, FusionWeights((1.0,)), clipping=False, length_norm=False)
        assert raw == pytest.approx(-8.0)
