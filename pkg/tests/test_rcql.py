import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drskit.errors import DegenerateInput, MismatchedPair, NoComparablePairs
from drskit.rcql import (
    ScoredPoint,
    build_report,
    correlations,
    delta_bitrate,
    ranking_accuracy,
    rcql_avg,
    rcql_s,
)
from drskit.rdmodel import CrossOverResult, LogisticParams, eval_logistic

LO = (1280, 720)
HI = (1920, 1080)


def xover(bitrate, status="found", lo=1000.0, hi=10000.0):
    return CrossOverResult(bitrate, "720", "1080", status, lo, hi)


def none_xover(lo=1000.0, hi=10000.0):
    return CrossOverResult(None, "720", "1080", "none", lo, hi)


class TestDeltaBitrate:
    def test_perfect_prediction(self):
        assert delta_bitrate(xover(3000.0), xover(3000.0)) == 0.0

    def test_absolute_difference(self):
        assert delta_bitrate(xover(3000.0), xover(4200.0)) == pytest.approx(1200.0)

    def test_one_missing_uses_nearer_endpoint(self):
        # Found at 3000 on [1000, 10000]: nearer endpoint is 1000, distance 2000.
        assert delta_bitrate(xover(3000.0), none_xover()) == pytest.approx(2000.0)
        assert delta_bitrate(none_xover(), xover(3000.0)) == pytest.approx(2000.0)
        # Nearer endpoint can also be the high end.
        assert delta_bitrate(xover(9000.0), none_xover()) == pytest.approx(1000.0)

    def test_both_missing_is_zero(self):
        assert delta_bitrate(none_xover(), none_xover()) == 0.0

    def test_mismatched_ranges_rejected(self):
        with pytest.raises(MismatchedPair):
            delta_bitrate(xover(3000.0), xover(3000.0, lo=500.0))

    def test_mismatched_pairs_rejected(self):
        a = CrossOverResult(3000.0, "540", "720", "found", 1000.0, 10000.0)
        b = CrossOverResult(3000.0, "720", "1080", "found", 1000.0, 10000.0)
        with pytest.raises(MismatchedPair):
            delta_bitrate(a, b)


class TestRcqlS:
    def test_empty_interval(self):
        lo = LogisticParams(8, 2, 600, 400, 0.0)
        hi = LogisticParams(9, 1, 900, 500, 0.0)
        assert rcql_s(lo, hi, 2000.0, 2000.0) == 0.0

    def test_matches_dense_trapezoid_oracle(self):
        lo = LogisticParams(8, 2, 600, 400, 0.0)
        hi = LogisticParams(9, 1, 900, 500, 0.0)
        got = rcql_s(lo, hi, 2000.0, 3000.0)
        grid = np.linspace(2000.0, 3000.0, 10**6)
        oracle = float(np.trapezoid(np.abs(eval_logistic(hi, grid) - eval_logistic(lo, grid)), grid))
        assert got == pytest.approx(oracle, rel=1e-4)

    def test_symmetric_in_interval_order(self):
        lo = LogisticParams(8, 2, 600, 400, 0.0)
        hi = LogisticParams(9, 1, 900, 500, 0.0)
        assert rcql_s(lo, hi, 2000.0, 3000.0) == pytest.approx(rcql_s(lo, hi, 3000.0, 2000.0), rel=1e-12)

    def test_straddles_a_crossing(self):
        # The two curves cross inside the interval; the integral of the
        # absolute gap must exceed the absolute integral of the signed gap.
        lo = LogisticParams(8, 2, 600, 400, 0.0)
        hi = LogisticParams(9, 1, 900, 500, 0.0)
        from drskit.rdmodel import find_crossover

        x = find_crossover(lo, hi, (1000.0, 10000.0)).bitrate_kbps
        got = rcql_s(lo, hi, x - 500.0, x + 500.0)
        grid = np.linspace(x - 500.0, x + 500.0, 10**6)
        diff = eval_logistic(hi, grid) - eval_logistic(lo, grid)
        oracle_abs = float(np.trapezoid(np.abs(diff), grid))
        oracle_signed = abs(float(np.trapezoid(diff, grid)))
        assert got == pytest.approx(oracle_abs, rel=1e-4)
        assert got > oracle_signed


class TestRcqlAvg:
    def test_definition(self):
        assert rcql_avg(500.0, 2000.0, 3000.0) == pytest.approx(0.5)

    def test_empty_interval(self):
        assert rcql_avg(0.0, 2000.0, 2000.0) == 0.0

    def test_constant_gap(self):
        # Curves separated by a constant 0.3 everywhere average to 0.3.
        lo = LogisticParams(8, 2, 600, 400, 0.0)
        hi = LogisticParams(8.3, 2.3, 600, 400, 0.0)
        s = rcql_s(lo, hi, 1500.0, 4500.0)
        assert rcql_avg(s, 1500.0, 4500.0) == pytest.approx(0.3, rel=1e-9)

    def test_product_identity(self):
        lo = LogisticParams(8, 2, 600, 400, 0.0)
        hi = LogisticParams(9, 1, 900, 500, 0.0)
        s = rcql_s(lo, hi, 2100.0, 3900.0)
        avg = rcql_avg(s, 2100.0, 3900.0)
        assert avg * abs(3900.0 - 2100.0) == pytest.approx(s, rel=1e-9)


def _pair_points(subj_pairs, obj_pairs=None):
    """Build two-resolution ScoredPoints at matched bitrates."""
    obj_pairs = obj_pairs if obj_pairs is not None else subj_pairs
    points = []
    for i, ((s_lo, s_hi), (o_lo, o_hi)) in enumerate(zip(subj_pairs, obj_pairs)):
        b = 1000.0 * (i + 1)
        points.append(ScoredPoint("c", LO, b, s_lo, o_lo))
        points.append(ScoredPoint("c", HI, b, s_hi, o_hi))
    return points


class TestRankingAccuracy:
    def test_oracle_metric(self):
        subj = [(3.0, 4.0), (4.0, 3.5), (5.0, 5.5), (6.0, 6.8)]
        acc, ql = ranking_accuracy(_pair_points(subj))
        assert acc == 100.0
        assert ql == 0.0

    def test_inverted_metric(self):
        subj = [(3.0, 4.0), (4.0, 3.5), (5.0, 5.5)]
        inverted = [(-a, -b) for a, b in subj]
        acc, ql = ranking_accuracy(_pair_points(subj, inverted))
        assert acc == 0.0
        assert ql == pytest.approx(np.mean([1.0, 0.5, 0.5]))

    def test_hand_counted_mix(self):
        # 10 pairs: 7 concordant, 3 discordant with subjective gaps 0.2/0.4/0.6.
        subj, obj = [], []
        for i in range(7):
            subj.append((1.0, 2.0))
            obj.append((1.0, 2.0))
        for gap in (0.2, 0.4, 0.6):
            subj.append((1.0, 1.0 + gap))
            obj.append((2.0, 1.0))
        acc, ql = ranking_accuracy(_pair_points(subj, obj))
        assert acc == pytest.approx(70.0)
        assert ql == pytest.approx(0.4)

    def test_subjective_ties_excluded(self):
        subj = [(1.0, 1.0), (2.0, 3.0)]
        obj = [(9.0, 1.0), (1.0, 2.0)]
        acc, ql = ranking_accuracy(_pair_points(subj, obj))
        assert acc == 100.0
        assert ql == 0.0

    def test_objective_tie_counts_as_discordant(self):
        subj = [(1.0, 2.0)]
        obj = [(5.0, 5.0)]
        acc, ql = ranking_accuracy(_pair_points(subj, obj))
        assert acc == 0.0
        assert ql == pytest.approx(1.0)

    def test_no_comparable_pairs(self):
        points = [ScoredPoint("c", LO, 1000.0, 3.0, 1.0), ScoredPoint("c", HI, 2000.0, 4.0, 2.0)]
        with pytest.raises(NoComparablePairs):
            ranking_accuracy(points)

    @given(
        scale=st.floats(0.1, 10.0),
        shift=st.floats(-5.0, 5.0),
        cube=st.booleans(),
    )
    @settings(max_examples=50, deadline=None)
    def test_invariant_under_increasing_transform(self, scale, shift, cube):
        rng = np.random.default_rng(42)
        subj = [(rng.uniform(0, 9), rng.uniform(0, 9)) for _ in range(12)]
        obj = [(rng.uniform(0, 9), rng.uniform(0, 9)) for _ in range(12)]
        base = ranking_accuracy(_pair_points(subj, obj))

        def t(v):
            v = scale * v + shift
            return v**3 if cube else v

        transformed = [(t(a), t(b)) for a, b in obj]
        assert ranking_accuracy(_pair_points(subj, transformed)) == pytest.approx(base)


class TestCorrelations:
    def test_identity(self):
        s = [1.0, 2.0, 3.0, 4.0]
        assert correlations(s, s) == pytest.approx((1.0, 1.0))

    def test_negation(self):
        s = [1.0, 2.0, 3.0, 4.0]
        srocc, plcc = correlations(s, [-v for v in s])
        assert srocc == pytest.approx(-1.0)
        assert plcc == pytest.approx(-1.0)

    def test_monotone_nonlinear(self):
        s = [1.0, 2.0, 3.0, 4.0, 5.0]
        srocc, plcc = correlations(s, [v**3 for v in s])
        assert srocc == pytest.approx(1.0)
        assert plcc < 1.0

    def test_average_rank_ties(self):
        srocc, _ = correlations([1.0, 2.0, 2.0, 3.0], [1.0, 2.5, 2.5, 4.0])
        assert srocc == pytest.approx(1.0)

    def test_degenerate_inputs(self):
        with pytest.raises(DegenerateInput):
            correlations([1.0, 2.0], [1.0, 2.0])
        with pytest.raises(DegenerateInput):
            correlations([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        with pytest.raises(DegenerateInput):
            correlations([1.0, 2.0, 3.0], [1.0, 2.0])

    def test_plcc_affine_invariance(self):
        rng = np.random.default_rng(1)
        s = rng.uniform(0, 9, 20)
        o = rng.uniform(0, 9, 20)
        base = correlations(s, o)
        shifted = correlations(s, 3.0 * o + 2.0)
        assert shifted == pytest.approx(base)


def make_dataset(objective_from_subjective):
    """Two contents, two resolutions, 6 rungs; subjective curves cross."""
    rng_points = []
    for content, (b3_lo, b3_hi) in (("c1", (500, 800)), ("c2", (550, 850))):
        for b in (1000.0, 1500.0, 2200.0, 3300.0, 5000.0, 7500.0):
            s_lo = 2 + 5.5 / (1 + np.exp(-(b - b3_lo) / 350.0))
            s_hi = 1 + 7.5 / (1 + np.exp(-(b - b3_hi) / 600.0))
            rng_points.append(ScoredPoint(content, LO, b, float(s_lo), objective_from_subjective(float(s_lo))))
            rng_points.append(ScoredPoint(content, HI, b, float(s_hi), objective_from_subjective(float(s_hi))))
    return rng_points


class TestBuildReport:
    def test_oracle_objective_is_perfect(self):
        report = build_report(make_dataset(lambda s: s))
        assert report.srocc == pytest.approx(1.0)
        assert report.plcc == pytest.approx(1.0)
        for row in report.rows:
            assert row.acc_percent == 100.0
            assert row.ql_jod == 0.0
            assert row.delta_bitrate_kbps <= 1.0
            assert row.rcql_s <= 0.01

    def test_monotone_rescaled_objective_keeps_acc(self):
        report = build_report(make_dataset(lambda s: 2.0 * s + 1.0))
        assert report.srocc == pytest.approx(1.0)
        for row in report.rows:
            assert row.acc_percent == 100.0

    def test_missing_resolution_skipped(self):
        points = make_dataset(lambda s: s)
        points = [p for p in points if not (p.content_id == "c2" and p.resolution == HI)]
        report = build_report(points)
        assert any("missing a resolution" in s for s in report.skipped)
        assert {r.content_id for r in report.rows} == {"c1"}

    def test_duplicate_record_rejected(self):
        points = make_dataset(lambda s: s)
        with pytest.raises(MismatchedPair):
            build_report(points + [points[0]])
