"""Benchmarking an objective quality metric against subjective ground truth.

Given aligned subjective/objective score tables, this module measures how
well the metric reproduces subjective resolution cross-over behaviour:

* ``delta_bitrate`` — absolute bitrate deviation between the subjective
  and the metric-predicted cross-over;
* ``rcql_s`` / ``rcql_avg`` — cumulative and mean quality loss over the
  bitrate interval separating the two cross-overs;
* ``ranking_accuracy`` — concordance of the metric's per-bitrate
  resolution preference with the subjective ranking (Acc), plus the mean
  subjective gap over the misranked comparisons (QL);
* ``correlations`` — SROCC / PLCC over the full table.

``build_report`` wires these together per resolution pair and content.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from .errors import (
    DegenerateInput,
    MismatchedPair,
    NoComparablePairs,
    NotEvaluable,
    TooFewPoints,
)
from .rdmodel import (
    STATUS_NONE,
    CrossOverResult,
    RDCurve,
    find_crossover,
    fit_logistic,
)

__all__ = [
    "ScoredPoint",
    "RcqlReport",
    "PairContentRow",
    "delta_bitrate",
    "rcql_s",
    "rcql_avg",
    "ranking_accuracy",
    "correlations",
    "build_report",
]

DEFAULT_TIE_EPS = 1e-9


@dataclass(frozen=True)
class ScoredPoint:
    """One (content, resolution, bitrate) record with both a subjective
    label and an objective metric score."""

    content_id: str
    resolution: tuple[int, int]
    bitrate_kbps: float
    subjective_jod: float
    objective_score: float


def delta_bitrate(subjective_xover: CrossOverResult, objective_xover: CrossOverResult) -> float:
    """Absolute bitrate deviation between the two cross-overs.

    When exactly one search found a crossing, the deviation is the
    distance from that crossing to the nearer end of the search range;
    when neither found one, the deviation is zero.
    """
    s, o = subjective_xover, objective_xover
    if (s.range_lo, s.range_hi) != (o.range_lo, o.range_hi):
        raise MismatchedPair(
            f"cross-overs evaluated on different ranges: "
            f"[{s.range_lo}, {s.range_hi}] vs [{o.range_lo}, {o.range_hi}]"
        )
    if (s.lower_curve, s.higher_curve) != (o.lower_curve, o.higher_curve):
        raise MismatchedPair(
            f"cross-overs evaluated on different pairs: "
            f"{s.lower_curve}/{s.higher_curve} vs {o.lower_curve}/{o.higher_curve}"
        )
    if s.has_bitrate and o.has_bitrate:
        return abs(s.bitrate_kbps - o.bitrate_kbps)
    if not s.has_bitrate and not o.has_bitrate:
        return 0.0
    b = s.bitrate_kbps if s.has_bitrate else o.bitrate_kbps
    return min(b - s.range_lo, s.range_hi - b)


def _crossings_between(f_low, f_high, a: float, b: float) -> list[float]:
    """Interior sign-change locations of f_high - f_low on (a, b)."""
    if b - a <= 0:
        return []
    probe = find_crossover(f_low, f_high, (a, b), scan_samples=4096)
    if probe.status == STATUS_NONE:
        return []
    # Re-scan all brackets, not just the first crossing.
    grid = np.linspace(a, b, 4096)
    diff = np.asarray(f_high(grid), dtype=float) - np.asarray(f_low(grid), dtype=float)
    signs = np.sign(diff)
    nz = np.flatnonzero(signs != 0.0)
    roots = []
    for i, j in zip(nz, nz[1:]):
        if signs[i] * signs[j] < 0:
            res = find_crossover(f_low, f_high, (grid[i], grid[j]), scan_samples=64)
            if res.has_bitrate:
                roots.append(res.bitrate_kbps)
    return roots


def rcql_s(subjective_low_fit, subjective_high_fit, subj_xover_kbps: float, obj_xover_kbps: float) -> float:
    """Integral of the absolute quality gap between the two subjective
    curves over the interval spanned by the two cross-over bitrates.

    Adaptive quadrature to 1e-8 relative error; the interval is split at
    interior crossings of the gap so each piece is smooth and one-signed.
    Returns 0 for an empty interval.
    """
    for v in (subj_xover_kbps, obj_xover_kbps):
        if v is None or not math.isfinite(v):
            raise NotEvaluable(f"cross-over bitrate is not evaluable: {v!r}")
    a, b = sorted((float(subj_xover_kbps), float(obj_xover_kbps)))
    if a == b:
        return 0.0

    f_low = subjective_low_fit.evaluate if hasattr(subjective_low_fit, "evaluate") else subjective_low_fit
    f_high = subjective_high_fit.evaluate if hasattr(subjective_high_fit, "evaluate") else subjective_high_fit

    cuts = [a] + _crossings_between(f_low, f_high, a, b) + [b]
    total = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        piece, _err = integrate.quad(
            lambda x: float(f_high(x)) - float(f_low(x)), lo, hi, epsrel=1e-10, epsabs=1e-12, limit=200
        )
        total += abs(piece)
    if not math.isfinite(total):
        raise NotEvaluable("quality gap integral did not evaluate to a finite value")
    return total


def rcql_avg(rcql_s_value: float, subj_xover_kbps: float, obj_xover_kbps: float) -> float:
    """Mean quality gap over the cross-over divergence interval; 0 for an
    empty interval."""
    width = abs(float(subj_xover_kbps) - float(obj_xover_kbps))
    if width == 0.0:
        return 0.0
    return float(rcql_s_value) / width


def ranking_accuracy(
    points: list[ScoredPoint],
    tie_eps: float = DEFAULT_TIE_EPS,
    resolutions: tuple[tuple[int, int], tuple[int, int]] | None = None,
) -> tuple[float, float]:
    """Per-bitrate resolution-preference concordance.

    Records of the two resolutions are paired on exact (content, bitrate)
    matches.  Pairs whose subjective gap is within ``tie_eps`` are
    excluded.  Returns ``(acc_percent, ql)`` where ``acc_percent`` is the
    share of pairs on which the objective metric prefers the subjectively
    better resolution, and ``ql`` is the mean subjective gap over the
    misranked pairs (0 if there are none).  An objective tie never counts
    as concordant.
    """
    if resolutions is None:
        seen = sorted({p.resolution for p in points}, key=lambda r: r[0] * r[1])
        if len(seen) != 2:
            raise MismatchedPair(f"expected records of exactly 2 resolutions, found {len(seen)}")
        res_a, res_b = seen
    else:
        res_a, res_b = resolutions

    by_key: dict[tuple[str, float], dict[tuple[int, int], ScoredPoint]] = defaultdict(dict)
    for p in points:
        if p.resolution in (res_a, res_b):
            by_key[(p.content_id, p.bitrate_kbps)][p.resolution] = p

    n_pref = 0
    n_concordant = 0
    discordant_gaps = []
    for key in sorted(by_key):
        pair = by_key[key]
        if res_a not in pair or res_b not in pair:
            continue
        subj_gap = pair[res_a].subjective_jod - pair[res_b].subjective_jod
        if abs(subj_gap) <= tie_eps:
            continue
        n_pref += 1
        obj_gap = pair[res_a].objective_score - pair[res_b].objective_score
        if obj_gap != 0.0 and (obj_gap > 0) == (subj_gap > 0):
            n_concordant += 1
        else:
            discordant_gaps.append(abs(subj_gap))

    if n_pref == 0:
        raise NoComparablePairs("no matched-bitrate pairs with a subjective preference")
    acc = 100.0 * n_concordant / n_pref
    ql = float(np.mean(discordant_gaps)) if discordant_gaps else 0.0
    return acc, ql


def correlations(subjective, objective) -> tuple[float, float]:
    """(SROCC, PLCC) between two equal-length score lists."""
    s = np.asarray(subjective, dtype=float)
    o = np.asarray(objective, dtype=float)
    if s.shape != o.shape or s.ndim != 1:
        raise DegenerateInput("correlation inputs must be 1-D and equal length")
    if s.size < 3:
        raise DegenerateInput(f"correlations need >= 3 samples, got {s.size}")
    if np.ptp(s) == 0.0 or np.ptp(o) == 0.0:
        raise DegenerateInput("correlation input has zero variance")
    srocc = float(stats.spearmanr(s, o).statistic)
    plcc = float(stats.pearsonr(s, o).statistic)
    return srocc, plcc


@dataclass(frozen=True)
class PairContentRow:
    """All cross-over measures for one (resolution pair, content)."""

    pair: str
    content_id: str
    delta_bitrate_kbps: float
    rcql_s: float
    rcql_avg: float
    acc_percent: float | None
    ql_jod: float | None
    subj_status: str
    obj_status: str
    subj_xover_kbps: float | None
    obj_xover_kbps: float | None
    range_lo: float
    range_hi: float
    endpoint_fallback: bool


@dataclass(frozen=True)
class RcqlReport:
    """Per-(pair, content) rows plus per-pair means and dataset-level
    rank correlations."""

    rows: tuple[PairContentRow, ...]
    pair_summary: dict[str, dict[str, float]]
    srocc: float
    plcc: float
    skipped: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "srocc": self.srocc,
            "plcc": self.plcc,
            "pairs": self.pair_summary,
            "rows": [vars(r) | {} for r in self.rows],
            "skipped": list(self.skipped),
        }


def _pair_label(res_lo: tuple[int, int], res_hi: tuple[int, int]) -> str:
    return f"{res_hi[0]}x{res_hi[1]}_vs_{res_lo[0]}x{res_lo[1]}"


def _effective_interval(subj: CrossOverResult, obj: CrossOverResult) -> tuple[float, float, bool] | None:
    """Cross-over interval with a missing side replaced by the nearer
    range endpoint; None when neither side found a crossing."""
    if subj.has_bitrate and obj.has_bitrate:
        return subj.bitrate_kbps, obj.bitrate_kbps, False
    if not subj.has_bitrate and not obj.has_bitrate:
        return None
    b = subj.bitrate_kbps if subj.has_bitrate else obj.bitrate_kbps
    nearer = subj.range_lo if (b - subj.range_lo) <= (subj.range_hi - b) else subj.range_hi
    return b, nearer, True


def build_report(
    points: list[ScoredPoint],
    pairs: list[tuple[tuple[int, int], tuple[int, int]]] | None = None,
    tie_eps: float = DEFAULT_TIE_EPS,
    min_points: int = 4,
) -> RcqlReport:
    """Fit subjective and objective curves per (content, resolution),
    locate both cross-overs per resolution pair, and assemble all
    measures.

    ``pairs`` defaults to adjacent resolutions in pixel-count order.
    Contents missing a resolution, with too few samples, or without an
    overlapping bitrate range are skipped and listed in the report.
    """
    by_content: dict[str, dict[tuple[int, int], list[ScoredPoint]]] = defaultdict(lambda: defaultdict(list))
    seen: dict[tuple[str, tuple[int, int], float], ScoredPoint] = {}
    for p in points:
        key = (p.content_id, p.resolution, p.bitrate_kbps)
        if key in seen:
            raise MismatchedPair(f"duplicate record for {key}")
        seen[key] = p
        by_content[p.content_id][p.resolution].append(p)

    all_res = sorted({p.resolution for p in points}, key=lambda r: r[0] * r[1])
    if pairs is None:
        pairs = list(zip(all_res, all_res[1:]))

    rows: list[PairContentRow] = []
    skipped: list[str] = []
    for res_lo, res_hi in pairs:
        label = _pair_label(res_lo, res_hi)
        for content in sorted(by_content):
            recs = by_content[content]
            if res_lo not in recs or res_hi not in recs:
                skipped.append(f"{label}/{content}: missing a resolution")
                continue
            lo_recs = sorted(recs[res_lo], key=lambda p: p.bitrate_kbps)
            hi_recs = sorted(recs[res_hi], key=lambda p: p.bitrate_kbps)
            if len(lo_recs) < min_points or len(hi_recs) < min_points:
                skipped.append(f"{label}/{content}: fewer than {min_points} samples")
                continue
            rng_lo = max(lo_recs[0].bitrate_kbps, hi_recs[0].bitrate_kbps)
            rng_hi = min(lo_recs[-1].bitrate_kbps, hi_recs[-1].bitrate_kbps)
            if not rng_lo < rng_hi:
                skipped.append(f"{label}/{content}: no overlapping bitrate range")
                continue

            subj_lo = fit_logistic(RDCurve.from_samples(res_lo, [(p.bitrate_kbps, p.subjective_jod) for p in lo_recs]))
            subj_hi = fit_logistic(RDCurve.from_samples(res_hi, [(p.bitrate_kbps, p.subjective_jod) for p in hi_recs]))
            obj_lo = fit_logistic(RDCurve.from_samples(res_lo, [(p.bitrate_kbps, p.objective_score) for p in lo_recs]))
            obj_hi = fit_logistic(RDCurve.from_samples(res_hi, [(p.bitrate_kbps, p.objective_score) for p in hi_recs]))

            lo_label = f"{res_lo[0]}x{res_lo[1]}"
            hi_label = f"{res_hi[0]}x{res_hi[1]}"
            subj_x = find_crossover(subj_lo, subj_hi, (rng_lo, rng_hi), lo_label, hi_label)
            obj_x = find_crossover(obj_lo, obj_hi, (rng_lo, rng_hi), lo_label, hi_label)

            delta = delta_bitrate(subj_x, obj_x)
            interval = _effective_interval(subj_x, obj_x)
            if interval is None:
                s_val, avg, fallback = 0.0, 0.0, False
            else:
                xa, xb, fallback = interval
                s_val = rcql_s(subj_lo, subj_hi, xa, xb)
                avg = rcql_avg(s_val, xa, xb)

            pair_points = lo_recs + hi_recs
            try:
                acc, ql = ranking_accuracy(pair_points, tie_eps=tie_eps, resolutions=(res_lo, res_hi))
            except NoComparablePairs:
                acc, ql = None, None
                skipped.append(f"{label}/{content}: no matched-bitrate comparisons")

            rows.append(
                PairContentRow(
                    pair=label,
                    content_id=content,
                    delta_bitrate_kbps=delta,
                    rcql_s=s_val,
                    rcql_avg=avg,
                    acc_percent=acc,
                    ql_jod=ql,
                    subj_status=subj_x.status,
                    obj_status=obj_x.status,
                    subj_xover_kbps=subj_x.bitrate_kbps,
                    obj_xover_kbps=obj_x.bitrate_kbps,
                    range_lo=rng_lo,
                    range_hi=rng_hi,
                    endpoint_fallback=fallback,
                )
            )

    pair_summary: dict[str, dict[str, float]] = {}
    for res_lo, res_hi in pairs:
        label = _pair_label(res_lo, res_hi)
        pair_rows = [r for r in rows if r.pair == label]
        if not pair_rows:
            continue
        summary = {
            "n_contents": float(len(pair_rows)),
            "delta_bitrate_kbps": float(np.mean([r.delta_bitrate_kbps for r in pair_rows])),
            "rcql_s": float(np.mean([r.rcql_s for r in pair_rows])),
            "rcql_avg": float(np.mean([r.rcql_avg for r in pair_rows])),
        }
        accs = [r.acc_percent for r in pair_rows if r.acc_percent is not None]
        qls = [r.ql_jod for r in pair_rows if r.ql_jod is not None]
        if accs:
            summary["acc_percent"] = float(np.mean(accs))
            summary["ql_jod"] = float(np.mean(qls))
        pair_summary[label] = summary

    subj = [p.subjective_jod for p in points]
    obj = [p.objective_score for p in points]
    srocc, plcc = correlations(subj, obj)
    return RcqlReport(tuple(rows), pair_summary, srocc, plcc, tuple(skipped))
