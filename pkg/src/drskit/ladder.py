"""GOP-level resolution statistics and augmented-ladder selection.

``QualityLog`` holds per-GOP quality scores for every (bitrate rung,
resolution) candidate.  ``best_resolution_probability`` counts how often
each resolution wins a rung; the optimizers pick a bounded set of
representations maximizing bandwidth-weighted quality, either exactly
(guarded exhaustive enumeration) or via seeded greedy marginal gains,
which is near-optimal because the per-rung max objective is monotone
submodular.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyInput,
    IncompleteLog,
    InfeasibleK,
    InputError,
    TooManyCandidates,
)

__all__ = [
    "QualityLog",
    "ProbabilityTable",
    "LadderProblem",
    "LadderSolution",
    "GainStep",
    "best_resolution_probability",
    "cumulative_probability",
    "optimize_ladder_exhaustive",
    "optimize_ladder_greedy",
    "weights_from_bandwidth",
    "ladder_objective",
]

Resolution = tuple[int, int]

_EXHAUSTIVE_CANDIDATE_LIMIT = 20


def _res_key(res: Resolution) -> tuple[int, int]:
    return (res[0] * res[1], res[0])


@dataclass(frozen=True, eq=False)
class QualityLog:
    """Dense (GOP, rung, resolution) score array.

    ``gop_ids`` are (content_id, gop_index) pairs in canonical order;
    resolutions are sorted ascending by pixel count.  Missing scores are
    NaN and rejected by any operation that needs them.
    """

    rungs: tuple[float, ...]
    resolutions: tuple[Resolution, ...]
    gop_ids: tuple[tuple[str, int], ...]
    scores: np.ndarray  # (n_gops, n_rungs, n_resolutions)

    @classmethod
    def from_records(cls, records) -> "QualityLog":
        """Build from (content_id, gop_index, bitrate_kbps, resolution,
        score) tuples."""
        records = list(records)
        if not records:
            raise EmptyInput("quality log has no records")
        rungs = tuple(sorted({float(r[2]) for r in records}))
        resolutions = tuple(sorted({(int(r[3][0]), int(r[3][1])) for r in records}, key=_res_key))
        gop_ids = tuple(sorted({(str(r[0]), int(r[1])) for r in records}))
        rung_idx = {b: i for i, b in enumerate(rungs)}
        res_idx = {r: i for i, r in enumerate(resolutions)}
        gop_idx = {g: i for i, g in enumerate(gop_ids)}
        scores = np.full((len(gop_ids), len(rungs), len(resolutions)), np.nan)
        for content, gop, bitrate, res, score in records:
            i = gop_idx[(str(content), int(gop))]
            j = rung_idx[float(bitrate)]
            k = res_idx[(int(res[0]), int(res[1]))]
            if not np.isnan(scores[i, j, k]):
                raise InputError(f"duplicate quality record for {(content, gop, bitrate, res)}")
            scores[i, j, k] = float(score)
        scores.flags.writeable = False
        return cls(rungs, resolutions, gop_ids, scores)

    @property
    def n_gops(self) -> int:
        return len(self.gop_ids)

    def rung_index(self, bitrate: float) -> int:
        try:
            return self.rungs.index(float(bitrate))
        except ValueError:
            raise InputError(f"bitrate {bitrate} is not a rung of this log") from None

    def res_index(self, res: Resolution) -> int:
        try:
            return self.resolutions.index((int(res[0]), int(res[1])))
        except ValueError:
            raise InputError(f"resolution {res} is not in this log") from None


@dataclass(frozen=True, eq=False)
class ProbabilityTable:
    rungs: tuple[float, ...]
    resolutions: tuple[Resolution, ...]
    probabilities: np.ndarray  # (n_rungs, n_resolutions)


def best_resolution_probability(log: QualityLog) -> ProbabilityTable:
    """Share of GOPs at which each resolution has the best score, per
    rung; exact ties go to the lower resolution and are counted once."""
    if np.isnan(log.scores).any():
        raise IncompleteLog("quality log has missing scores")
    n_gops = log.n_gops
    probs = np.zeros((len(log.rungs), len(log.resolutions)))
    for j in range(len(log.rungs)):
        # argmax returns the first maximum; resolutions are ascending, so
        # ties land on the lower one.
        winners = np.argmax(log.scores[:, j, :], axis=1)
        counts = np.bincount(winners, minlength=len(log.resolutions))
        probs[j] = counts / n_gops
    probs.flags.writeable = False
    return ProbabilityTable(log.rungs, log.resolutions, probs)


def cumulative_probability(table: ProbabilityTable) -> ProbabilityTable:
    """Running sum over resolutions in ascending pixel order."""
    cum = np.cumsum(table.probabilities, axis=1)
    cum.flags.writeable = False
    return ProbabilityTable(table.rungs, table.resolutions, cum)


@dataclass(frozen=True)
class LadderProblem:
    """Representation-selection instance: pick at most ``k_max``
    (rung, resolution) pairs, at least one per rung, maximizing the
    bandwidth-weighted sum of per-GOP best scores."""

    log: QualityLog
    weights: dict[float, float]
    k_max: int
    candidates: tuple[tuple[float, Resolution], ...]

    @classmethod
    def build(
        cls,
        log: QualityLog,
        k_max: int,
        weights: dict[float, float] | None = None,
        candidates=None,
    ) -> "LadderProblem":
        if candidates is None:
            cands = [(b, res) for b in log.rungs for res in log.resolutions]
        else:
            cands = [(float(b), (int(r[0]), int(r[1]))) for b, r in candidates]
        cands = sorted(set(cands), key=lambda c: (c[0], _res_key(c[1])))
        rungs = sorted({c[0] for c in cands})
        for rung in log.rungs:
            if rung not in rungs:
                raise InputError(f"rung {rung} of the log has no candidate representation")
        if weights is None:
            weights = {b: 1.0 / len(log.rungs) for b in log.rungs}
        for b in log.rungs:
            if b not in weights:
                raise InputError(f"no weight given for rung {b}")
            if weights[b] < 0 or not math.isfinite(weights[b]):
                raise InputError(f"weight for rung {b} must be finite and >= 0")
        for b, res in cands:
            col = log.scores[:, log.rung_index(b), log.res_index(res)]
            if np.isnan(col).any():
                raise IncompleteLog(f"candidate ({b}, {res}) has missing scores")
        return cls(log, dict(weights), int(k_max), tuple(cands))

    def candidate_column(self, cand: tuple[float, Resolution]) -> np.ndarray:
        b, res = cand
        return self.log.scores[:, self.log.rung_index(b), self.log.res_index(res)]


@dataclass(frozen=True)
class GainStep:
    bitrate_kbps: float
    resolution: Resolution
    gain: float
    objective: float


@dataclass(frozen=True)
class LadderSolution:
    selected: tuple[tuple[float, Resolution], ...]
    objective: float
    trace: tuple[GainStep, ...] = ()

    def rung_map(self) -> dict[float, list[Resolution]]:
        out: dict[float, list[Resolution]] = {}
        for b, res in self.selected:
            out.setdefault(b, []).append(res)
        return out


def ladder_objective(problem: LadderProblem, selected) -> float:
    """Sum over rungs of weight times per-GOP best score among the
    selected representations of that rung."""
    by_rung: dict[float, list[np.ndarray]] = {}
    for cand in selected:
        by_rung.setdefault(cand[0], []).append(problem.candidate_column(cand))
    total = 0.0
    for b in problem.log.rungs:
        cols = by_rung.get(b)
        if not cols:
            raise InputError(f"selection leaves rung {b} empty")
        total += problem.weights[b] * float(np.maximum.reduce(cols).sum())
    return total


def optimize_ladder_exhaustive(problem: LadderProblem) -> LadderSolution:
    """Exact maximizer by enumeration of all feasible selections.

    Guarded to at most 20 candidates.  Enumeration goes by ascending
    selection size, then lexicographic (rung, resolution), and keeps the
    first optimum, which fixes tie-breaking deterministically.
    """
    cands = problem.candidates
    if len(cands) > _EXHAUSTIVE_CANDIDATE_LIMIT:
        raise TooManyCandidates(f"{len(cands)} candidates exceed the exhaustive limit of {_EXHAUSTIVE_CANDIDATE_LIMIT}")
    rungs = problem.log.rungs
    if problem.k_max < len(rungs):
        raise InfeasibleK(f"k_max = {problem.k_max} cannot cover {len(rungs)} rungs")

    cols = np.stack([problem.candidate_column(c) for c in cands], axis=1)
    cand_rungs = [c[0] for c in cands]
    weights = np.array([problem.weights[b] for b in rungs])
    rung_of = {b: i for i, b in enumerate(rungs)}

    best_obj = -np.inf
    best_sel: tuple[int, ...] | None = None
    max_k = min(problem.k_max, len(cands))
    for size in range(len(rungs), max_k + 1):
        for combo in itertools.combinations(range(len(cands)), size):
            covered = {cand_rungs[i] for i in combo}
            if len(covered) != len(rungs):
                continue
            obj = 0.0
            for b in rungs:
                members = [i for i in combo if cand_rungs[i] == b]
                obj += weights[rung_of[b]] * float(np.max(cols[:, members], axis=1).sum())
            if obj > best_obj:
                best_obj = obj
                best_sel = combo
    if best_sel is None:
        raise InfeasibleK("no feasible selection covers every rung")
    return LadderSolution(tuple(cands[i] for i in best_sel), best_obj)


def optimize_ladder_greedy(problem: LadderProblem) -> LadderSolution:
    """Seed each rung with its single best representation, then add the
    candidate with the largest marginal gain until the budget is spent
    or no candidate helps.  The objective never decreases along the
    trace."""
    rungs = problem.log.rungs
    if problem.k_max < len(rungs):
        raise InfeasibleK(f"k_max = {problem.k_max} cannot cover {len(rungs)} rungs")

    by_rung: dict[float, list[tuple[float, Resolution]]] = {}
    for cand in problem.candidates:
        by_rung.setdefault(cand[0], []).append(cand)

    selected: list[tuple[float, Resolution]] = []
    trace: list[GainStep] = []
    current: dict[float, np.ndarray] = {}
    objective = 0.0
    for b in rungs:
        best_cand = None
        best_term = -np.inf
        for cand in by_rung[b]:  # candidates are pre-sorted, ties keep the lower resolution
            term = problem.weights[b] * float(problem.candidate_column(cand).sum())
            if term > best_term:
                best_term = term
                best_cand = cand
        selected.append(best_cand)
        current[b] = problem.candidate_column(best_cand).copy()
        objective += best_term
        trace.append(GainStep(best_cand[0], best_cand[1], best_term, objective))

    while len(selected) < problem.k_max:
        best_cand = None
        best_gain = 0.0
        for cand in problem.candidates:
            if cand in selected:
                continue
            b = cand[0]
            gain = problem.weights[b] * float(
                np.maximum(current[b], problem.candidate_column(cand)).sum() - current[b].sum()
            )
            if gain > best_gain:
                best_gain = gain
                best_cand = cand
        if best_cand is None:
            break
        b = best_cand[0]
        current[b] = np.maximum(current[b], problem.candidate_column(best_cand))
        selected.append(best_cand)
        objective += best_gain
        trace.append(GainStep(best_cand[0], best_cand[1], best_gain, objective))

    selected_sorted = tuple(sorted(selected, key=lambda c: (c[0], _res_key(c[1]))))
    return LadderSolution(selected_sorted, objective, tuple(trace))


def weights_from_bandwidth(samples, rungs) -> dict[float, float]:
    """Histogram session bandwidths onto rungs: each sample goes to the
    highest rung not above it (below the lowest rung maps to the lowest);
    weights are the assigned fractions and sum to 1."""
    samples = np.asarray(list(samples), dtype=float)
    if samples.size == 0:
        raise EmptyInput("no bandwidth samples")
    rungs = sorted(float(b) for b in rungs)
    if not rungs:
        raise EmptyInput("no rungs")
    idx = np.clip(np.searchsorted(rungs, samples, side="right") - 1, 0, len(rungs) - 1)
    counts = np.bincount(idx, minlength=len(rungs))
    return {b: float(counts[i] / samples.size) for i, b in enumerate(rungs)}
