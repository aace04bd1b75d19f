"""Rate-quality curve models and resolution cross-over search.

Per-resolution (bitrate, quality) samples live in :class:`RDCurve`.  Two
continuous models are fitted on top of them:

* a four-parameter logistic with the inflection bitrate constrained to
  ``[r_min/2, r_min]``, which keeps the fit monotone and saturating even
  on noisy subjective labels (:func:`fit_logistic`), and
* a shape-preserving monotone cubic interpolant (:func:`fit_pchip`),
  which interpolates the samples exactly and is the standard substrate
  for Bjontegaard-style integrals.

:func:`find_crossover` locates the bitrate where one fitted curve
overtakes another; everything downstream (cross-over benchmarking,
ladder decisions) is built on that primitive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares
from scipy.special import expit

from .errors import InvalidRange, NonFinite, NotEvaluable, TooFewPoints

__all__ = [
    "RDPoint",
    "RDCurve",
    "LogisticParams",
    "PchipCurve",
    "CrossOverResult",
    "STATUS_FOUND",
    "STATUS_NONE",
    "STATUS_MULTIPLE",
    "fit_logistic",
    "eval_logistic",
    "fit_pchip",
    "find_crossover",
]

STATUS_FOUND = "found"
STATUS_NONE = "none"
STATUS_MULTIPLE = "multiple_resolved"

# Smallest admissible slope scale; keeps the logistic evaluable.
_BETA4_FLOOR = 1e-9


@dataclass(frozen=True)
class RDPoint:
    """One (bitrate, quality) sample; bitrate in kbps, quality on any
    higher-is-better scale (JOD or a metric score)."""

    bitrate_kbps: float
    quality: float

    def __post_init__(self):
        if not (math.isfinite(self.bitrate_kbps) and self.bitrate_kbps > 0):
            raise NonFinite(f"bitrate_kbps must be finite and > 0, got {self.bitrate_kbps!r}")
        if not math.isfinite(self.quality):
            raise NonFinite(f"quality must be finite, got {self.quality!r}")


@dataclass(frozen=True)
class RDCurve:
    """Samples of one resolution's rate-quality curve, bitrate-ascending."""

    resolution: tuple[int, int]
    points: tuple[RDPoint, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "resolution", (int(self.resolution[0]), int(self.resolution[1])))
        if len(self.points) < 2:
            raise TooFewPoints(f"an RD curve needs >= 2 points, got {len(self.points)}")
        rates = [p.bitrate_kbps for p in self.points]
        for lo, hi in zip(rates, rates[1:]):
            if not lo < hi:
                raise NonFinite(f"bitrates must be strictly increasing, got {lo} then {hi}")

    @classmethod
    def from_samples(cls, resolution, samples) -> "RDCurve":
        """Build a curve from unordered (bitrate, quality) pairs."""
        pts = sorted((RDPoint(float(b), float(q)) for b, q in samples), key=lambda p: p.bitrate_kbps)
        return cls(tuple(resolution), tuple(pts))

    @property
    def bitrates(self) -> np.ndarray:
        return np.array([p.bitrate_kbps for p in self.points], dtype=float)

    @property
    def qualities(self) -> np.ndarray:
        return np.array([p.quality for p in self.points], dtype=float)

    @property
    def r_min(self) -> float:
        return self.points[0].bitrate_kbps

    @property
    def pixels(self) -> int:
        return self.resolution[0] * self.resolution[1]

    @property
    def label(self) -> str:
        return f"{self.resolution[0]}x{self.resolution[1]}"


@dataclass(frozen=True)
class LogisticParams:
    """Four-parameter logistic fit.

    ``beta1`` is the high-bitrate asymptote, ``beta2`` the low-bitrate
    asymptote, ``beta3`` the inflection bitrate (constrained at fit time
    to ``[r_min/2, r_min]`` of the fitted curve) and ``beta4 > 0`` the
    slope scale.  ``rss`` is the achieved residual sum of squares.
    """

    beta1: float
    beta2: float
    beta3: float
    beta4: float
    rss: float

    def __post_init__(self):
        if not self.beta4 > 0:
            raise NonFinite(f"beta4 must be > 0, got {self.beta4!r}")
        if self.beta1 < self.beta2:
            raise NonFinite("beta1 must be >= beta2 (non-decreasing fit)")

    def evaluate(self, bitrate_kbps):
        return eval_logistic(self, bitrate_kbps)


def eval_logistic(params: LogisticParams, bitrate_kbps):
    """Evaluate the logistic at one bitrate or an array of bitrates."""
    x = np.asarray(bitrate_kbps, dtype=float)
    y = params.beta2 + (params.beta1 - params.beta2) * expit((x - params.beta3) / abs(params.beta4))
    return float(y) if np.isscalar(bitrate_kbps) or x.ndim == 0 else y


def _logistic_residuals(p, x, y):
    b2, delta, b3, b4 = p
    return b2 + delta * expit((x - b3) / b4) - y


def _logistic_jacobian(p, x, y):
    _b2, delta, b3, b4 = p
    s = expit((x - b3) / b4)
    core = delta * s * (1.0 - s)
    jac = np.empty((x.size, 4))
    jac[:, 0] = 1.0
    jac[:, 1] = s
    jac[:, 2] = -core / b4
    jac[:, 3] = -core * (x - b3) / (b4 * b4)
    return jac


def fit_logistic(curve: RDCurve, n_starts: int = 16) -> LogisticParams:
    """Least-squares logistic fit with the inflection constrained to
    ``[r_min/2, r_min]``.

    The model is reparameterized as ``(beta2, delta, beta3, beta4)`` with
    ``delta = beta1 - beta2 >= 0``, which enforces a non-decreasing curve
    by construction.  A fixed grid of ``n_starts`` starting points derived
    from data quantiles is polished with bounded trust-region least
    squares; the best residual wins, ties going to the earlier start, so
    the fit is deterministic.  Starts stop early once a start reaches a
    numerically exact fit.
    """
    if len(curve.points) < 4:
        raise TooFewPoints(f"logistic fit needs >= 4 points, got {len(curve.points)}")
    x = curve.bitrates
    y = curve.qualities

    r_min = curve.r_min
    b3_lo, b3_hi = r_min / 2.0, r_min
    span = float(y.max() - y.min())
    xspan = float(x[-1] - x[0])

    lower = np.array([-np.inf, 0.0, b3_lo, _BETA4_FLOOR])
    upper = np.array([np.inf, np.inf, b3_hi, np.inf])

    b2_starts = (float(y.min()), float(np.quantile(y, 0.25)))
    delta_starts = (span, span / 2.0)
    b3_starts = (b3_lo + 0.25 * (b3_hi - b3_lo), b3_lo + 0.75 * (b3_hi - b3_lo))
    b4_starts = (max(xspan / 4.0, 1.0), max(r_min / 4.0, 1.0))

    starts = []
    for b2 in b2_starts:
        for d in delta_starts:
            for b3 in b3_starts:
                for b4 in b4_starts:
                    starts.append((b2, d, b3, b4))
    starts = starts[:n_starts]

    exact_rss = 1e-16 * max(1.0, float(np.sum(y * y)))
    best = None
    best_rss = np.inf
    for p0 in starts:
        p0 = np.clip(np.asarray(p0, dtype=float), lower, upper)
        sol = least_squares(
            _logistic_residuals,
            p0,
            jac=_logistic_jacobian,
            bounds=(lower, upper),
            args=(x, y),
            method="trf",
            xtol=1e-12,
            ftol=1e-12,
            gtol=1e-12,
            max_nfev=400,
        )
        rss = float(np.sum(sol.fun * sol.fun))
        if rss < best_rss:
            best_rss = rss
            best = sol.x
        if best_rss <= exact_rss:
            break

    b2, delta, b3, b4 = (float(v) for v in best)
    return LogisticParams(beta1=b2 + delta, beta2=b2, beta3=b3, beta4=b4, rss=best_rss)


@dataclass(frozen=True, eq=False)
class PchipCurve:
    """Monotone piecewise-cubic Hermite interpolant through the knots.

    ``coeffs[k]`` holds ``(c0, c1, c2, c3)`` of the cubic in
    ``t = x - knots_x[k]`` on interval ``k``.  Evaluation outside the knot
    range extrapolates with the boundary polynomials.
    """

    knots_x: np.ndarray
    knots_y: np.ndarray
    slopes: np.ndarray
    coeffs: np.ndarray

    def evaluate(self, x):
        xq = np.asarray(x, dtype=float)
        scalar = xq.ndim == 0
        xq = np.atleast_1d(xq)
        idx = np.clip(np.searchsorted(self.knots_x, xq, side="right") - 1, 0, len(self.knots_x) - 2)
        t = xq - self.knots_x[idx]
        c = self.coeffs[idx]
        y = c[:, 0] + t * (c[:, 1] + t * (c[:, 2] + t * c[:, 3]))
        return float(y[0]) if scalar else y

    def integrate(self, a: float, b: float) -> float:
        """Exact definite integral (each cubic piece integrated in closed
        form); ``a > b`` flips the sign."""
        sign = 1.0
        if a > b:
            a, b = b, a
            sign = -1.0
        xs = self.knots_x
        n = len(xs)
        total = 0.0
        # Split [a, b] at interior knots; each chunk lies in one piece.
        cuts = [a] + [float(k) for k in xs if a < k < b] + [b]
        for lo, hi in zip(cuts, cuts[1:]):
            k = int(np.clip(np.searchsorted(xs, lo, side="right") - 1, 0, n - 2))
            c0, c1, c2, c3 = self.coeffs[k]
            t0 = lo - xs[k]
            t1 = hi - xs[k]

            def antideriv(t):
                return t * (c0 + t * (c1 / 2.0 + t * (c2 / 3.0 + t * c3 / 4.0)))

            total += antideriv(t1) - antideriv(t0)
        return sign * total

    __call__ = evaluate


def _pchip_slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Fritsch-Carlson shape-preserving derivative estimates."""
    n = len(x)
    h = np.diff(x)
    d = np.diff(y) / h
    if n == 2:
        return np.array([d[0], d[0]])

    m = np.zeros(n)
    # Interior: weighted harmonic mean when the neighbouring secants share
    # a sign, zero otherwise (flat spot or local extremum).
    for k in range(1, n - 1):
        if d[k - 1] == 0.0 or d[k] == 0.0 or (d[k - 1] > 0) != (d[k] > 0):
            m[k] = 0.0
        else:
            w1 = 2.0 * h[k] + h[k - 1]
            w2 = h[k] + 2.0 * h[k - 1]
            m[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k])

    m[0] = _pchip_edge(h[0], h[1], d[0], d[1])
    m[n - 1] = _pchip_edge(h[-1], h[-2], d[-1], d[-2])
    return m


def _pchip_edge(h0: float, h1: float, d0: float, d1: float) -> float:
    # Three-point one-sided estimate, clamped so the end interval cannot
    # overshoot the local data.
    m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1)
    if np.sign(m) != np.sign(d0):
        return 0.0
    if np.sign(d0) != np.sign(d1) and abs(m) > 3.0 * abs(d0):
        return 3.0 * d0
    return m


def fit_pchip(curve: RDCurve) -> PchipCurve:
    """Shape-preserving cubic interpolant of the curve's samples."""
    if len(curve.points) < 2:
        raise TooFewPoints(f"interpolation needs >= 2 points, got {len(curve.points)}")
    x = curve.bitrates
    y = curve.qualities
    return pchip_from_arrays(x, y)


def pchip_from_arrays(x: np.ndarray, y: np.ndarray) -> PchipCurve:
    """Interpolant over raw arrays (x strictly increasing)."""
    x = np.array(x, dtype=float)  # private copies: the knots get frozen
    y = np.array(y, dtype=float)
    if x.size < 2:
        raise TooFewPoints("interpolation needs >= 2 points")
    if not np.all(np.diff(x) > 0):
        raise NonFinite("interpolation abscissae must be strictly increasing")
    m = _pchip_slopes(x, y)
    h = np.diff(x)
    d = np.diff(y) / h
    c0 = y[:-1]
    c1 = m[:-1]
    c2 = (3.0 * d - 2.0 * m[:-1] - m[1:]) / h
    c3 = (m[:-1] + m[1:] - 2.0 * d) / (h * h)
    coeffs = np.column_stack([c0, c1, c2, c3])
    for arr in (x, y, m, coeffs):
        arr.flags.writeable = False
    return PchipCurve(knots_x=x, knots_y=y, slopes=m, coeffs=coeffs)


@dataclass(frozen=True)
class CrossOverResult:
    """Outcome of a cross-over search between a lower and a higher
    resolution curve on a bitrate range.

    ``status`` is ``found`` for exactly one sign change of the quality
    difference, ``multiple_resolved`` when several crossings exist (the
    lowest-bitrate one is reported), ``none`` otherwise.  Coincident
    curves count as no cross-over.
    """

    bitrate_kbps: float | None
    lower_curve: str
    higher_curve: str
    status: str
    range_lo: float
    range_hi: float
    n_crossings: int = 0

    @property
    def has_bitrate(self) -> bool:
        return self.bitrate_kbps is not None


def _as_evaluator(obj):
    if callable(obj):
        return obj
    ev = getattr(obj, "evaluate", None)
    if ev is not None:
        return ev
    raise NotEvaluable(f"object of type {type(obj).__name__} is not evaluable as a curve")


def find_crossover(
    low,
    high,
    search_range: tuple[float, float],
    low_label: str = "low",
    high_label: str = "high",
    scan_samples: int = 32768,
    bisect_tol_kbps: float = 1e-6,
) -> CrossOverResult:
    """Locate where ``high``'s quality overtakes ``low``'s.

    Both arguments may be fitted parameter sets, interpolants, or plain
    callables of bitrate.  The difference is scanned on a uniform grid to
    bracket sign changes, then each bracket is narrowed by bisection.
    Touching without crossing, or an identically-zero difference, yields
    status ``none``.
    """
    lo, hi = float(search_range[0]), float(search_range[1])
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi or lo <= 0:
        raise InvalidRange(f"invalid search range [{search_range[0]}, {search_range[1]}]")

    f_low = _as_evaluator(low)
    f_high = _as_evaluator(high)

    grid = np.linspace(lo, hi, scan_samples)
    diff = np.asarray(f_high(grid), dtype=float) - np.asarray(f_low(grid), dtype=float)
    signs = np.sign(diff)

    nz = np.flatnonzero(signs != 0.0)
    brackets = []
    for a_idx, b_idx in zip(nz, nz[1:]):
        if signs[a_idx] * signs[b_idx] < 0:
            brackets.append((grid[a_idx], grid[b_idx]))

    if not brackets:
        return CrossOverResult(None, low_label, high_label, STATUS_NONE, lo, hi, 0)

    def g(x):
        return float(f_high(x)) - float(f_low(x))

    a, b = brackets[0]
    ga = g(a)
    while b - a > bisect_tol_kbps:
        mid = 0.5 * (a + b)
        gm = g(mid)
        if gm == 0.0:
            a = b = mid
            break
        if (ga > 0) == (gm > 0):
            a, ga = mid, gm
        else:
            b = mid
    root = 0.5 * (a + b)

    status = STATUS_FOUND if len(brackets) == 1 else STATUS_MULTIPLE
    return CrossOverResult(root, low_label, high_label, status, lo, hi, len(brackets))
