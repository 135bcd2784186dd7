"""Log-domain evaluation of the mass-transfer sums S0..S3, T1, T2.

The parameters that make these sums meaningful put n far beyond anything that
can be materialized (n > 10^9 C^4 with C > 10^6), so n, C, s*, alpha are plain
numbers here and every factor is a log-gamma expression.

Each sum runs over (k, i). We reparametrize by j = l - k + i (the exponent of
the inner factor) and d = k - i, so d + j = l. Range cut points are exact
integers. A sum with at most ``EXACT_TERMS`` terms is evaluated exactly by
log-sum-exp. A larger sum is first bounded by (largest term) x (term count).
When that does not clear the bound it is bracketed more tightly: d is enumerated (or blocked when the
d-range is long) and each i-range is summed by geometric blocks around the
mode of the summand, which is unimodal in i on the audited ranges. Each block
is bounded by its length times its largest value. The upper end of the
bracket is what gets compared to the bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from ..bitcube import log_bound
from ..logcomb import log_binom, logsumexp

EXACT_TERMS = 200_000
LN2 = math.log(2.0)

# Right-hand-side constants of each sum bound.
#   s0: bound with C' = 15           s1: bound with C' = 1e8 C
#   s2: bound with C' = 1e7 C        s3: the constant 1
#   t1: bound with C' = 1e7 C        t2: ((1e8 C)^2 n / l)^(l/2)
BOUND_CONSTANTS = {
    "s0": ("bound_absolute", 15.0),
    "s1": ("bound_scaled", 1e8),
    "s2": ("bound_scaled", 1e7),
    "s3": ("one", None),
    "t1": ("bound_scaled", 1e7),
    "t2": ("power_scaled", 1e8),
}


def bound_fn(C: float, s_star: float, n: float, level: float) -> float:
    """Natural log of the level bound (0 at level 0, then the two branches)."""
    return log_bound(C, s_star, n, level)


def bound_branch_ratio(C: float, s_star: float, n: float) -> tuple[float, float]:
    """log of (upper branch at s*) / (lower branch at s*), computed two ways.

    First: directly from the two closed forms. Second: from ``bound_fn`` at
    s* and the upper-branch formula. Both should be 0.
    """
    lower = s_star * (math.log(C) + 0.5 * math.log(s_star * n) - math.log(s_star))
    upper = 0.5 * s_star * (2 * math.log(C) + math.log(n) - math.log(s_star))
    return upper - lower, upper - bound_fn(C, s_star, n, s_star)


def _decimal(x: int | float) -> Fraction:
    return Fraction(x) if isinstance(x, int) else Fraction(repr(float(x)))


@dataclass(frozen=True)
class AuditParams:
    n: int | float
    C: int | float
    s_star: int
    alpha: float
    delta: float = 0.1

    @property
    def alpha_n(self) -> int:
        # alpha is read as the decimal it prints as, not its binary expansion
        return math.floor(_decimal(self.alpha) * Fraction(self.n))

    def preconditions(self) -> dict[str, bool]:
        n, C = Fraction(self.n), Fraction(self.C)
        return {
            "P1": self.alpha < 1e-10,
            "P2": C > 10**6,
            "P3": self.s_star < n / (10**9 * C**3),
            "P4": n > 10**9 * C**4,
            "P5": 1 / n < Fraction(self.delta) < Fraction(1, 2),
        }

    @property
    def valid(self) -> bool:
        p = self.preconditions()
        return p["P1"] and p["P2"] and p["P3"] and p["P4"]

    def _cut(self, divisor: int) -> int:
        # exact floor(n / (divisor C^2)), so float rounding cannot shift the ranges
        return math.floor(Fraction(self.n) / (divisor * Fraction(self.C) ** 2))

    def k_low_cut(self) -> int:
        """floor(n / C^2)."""
        return self._cut(1)

    def k_top(self) -> int:
        """floor(n / 100)."""
        return math.floor(Fraction(self.n) / 100)

    def t_level_max(self) -> int:
        """floor(n / (2 C^2))."""
        return self._cut(2)


@dataclass(frozen=True)
class AuditRow:
    family: str
    level: int
    lhs_log: float  # upper estimate compared to the bound
    lhs_log_lower: float
    rhs_log: float
    margin: float
    passed: bool
    exact: bool
    terms: float


@dataclass(frozen=True)
class AuditReport:
    family: str
    params: AuditParams
    rows: tuple[AuditRow, ...]
    preconditions: dict[str, bool]
    asserted: bool  # preconditions P1-P4 hold, so the rows carry pass/fail meaning
    worst_margin: float
    passed: bool
    extra: dict = field(default_factory=dict)


def _tol(rhs: float) -> float:
    return max(1e-9, 1e-12 * abs(rhs))


# ---- summands ---------------------------------------------------------------

def _log_q(p: AuditParams, k: np.ndarray, i: np.ndarray, d: np.ndarray) -> np.ndarray:
    A = float(p.alpha_n)
    return log_binom(A, i) + log_binom(float(p.n) - 2.0 * A, 2.0 * d) - log_binom(float(p.n), 2.0 * k)


def _xlogx_ratio(j: np.ndarray, log_base: float, power: float) -> np.ndarray:
    # power * j * (log_base - log j), with the j = 0 term equal to 0
    with np.errstate(divide="ignore", invalid="ignore"):
        val = power * j * (log_base - np.log(j))
    return np.where(j > 0, val, 0.0)


def _outer_bound(p: AuditParams, k: np.ndarray) -> np.ndarray:
    C, s, n = float(p.C), float(p.s_star), float(p.n)
    with np.errstate(divide="ignore", invalid="ignore"):
        low = k * (math.log(C) + 0.5 * (math.log(s) + math.log(n)) - np.log(k))
        high = 0.5 * k * (2.0 * math.log(C) + math.log(n) - np.log(k))
    return np.where(k == 0, 0.0, np.where(k <= s, low, high))


def _outer_parseval(p: AuditParams, k: np.ndarray) -> np.ndarray:
    return 0.5 * (p.s_star * LN2 + log_binom(float(p.n), 2.0 * k))


def _outer_mid(p: AuditParams, k: np.ndarray) -> np.ndarray:
    C, n = float(p.C), float(p.n)
    return p.s_star * LN2 + 0.5 * k * (2.0 * math.log(C) + math.log(n) - np.log(k))


def _inner_s(p: AuditParams, j: np.ndarray) -> np.ndarray:
    prod = p.s_star * p.alpha_n
    base = math.log(15.0) + 0.5 * (math.log(prod) if prod > 0 else -math.inf)
    return _xlogx_ratio(j, base, 1.0)


def _inner_t(p: AuditParams, j: np.ndarray) -> np.ndarray:
    base = math.log(3 * p.alpha_n) if p.alpha_n > 0 else -math.inf
    return _xlogx_ratio(j, base, 0.5)


@dataclass(frozen=True)
class _Family:
    name: str
    k_range: Callable[[AuditParams, int], tuple[int, int]]
    outer: Callable[[AuditParams, np.ndarray], np.ndarray]
    inner: Callable[[AuditParams, np.ndarray], np.ndarray]


FAMILIES: dict[str, _Family] = {
    "s0": _Family("s0", lambda p, l: (0, 0), _outer_bound, _inner_s),
    "s1": _Family("s1", lambda p, l: (1, 100 * p.s_star), _outer_bound, _inner_s),
    "s2": _Family("s2", lambda p, l: (100 * p.s_star + 1, p.k_low_cut()), _outer_bound, _inner_s),
    "s3": _Family("s3", lambda p, l: (p.k_low_cut(), p.k_top()), _outer_parseval, _inner_s),
    "t1": _Family("t1", lambda p, l: (1, p.k_low_cut()), _outer_mid, _inner_t),
    "t2": _Family("t2", lambda p, l: (p.k_low_cut() + 1, p.k_top()), _outer_parseval, _inner_t),
}


def rhs_log(family: str, p: AuditParams, level: int) -> float:
    kind, const = BOUND_CONSTANTS[family]
    if kind == "one":
        return 0.0
    if kind == "bound_absolute":
        return bound_fn(const, p.s_star, float(p.n), level)
    if kind == "bound_scaled":
        return bound_fn(const * float(p.C), p.s_star, float(p.n), level)
    Cp = const * float(p.C)
    return 0.5 * level * (2.0 * math.log(Cp) + math.log(float(p.n)) - math.log(level))


def _segment_sum(a: int, slope: int, s: int, e: int) -> int:
    """Sum of max(0, a + slope*d) for integer d in [s, e]; slope is -1, 0 or 1."""
    if s > e:
        return 0
    if slope == 0:
        return (e - s + 1) * max(0, a)
    if slope == 1:
        s = max(s, -a)
    else:
        e = min(e, a)
    if s > e:
        return 0
    # arithmetic series of a + slope*d
    return (e - s + 1) * a + slope * (s + e) * (e - s + 1) // 2


def _block_logsum(fn: Callable[[list[int]], np.ndarray], lo: int, hi: int,
                  exact_len: int, ratio: float = 1.5) -> tuple[float, float]:
    """Bracket log sum_{x=lo..hi} exp(fn(x)) for a unimodal log-summand.

    Short ranges are summed exactly. Otherwise the mode is found by a 16-ary
    search on the best probe, and each side is cut into blocks whose
    length grows geometrically with the distance to the mode. A block is
    bounded by its length times the value at its end nearer the mode. If the
    sampled values are not monotone on each side, the bracket falls back to
    max sample times range length.
    """
    if lo > hi:
        return -math.inf, -math.inf
    if hi - lo + 1 <= exact_len:
        v = float(logsumexp(fn(list(range(lo, hi + 1)))))
        return v, v
    a, b = lo, hi
    while b - a > 64:
        xs = [a + (b - a) * q // 16 for q in range(17)]
        m = int(np.argmax(fn(xs)))
        # for a unimodal summand the mode lies between the neighbours of the best probe
        a, b = xs[max(m - 1, 0)], xs[min(m + 1, 16)]
    window = list(range(a, b + 1))
    wv = fn(window)
    mode = window[int(np.argmax(wv))]

    def walk(direction: int, limit: int) -> list[int]:
        pts = [mode]
        while pts[-1] != limit:
            gap = max(1, int(abs(pts[-1] - mode) * (ratio - 1.0)))
            nxt = pts[-1] + direction * gap
            pts.append(min(nxt, limit) if direction > 0 else max(nxt, limit))
        return pts

    right = walk(1, hi)
    left = walk(-1, lo)
    rv = fn(right)
    lv = fn(left)
    lower = float(logsumexp(np.concatenate([rv, lv[1:]])))
    peak = max(float(rv.max()), float(lv.max()))

    def monotone(vals: np.ndarray) -> bool:
        steps = np.diff(vals)
        return bool(np.all(steps <= 1e-9 * np.maximum(1.0, np.abs(vals[1:]))))

    if not (monotone(rv) and monotone(lv)):
        return lower, peak + math.log(hi - lo + 1)
    parts = [float(rv[0])]
    for pts, vals in ((right, rv), (left, lv)):
        for q in range(len(pts) - 1):
            parts.append(float(vals[q]) + math.log(abs(pts[q + 1] - pts[q])))
    upper = float(logsumexp(parts))
    return lower, max(upper, lower)


class _Domain:
    """Lattice points (d, i) with 0 <= d <= D, max(0, k_lo - d) <= i <= min(A, k_hi - d)."""

    # d values enumerated one by one; beyond this the d-direction uses blocks too
    D_ENUM = 64
    I_EXACT = 2048

    def __init__(self, p: AuditParams, fam: _Family, level: int):
        self.p, self.fam, self.level = p, fam, level
        self.k_lo, self.k_hi = fam.k_range(p, level)
        self.A = p.alpha_n
        self.D = min(level, self.k_hi)

    def i_bounds(self, d: int) -> tuple[int, int]:
        return max(0, self.k_lo - d), min(self.A, self.k_hi - d)

    def count(self) -> int:
        """Exact number of lattice points, in integer arithmetic."""
        if self.k_hi < self.k_lo or self.D < 0:
            return 0
        # min(A, k_hi - d) switches at d = k_hi - A; max(0, k_lo - d) at d = k_lo
        cuts = sorted({0, self.D + 1} | {c for c in (self.k_hi - self.A + 1, self.k_lo + 1) if 0 < c <= self.D})
        total = 0
        for s, e in zip(cuts, cuts[1:]):
            e -= 1
            top_const = s <= self.k_hi - self.A  # min is A on this segment
            low_linear = s <= self.k_lo  # max is k_lo - d on this segment
            a = (self.A if top_const else self.k_hi) - (self.k_lo if low_linear else 0) + 1
            slope = (0 if top_const else -1) + (1 if low_linear else 0)
            total += _segment_sum(a, slope, s, e)
        return total

    def empty(self) -> bool:
        return self.count() == 0

    def log_terms(self, d: Sequence[int], i: Sequence[int]) -> np.ndarray:
        lvl = self.level
        d_f = np.array([float(x) for x in d])
        j_f = np.array([float(lvl - x) for x in d])
        i_f = np.array([float(x) for x in i])
        k_f = np.array([float(a + b) for a, b in zip(i, d)])
        p, fam = self.p, self.fam
        return fam.outer(p, k_f) + _log_q(p, k_f, i_f, d_f) + fam.inner(p, j_f)

    def exact_logsum(self) -> float:
        ds, is_ = [], []
        for d in range(self.D + 1):
            lo, hi = self.i_bounds(d)
            if lo <= hi:
                ds.extend([d] * (hi - lo + 1))
                is_.extend(range(lo, hi + 1))
        if not ds:
            return -math.inf
        return float(logsumexp(self.log_terms(ds, is_)))

    def i_sum(self, d: int) -> tuple[float, float]:
        lo, hi = self.i_bounds(d)
        return _block_logsum(lambda xs: self.log_terms([d] * len(xs), xs), lo, hi, self.I_EXACT)

    def _d_range(self) -> tuple[int, int]:
        # d values with a nonempty i-range: k_lo - d <= A and k_hi - d >= 0
        return max(0, self.k_lo - self.A), min(self.D, self.k_hi)

    def bracket(self) -> tuple[float, float]:
        """(lower, upper) for the log of the whole sum."""
        d_lo, d_hi = self._d_range()
        if d_lo > d_hi:
            return -math.inf, -math.inf
        if d_hi - d_lo + 1 <= self.D_ENUM:
            los, ups = zip(*(self.i_sum(d) for d in range(d_lo, d_hi + 1)))
            return float(logsumexp(los)), float(logsumexp(ups))
        cache: dict[int, tuple[float, float]] = {}

        def upper_of(ds: list[int]) -> np.ndarray:
            for d in ds:
                if d not in cache:
                    cache[d] = self.i_sum(d)
            return np.array([cache[d][1] for d in ds])

        _, upper = _block_logsum(upper_of, d_lo, d_hi, self.D_ENUM)
        lower = float(logsumexp([v[0] for v in cache.values()]))
        return lower, upper

    def max_term(self) -> tuple[float, tuple[int, int]]:
        """Largest summand found by a grid search and integer hill climbing."""
        best = (-math.inf, (0, 0))
        d_lo, d_hi = self._d_range()
        if d_lo > d_hi:
            return best
        span = d_hi - d_lo
        ds = sorted({d_lo, d_hi} | {d_lo + span * q // 32 for q in range(33)})
        for d in ds:
            lo, hi = self.i_bounds(d)
            if lo > hi:
                continue
            span_i = hi - lo
            is_ = sorted({lo + span_i * q // 32 for q in range(33)} | {hi})
            vals = self.log_terms([d] * len(is_), is_)
            b = int(np.argmax(vals))
            if vals[b] > best[0]:
                best = (float(vals[b]), (d, is_[b]))
        v0, (d0, i0) = best
        step = max(1, max(span, self.A) // 64)
        while True:
            nd, ni = [], []
            for dd, di in ((step, 0), (-step, 0), (0, step), (0, -step), (step, -step), (-step, step)):
                d1, i1 = d0 + dd, i0 + di
                if d_lo <= d1 <= d_hi:
                    lo, hi = self.i_bounds(d1)
                    if lo <= i1 <= hi:
                        nd.append(d1)
                        ni.append(i1)
            vals = self.log_terms(nd, ni) if nd else np.zeros(0)
            if vals.size and vals.max() > v0:
                b = int(np.argmax(vals))
                d0, i0, v0 = nd[b], ni[b], float(vals[b])
            elif step == 1:
                break
            else:
                step //= 2
        return v0, (d0, i0)


def eval_sum(family: str, p: AuditParams, level: int, exact_terms: int = EXACT_TERMS) -> AuditRow:
    fam = FAMILIES[family]
    dom = _Domain(p, fam, level)
    rhs = rhs_log(family, p, level)
    terms = dom.count()
    if terms == 0:
        lhs = lower = -math.inf
        exact = True
    elif terms <= exact_terms:
        lhs = lower = dom.exact_logsum()
        exact = True
    else:
        # cheap envelope first; refine only when it does not already clear the bound
        lower, _ = dom.max_term()
        lhs = lower + math.log(terms)
        if lhs > rhs + _tol(rhs):
            lower, lhs = dom.bracket()
        exact = False
    margin = rhs - lhs
    return AuditRow(family, level, lhs, lower, rhs, margin, lhs <= rhs + _tol(rhs), exact, float(terms))


def s_levels(p: AuditParams, max_points: int = 24) -> list[int]:
    if p.s_star <= max_points:
        return list(range(1, p.s_star + 1))
    pts = {1, p.s_star, 2, max(1, p.s_star // 2)}
    pts.update(int(round(float(x))) for x in np.geomspace(1.0, float(p.s_star), max_points))
    return sorted(x for x in pts if 1 <= x <= p.s_star)


def t_levels(p: AuditParams, points: int = 12) -> list[int]:
    top = p.t_level_max()
    pts = {p.s_star, 2 * p.s_star, p._cut(4), top}
    pts.update(int(round(float(x))) for x in np.geomspace(float(p.s_star), float(top), points))
    return sorted(x for x in pts if p.s_star <= x <= top)


def _report(family: str, p: AuditParams, levels: Sequence[int]) -> AuditReport:
    rows = tuple(eval_sum(family, p, lvl) for lvl in levels)
    pre = p.preconditions()
    worst = min((r.margin for r in rows), default=math.inf)
    return AuditReport(family, p, rows, pre, p.valid, worst, all(r.passed for r in rows))


def eval_S(j: int, p: AuditParams, levels: Sequence[int] | None = None) -> AuditReport:
    """S_j against its stated bound for levels in [1, s*]."""
    if j not in (0, 1, 2, 3):
        raise ValueError("S sums are numbered 0..3")
    levels = s_levels(p) if levels is None else list(levels)
    if any(not 1 <= lvl <= p.s_star for lvl in levels):
        raise ValueError("S levels must lie in [1, s*]")
    return _report(f"s{j}", p, levels)


def eval_T(j: int, p: AuditParams, levels: Sequence[int] | None = None) -> AuditReport:
    """T_j against its stated bound for levels in [s*, n/(2C^2)]."""
    if j not in (1, 2):
        raise ValueError("T sums are numbered 1..2")
    levels = t_levels(p) if levels is None else list(levels)
    top = p.t_level_max()
    if any(not p.s_star <= lvl <= top for lvl in levels):
        raise ValueError("T levels must lie in [s*, n/(2C^2)]")
    return _report(f"t{j}", p, levels)


# Parameter points satisfying P1-P4, used by the suite and the CLI.
STANDARD_TUPLES: tuple[AuditParams, ...] = (
    AuditParams(10**40, 10**7, 10, 1e-11),
    AuditParams(10**34, 15 * 10**5, 5, 5e-11),
    AuditParams(10**45, 10**8, 100, 1e-12),
    AuditParams(10**36, 2 * 10**6, 1, 9e-11),
    AuditParams(10**60, 10**10, 50, 5e-20),
    AuditParams(10**50, 10**9, 1000, 1e-15),
)
