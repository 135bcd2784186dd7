"""Exact and Monte Carlo checks at desk scale.

Single-message boundedness and its Fourier structure, closeness of the label
law under a bounded set (diagnostic), the closed-form spectrum of a labelled
forest, a set of auxiliary inequalities and a drift-process exceedance check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable

import numpy as np
from scipy.special import gammaln

from ..bitcube import (
    CubeFunction,
    Spectrum,
    check_bounded,
    fwht,
    indicator_spectrum,
    kkl_level_profile,
    weights,
    wht_forward,
)
from ..dihp.forest import ContradictionError, Forest, LabeledEdge
from ..matchings import Matching, matching_images, sample_matching
from ..stats import proportion_se

# ---- single message ---------------------------------------------------------


def lift_table(M: Matching) -> np.ndarray:
    """M^T w for every edge subset w in [0, 2^|M|)."""
    w = np.arange(1 << M.size, dtype=np.int64)
    v = np.zeros_like(w)
    for j, mask in enumerate(M.edge_masks()):
        v |= np.where((w >> j) & 1 == 1, mask, 0)
    return v


def preimage_set(M: Matching, reduced: np.ndarray) -> CubeFunction:
    """Indicator of B = {x : Mx in A_red}, with A_red given as an indicator on 2^|M| points."""
    images = matching_images(M)
    return CubeFunction(M.n, np.asarray(reduced, dtype=float)[images])


def structure_mismatch(M: Matching, reduced: np.ndarray) -> tuple[bool, int]:
    """Compare B's hat spectrum with the lifted spectrum of A_red.

    Returns (exact match, number of nonzero coefficients of B). Both spectra
    are dyadic rationals, so the comparison is exact equality.
    """
    b_hat = wht_forward(preimage_set(M, reduced)).coeffs
    q_hat = fwht(np.asarray(reduced, dtype=float)) / float(1 << M.size)
    expected = np.zeros(1 << M.n)
    expected[lift_table(M)] = q_hat
    support = int(np.count_nonzero(b_hat))
    return bool(np.array_equal(b_hat, expected)), support


def random_reduced_set(size_bits: int, s_star: int, rng: np.random.Generator) -> np.ndarray:
    """Random A_red in {0,1}^size_bits with density at least 2^-s_star.

    The size is log-uniform between the density threshold and the full space.
    """
    total = 1 << size_bits
    low = max(1, math.ceil(total * 2.0**-s_star))
    size = int(round(math.exp(rng.uniform(math.log(low), math.log(total)))))
    size = min(max(size, low), total)
    out = np.zeros(total)
    out[rng.choice(total, size=size, replace=False)] = 1.0
    return out


@dataclass(frozen=True)
class SingleMessageRow:
    trial: int
    reduced_size: int
    bounded: bool
    structure: bool
    support: int
    odd_mass: float
    worst_margin: float  # min over levels of log bound - log mass


@dataclass(frozen=True)
class SingleMessageReport:
    n: int
    alpha_n: int
    s_star: int
    C: float
    trials: int
    bounded_failures: int
    structure_failures: int
    max_odd_mass: float
    worst_margin: float
    rows: tuple[SingleMessageRow, ...] = field(repr=False)

    @property
    def passed(self) -> bool:
        return self.bounded_failures == 0 and self.structure_failures == 0 and self.max_odd_mass == 0.0


def check_single_message(n: int, alpha_n: int, s_star: int, trials: int, rng: np.random.Generator,
                         C: float = 3.0) -> SingleMessageReport:
    """One uniform matching and one dense A_red per trial; B = {x : Mx in A_red}.

    Checks (C, s*)-boundedness of B, that B's spectrum is the lift of A_red's,
    and that odd-weight mass vanishes.
    """
    if n > 20:
        raise ValueError("single-message check needs n <= 20")
    rows = []
    for t in range(trials):
        M = sample_matching(n, alpha_n, rng)
        reduced = random_reduced_set(alpha_n, s_star, rng)
        B = preimage_set(M, reduced)
        rep = check_bounded(indicator_spectrum(B), C, s_star)
        ok_struct, support = structure_mismatch(M, reduced)
        margins = [r.log_bound - r.log_l1 for r in rep.per_level]
        rows.append(SingleMessageRow(t, int(reduced.sum()), rep.overall, ok_struct, support, rep.odd_mass,
                                     min(margins, default=math.inf)))
    return SingleMessageReport(
        n, alpha_n, s_star, C, trials,
        sum(not r.bounded for r in rows), sum(not r.structure for r in rows),
        max((r.odd_mass for r in rows), default=0.0),
        min((r.worst_margin for r in rows), default=math.inf), tuple(rows),
    )


# ---- label law under a bounded set (diagnostic) -----------------------------


def label_deviation(B: CubeFunction, M: Matching) -> float:
    """max_z |2^|M| Pr_{x ~ Unif(B)}[Mx = z] - 1|."""
    members = np.flatnonzero(B.values)
    if members.size == 0:
        raise ValueError("B is empty")
    counts = np.bincount(matching_images(M)[members], minlength=1 << M.size)
    return float(np.abs(counts * (float(1 << M.size) / members.size) - 1.0).max())


@dataclass(frozen=True)
class ClosenessReport:
    n: int
    alpha_n: int
    s_star: int
    C: float
    delta: float
    trials: int
    within: int
    fraction_within: float
    max_deviation: float
    set_bounded: bool
    preconditions_met: bool
    deviations: tuple[float, ...] = field(repr=False)


def check_pdf_closeness(n: int, alpha_n: int, s_star: int, C: float, delta: float, trials: int,
                        rng: np.random.Generator, B: CubeFunction | None = None) -> ClosenessReport:
    """Fraction of sampled matchings whose label law under Unif(B) is delta-close to uniform.

    Without an explicit B, a dense random set is drawn. The report records
    whether B is (C, s*)-bounded and whether the size preconditions
    (s* >= 10 ln(n+1), s* <= delta^4 n / C^2) hold; it never fails on its own.
    """
    if n > 20:
        raise ValueError("closeness check needs n <= 20")
    if B is None:
        B = CubeFunction(n, random_reduced_set(n, s_star, rng))
    if B.support_size() < 2.0 ** (n - s_star):
        raise ValueError("B is sparser than 2^-s*")
    bounded = check_bounded(indicator_spectrum(B), C, s_star).overall
    pre = s_star >= 10 * math.log(n + 1) and s_star <= delta**4 * n / C**2
    devs = [label_deviation(B, sample_matching(n, alpha_n, rng)) for _ in range(trials)]
    within = sum(d <= delta for d in devs)
    return ClosenessReport(n, alpha_n, s_star, C, delta, trials, within, within / max(trials, 1),
                           max(devs, default=0.0), bounded, pre, tuple(devs))


# ---- labelled forest spectrum -----------------------------------------------


def _as_forest(F: Forest | Iterable, n: int | None) -> Forest:
    if isinstance(F, Forest):
        return F
    if n is None:
        raise ValueError("n is required when passing an edge list")
    edges = [(e.a, e.b, e.label) if isinstance(e, LabeledEdge) else tuple(e) for e in F]
    return Forest.from_edges(n, edges, strict=True)


def forest_constraint_set(n: int, edges: Iterable) -> CubeFunction:
    """Brute-force indicator of {x : x_a xor x_b = w_e for every edge}."""
    x = np.arange(1 << n, dtype=np.int64)
    keep = np.ones(1 << n, dtype=bool)
    for e in edges:
        a, b, lab = (e.a, e.b, e.label) if isinstance(e, LabeledEdge) else e
        keep &= (((x >> a) ^ (x >> b)) & 1) == (lab & 1)
    return CubeFunction(n, keep.astype(float))


def component_spectrum(F: Forest | Iterable, n: int | None = None) -> Spectrum:
    """Tilde spectrum of the set cut out by a labelled forest, in closed form.

    A coefficient v is nonzero exactly when v meets every component (isolated
    vertices included) in an even number of vertices. Pairing the vertices of
    v inside each tree by paths selects the edges whose lower subtree holds
    an odd number of them, and the coefficient is (-1) to the sum of those
    edges' labels.
    """
    forest = _as_forest(F, n)
    n = forest.n
    if n > 20:
        raise ValueError("component spectrum needs n <= 20")
    v = np.arange(1 << n, dtype=np.int64)
    w = weights(n)
    adj: dict[int, list[tuple[int, int]]] = {}
    for e in forest.edges():
        adj.setdefault(e.a, []).append((e.b, e.label))
        adj.setdefault(e.b, []).append((e.a, e.label))
    admissible = np.ones(1 << n, dtype=bool)
    sign = np.zeros(1 << n, dtype=np.int64)
    covered = 0
    for root in forest.roots():
        comp = forest.members(root)
        comp_mask = sum(1 << u for u in comp)
        covered |= comp_mask
        admissible &= (w[v & comp_mask] & 1) == 0
        # iterative DFS from the component's smallest vertex; subtree masks bottom-up
        start = min(comp)
        order, parent, plabel = [start], {start: -1}, {start: 0}
        for u in order:
            for nb, lab in adj.get(u, ()):
                if nb not in parent:
                    parent[nb] = u
                    plabel[nb] = lab
                    order.append(nb)
        sub = {u: 1 << u for u in order}
        for u in reversed(order[1:]):
            sub[parent[u]] |= sub[u]
            if plabel[u]:
                sign ^= w[v & sub[u]] & 1
    admissible &= (v & ~covered) == 0
    coeffs = np.where(admissible, 1.0 - 2.0 * (sign & 1), 0.0)
    size = 1 << (n - forest.edge_count())
    return Spectrum(n, coeffs, "tilde", size)


# ---- auxiliary inequalities ---------------------------------------------------


@dataclass(frozen=True)
class InequalityRow:
    name: str
    checked: int
    violations: int
    worst_margin: float  # min of (rhs - lhs) in the natural scale of each check


@dataclass(frozen=True)
class MiscReport:
    rows: tuple[InequalityRow, ...]

    @property
    def passed(self) -> bool:
        return all(r.violations == 0 for r in self.rows)


def binom_entropy_check(n_max: int = 200, tol: float = 1e-9) -> InequalityRow:
    """e^{nH(k/n)}/(n+1) <= C(n,k) <= e^{nH(k/n)} for 1 <= n <= n_max, all k, in log form."""
    checked = bad = 0
    worst = math.inf
    for n in range(1, n_max + 1):
        for k in range(n + 1):
            p = k / n
            H = 0.0 if k in (0, n) else -p * math.log(p) - (1 - p) * math.log(1 - p)
            lb = math.log(math.comb(n, k))
            m = min(n * H - lb, lb - (n * H - math.log(n + 1)))
            worst = min(worst, m)
            bad += m < -tol
            checked += 1
    return InequalityRow("binom_entropy", checked, bad, worst)


def factorial_quotient_check(rng: np.random.Generator, a_max: int = 50, random_tuples: int = 20000,
                             tol: float = 1e-9) -> InequalityRow:
    """(S/3m)^S <= prod f_i(a_i) <= S^S with each f_i in {x^x, x!}.

    Exhaustive for m <= 3 and a_i <= a_max, random tuples for m = 4; every
    branch assignment of the f_i is checked.
    """
    a = np.arange(a_max + 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        xlogx = np.where(a > 0, a * np.log(a), 0.0)
    lfact = gammaln(a + 1.0)
    tables = (xlogx, lfact)
    checked = bad = 0
    worst = math.inf

    def run(idx: np.ndarray) -> None:
        nonlocal checked, bad, worst
        m = idx.shape[1]
        S = idx.sum(axis=1).astype(float)
        lo = S * (np.log(S) - math.log(3 * m))
        hi = S * np.log(S)
        for choice in product(range(2), repeat=m):
            mid = sum(tables[c][idx[:, j]] for j, c in enumerate(choice))
            margin = np.minimum(mid - lo, hi - mid)
            worst = min(worst, float(margin.min()))
            bad += int((margin < -tol * np.maximum(1.0, hi)).sum())
            checked += idx.shape[0]

    for m in (1, 2, 3):
        grids = np.meshgrid(*[np.arange(1, a_max + 1)] * m, indexing="ij")
        run(np.stack([g.ravel() for g in grids], axis=1))
    run(rng.integers(1, a_max + 1, size=(random_tuples, 4)))
    return InequalityRow("factorial_quotient", checked, bad, worst)


def partition_check(rng: np.random.Generator, n_max: int = 10, per_n: int = 20) -> InequalityRow:
    """E_x[1/|P_x|] = m / 2^n exactly, for random partitions of the cube."""
    checked = bad = 0
    for n in range(1, n_max + 1):
        N = 1 << n
        for _ in range(per_n):
            parts = int(rng.integers(1, N + 1))
            label = rng.integers(0, parts, size=N)
            sizes = np.bincount(label, minlength=parts)
            m = int(np.count_nonzero(sizes))
            lhs = sum(Fraction(1, int(sizes[lab])) for lab in label) / N
            bad += lhs != Fraction(m, N)
            checked += 1
    return InequalityRow("partition", checked, bad, 0.0)


def cauchy_schwarz_check(rng: np.random.Generator, vectors: int = 2000, tol: float = 1e-12) -> InequalityRow:
    """sum |a_i| <= sqrt(m sum a_i^2) on random and equal-magnitude vectors."""
    checked = bad = 0
    worst = math.inf
    for t in range(vectors):
        m = int(rng.integers(1, 65))
        a = rng.standard_normal(m) if t % 2 == 0 else rng.choice([-1.0, 1.0], size=m) * 3.5
        lhs = float(np.abs(a).sum())
        rhs = math.sqrt(m * float(np.dot(a, a)))
        worst = min(worst, rhs - lhs)
        bad += lhs > rhs * (1 + tol)
        checked += 1
    return InequalityRow("cauchy_schwarz", checked, bad, worst)


def misc_inequalities(rng: np.random.Generator | None = None) -> MiscReport:
    rng = np.random.default_rng(0) if rng is None else rng
    return MiscReport((
        binom_entropy_check(),
        factorial_quotient_check(rng),
        partition_check(rng),
        cauchy_schwarz_check(rng),
    ))


# ---- KKL sweep --------------------------------------------------------------


@dataclass(frozen=True)
class KKLSweep:
    m: int
    sets: int
    checks: int
    failures: int
    worst_l1_ratio: float  # max lhs / rhs
    worst_l2_ratio: float


def kkl_sweep(m: int, sets: int, rng: np.random.Generator, d_max: int = 4) -> KKLSweep:
    """Random sets of density at least 2^-d, every centre y and every level q <= d."""
    checks = fails = 0
    w1 = w2 = 0.0
    for _ in range(sets):
        d = int(rng.integers(1, d_max + 1))
        f = CubeFunction(m, random_reduced_set(m, d, rng))
        for q in range(1, d + 1):
            l1, l2, b1, b2 = kkl_level_profile(f, q, d)
            r1, r2 = l1 / b1, l2 / b2
            w1, w2 = max(w1, float(r1.max())), max(w2, float(r2.max()))
            fails += int(((r1 > 1 + 1e-9) | (r2 > 1 + 1e-9)).sum())
            checks += 1 << m
    return KKLSweep(m, sets, checks, fails, w1, w2)


# ---- drift process ----------------------------------------------------------


@dataclass(frozen=True)
class MartingaleReport:
    m: int
    T: int
    trials: int
    noise: str
    x0: float
    threshold: float
    exceed: int
    frequency: float
    se: float
    bound: float
    drift_ratio: float  # mean of X_k / (X_{k-1} (1 + 1/m + X_{k-1}/m^2))
    drift_se: float

    @property
    def passed(self) -> bool:
        return self.frequency <= self.bound + 3 * self.se and self.drift_ratio <= 1 + 3 * self.drift_se


NOISES = ("none", "drift", "multiplicative", "jump")


def martingale_check(m: int, T: int, trials: int, rng: np.random.Generator, noise: str = "multiplicative",
                     x0: float | None = None) -> MartingaleReport:
    """Processes with E[X_k | X_{k-1}] <= X_{k-1}(1 + 1/m + X_{k-1}/m^2), run for mT steps.

    Reports how often max_k X_k exceeds m/2^T against 2^-T. ``none`` keeps X
    constant, ``drift`` follows the drift bound deterministically,
    ``multiplicative`` multiplies it by a mean-one uniform factor on
    [0.5, 1.5], and ``jump`` by a factor 10 with probability 0.01 (else 0.9/0.99).
    """
    if noise not in NOISES:
        raise ValueError(f"noise must be one of {NOISES}")
    if m * T > 10**6:
        raise ValueError("m*T must be at most 10^6")
    start = 0.5 * m / 100.0**T if x0 is None else float(x0)
    if not 0 < start < m / 100.0**T:
        raise ValueError("x0 must lie in (0, m/100^T)")
    threshold = m / 2.0**T
    x = np.full(trials, start)
    peak = x.copy()
    ratio_sum = ratio_sq = 0.0
    count = 0
    for _ in range(m * T):
        drift = x * (1.0 + 1.0 / m + x / (m * m))
        if noise == "none":
            nxt = x.copy()
        elif noise == "drift":
            nxt = drift
        elif noise == "multiplicative":
            nxt = drift * rng.uniform(0.5, 1.5, size=trials)
        else:
            hit = rng.random(trials) < 0.01
            nxt = drift * np.where(hit, 10.0, 0.9 / 0.99)
        r = nxt / drift
        ratio_sum += float(r.sum())
        ratio_sq += float((r * r).sum())
        count += trials
        x = nxt
        np.maximum(peak, x, out=peak)
    exceed = int((peak > threshold).sum())
    mean = ratio_sum / count
    var = max(ratio_sq / count - mean * mean, 0.0)
    return MartingaleReport(m, T, trials, noise, start, threshold, exceed, exceed / trials,
                            proportion_se(exceed, trials), 2.0**-T, mean, math.sqrt(var / count))


__all__ = [
    "ClosenessReport",
    "ContradictionError",
    "InequalityRow",
    "KKLSweep",
    "MartingaleReport",
    "MiscReport",
    "SingleMessageReport",
    "binom_entropy_check",
    "cauchy_schwarz_check",
    "check_pdf_closeness",
    "check_single_message",
    "component_spectrum",
    "factorial_quotient_check",
    "forest_constraint_set",
    "kkl_sweep",
    "label_deviation",
    "lift_table",
    "martingale_check",
    "misc_inequalities",
    "partition_check",
    "preimage_set",
    "random_reduced_set",
    "structure_mismatch",
]
