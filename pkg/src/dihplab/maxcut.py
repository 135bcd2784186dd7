"""MAX-CUT side of the game: reduction, cut evaluation, the gap experiment,
and the concentration bounds it relies on.

Multigraph text format: one edge per line, ``u v multiplicity``; a leading
``n <vertices>`` line fixes the vertex count; ``#`` starts a comment.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import rng as rngmod
from .bitcube import CapacityError
from .dihp.instance import Case, DihpInstance, gen_instance

EXACT_MAX_N = 26
_CHUNK = 1 << 16


@dataclass(frozen=True)
class MultiGraph:
    n: int
    edges: tuple[tuple[int, int, int], ...]  # (u, v, multiplicity), u < v, sorted

    def __post_init__(self) -> None:
        acc: Counter = Counter()
        for u, v, mult in self.edges:
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge {(u, v)} outside [0, {self.n})")
            if mult < 1:
                raise ValueError("multiplicities must be positive")
            acc[(min(u, v), max(u, v))] += int(mult)
        object.__setattr__(self, "edges", tuple((u, v, k) for (u, v), k in sorted(acc.items())))

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "MultiGraph":
        return cls(n, tuple((u, v, 1) for u, v in pairs))

    @property
    def m(self) -> int:
        return sum(k for _, _, k in self.edges)

    @property
    def max_multiplicity(self) -> int:
        return max((k for _, _, k in self.edges), default=0)

    def adjacency(self) -> np.ndarray:
        W = np.zeros((self.n, self.n))
        for u, v, k in self.edges:
            W[u, v] += k
            W[v, u] += k
        return W

    def two_coloring(self) -> list[int] | None:
        """A proper 2-colouring, or None if the graph has an odd cycle."""
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v, _ in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        color = [-1] * self.n
        for start in range(self.n):
            if color[start] >= 0:
                continue
            color[start] = 0
            stack = [start]
            while stack:
                u = stack.pop()
                for v in adj[u]:
                    if color[v] < 0:
                        color[v] = 1 - color[u]
                        stack.append(v)
                    elif color[v] == color[u]:
                        return None
        return color

    def is_bipartite(self) -> bool:
        return self.two_coloring() is not None


def dump_graph(G: MultiGraph) -> str:
    lines = [f"n {G.n}"] + [f"{u} {v} {k}" for u, v, k in G.edges]
    return "\n".join(lines) + "\n"


def load_graph(text: str) -> MultiGraph:
    n = None
    edges = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "n" and len(parts) == 2:
            n = int(parts[1])
            continue
        if len(parts) not in (2, 3):
            raise ValueError(f"bad graph line {raw!r}: expected 'u v [multiplicity]' or 'n N'")
        u, v = int(parts[0]), int(parts[1])
        k = int(parts[2]) if len(parts) > 2 else 1
        edges.append((u, v, k))
    if n is None:
        n = 1 + max((max(u, v) for u, v, _ in edges), default=-1)
    return MultiGraph(n, tuple(edges))


def reduce_to_graph(inst: DihpInstance) -> MultiGraph:
    """Keep every matching edge whose label is 1, accumulating multiplicity."""
    pairs = [e for M, w in zip(inst.matchings, inst.labels) for e, bit in zip(M.edges, w) if bit]
    return MultiGraph.from_pairs(inst.n, pairs)


def _side_mask(S: Iterable[int] | int) -> int:
    if isinstance(S, (int, np.integer)):
        return int(S)
    mask = 0
    for v in S:
        mask |= 1 << int(v)
    return mask


def cut_value(G: MultiGraph, S: Iterable[int] | int) -> int:
    """Edges (with multiplicity) with exactly one endpoint in S; S may be a vertex set or bitmask."""
    mask = _side_mask(S)
    return sum(k for u, v, k in G.edges if (mask >> u ^ mask >> v) & 1)


@lru_cache(maxsize=4)
def _sign_block(width: int) -> np.ndarray:
    # row r holds (+1/-1) for the low ``width`` bits of r
    r = np.arange(1 << width, dtype=np.int64)
    bits = (r[:, None] >> np.arange(width)) & 1
    out = (1 - 2 * bits).astype(np.float32)
    out.setflags(write=False)
    return out


def maxcut_exact(G: MultiGraph) -> tuple[int, frozenset[int]]:
    """Exact maximum cut by enumerating the 2^(n-1) cuts with vertex n-1 on side 0.

    cut(s) = (m - sum_e k_e s_u s_v) / 2 for a sign vector s, evaluated in
    blocks of 2^16 cuts with a dense quadratic form.
    """
    n = G.n
    if n > EXACT_MAX_N:
        raise CapacityError(f"exact max-cut limited to n <= {EXACT_MAX_N}, got {n}")
    if n <= 1 or not G.edges:
        return 0, frozenset()
    free = n - 1
    low = min(free, 16)
    high = free - low
    block = _sign_block(low)  # signs of vertices 0..low-1
    W = G.adjacency().astype(np.float64)
    W_ll = W[:low, :low]
    best_val, best_mask = -1.0, 0
    low_quad = np.einsum("ij,jk,ik->i", block, W_ll, block, optimize=True) / 2.0
    W_lr = W[:low, low:]
    W_rr = W[low:, low:]
    for hi in range(1 << high):
        hb = ((hi >> np.arange(high)) & 1) if high else np.zeros(0, dtype=np.int64)
        rest = np.concatenate([1 - 2 * hb, [1.0]]).astype(np.float64)  # vertices low..n-1, last fixed +1
        cross = block @ (W_lr @ rest)
        rr = rest @ W_rr @ rest / 2.0
        agree = low_quad + cross + rr  # sum_e k_e s_u s_v
        idx = int(np.argmin(agree))
        val = (G.m - agree[idx]) / 2.0
        if val > best_val + 1e-9:
            best_val = val
            best_mask = idx | (int(sum(int(b) << j for j, b in enumerate(hb))) << low)
    value = int(round(best_val))
    side = frozenset(v for v in range(n) if best_mask >> v & 1)
    return value, side


def _local_opt(W: np.ndarray, s: np.ndarray) -> np.ndarray:
    field_ = W @ s
    while True:
        gains = s * field_  # flipping v changes the cut by s_v (W s)_v
        v = int(np.argmax(gains))
        if gains[v] <= 0:
            return s
        s[v] = -s[v]
        field_ += 2.0 * s[v] * W[:, v]


def _greedy_start(G: MultiGraph, W: np.ndarray) -> np.ndarray:
    """BFS order; each vertex joins the side opposite the weighted majority of placed neighbours."""
    s = np.zeros(G.n)
    for root in range(G.n):
        if s[root]:
            continue
        s[root] = 1.0
        queue = [root]
        while queue:
            u = queue.pop(0)
            for v in np.flatnonzero(W[u]):
                if not s[v]:
                    pull = W[v] @ s
                    s[v] = -1.0 if pull > 0 else 1.0
                    queue.append(int(v))
    return s


def maxcut_local(G: MultiGraph, restarts: int, rng: np.random.Generator,
                 init: Iterable[int] | None = None) -> tuple[int, frozenset[int]]:
    """Single-flip local search from a greedy start plus random restarts (a lower bound, always >= m/2).

    The cut splits over connected components, so each component keeps the
    best of its own restricted local optima.
    """
    if not G.edges:
        return 0, frozenset()
    W = G.adjacency()
    _, comp = connected_components(csr_matrix(W), directed=False)
    us = np.array([u for u, _, _ in G.edges])
    vs = np.array([v for _, v, _ in G.edges])
    ks = np.array([k for _, _, k in G.edges], dtype=float)
    ncomp = int(comp.max()) + 1
    starts = [_greedy_start(G, W)]
    if init is not None:
        mask = _side_mask(init)
        starts.append(np.array([-1.0 if mask >> v & 1 else 1.0 for v in range(G.n)]))
    starts += [rng.choice([-1.0, 1.0], size=G.n) for _ in range(max(restarts, 1))]
    best_val = np.full(ncomp, -1.0)
    best_s = np.ones(G.n)
    for s0 in starts:
        s = _local_opt(W, s0.copy())
        crossing = ks * (s[us] != s[vs])
        per_comp = np.bincount(comp[us], weights=crossing, minlength=ncomp)
        better = per_comp > best_val
        best_val[better] = per_comp[better]
        take = better[comp]
        best_s[take] = s[take]
    value = int(round(best_val[best_val > 0].sum()))
    return value, frozenset(int(v) for v in np.flatnonzero(best_s < 0))


def laplacian_upper_bound(G: MultiGraph) -> float:
    """Rigorous spectral bound maxcut <= n lambda_max(L) / 4."""
    if not G.edges:
        return 0.0
    W = G.adjacency()
    L = np.diag(W.sum(axis=1)) - W
    return float(G.n * np.linalg.eigvalsh(L)[-1] / 4.0)


def stream_halfcount(edge_stream: Iterable) -> float:
    """Count the edges and return m/2, a factor-2 estimate of the max cut."""
    m = 0
    for item in edge_stream:
        m += int(item[2]) if len(item) > 2 else 1
    return m / 2.0


@dataclass(frozen=True)
class GapTrial:
    yes_m: int
    yes_maxcut: int
    no_m: int
    no_maxcut: int
    no_exact: bool
    yes_bipartite: bool

    @property
    def ratio(self) -> float:
        return self.yes_maxcut / self.no_maxcut if self.no_maxcut else math.inf


@dataclass(frozen=True)
class GapReport:
    n: int
    alpha_n: int
    T: int
    epsilon: float
    delta: float
    trials: int
    m0: float
    no_threshold: float
    exact: bool
    yes_freq: float  # YES trials with maxcut >= m0
    no_freq: float  # NO trials with maxcut <= m0 / (2 - eps)
    ratio_threshold: float
    ratio_freq: float  # paired trials with YES/NO ratio >= threshold
    mean_ratio: float
    median_ratio: float
    no_normalized: float  # mean NO maxcut / (m/2)
    all_yes_bipartite: bool
    rigorous: bool
    rows: tuple[GapTrial, ...] = field(default=(), repr=False)


def _gap_trial(n: int, alpha_n: int, T: int, exact: bool, restarts: int, seed: int, idx: int) -> GapTrial:
    g = rngmod.stream(seed, idx)
    yes = reduce_to_graph(gen_instance(n, alpha_n, T, Case.YES, g))
    no = reduce_to_graph(gen_instance(n, alpha_n, T, Case.NO, g))
    coloring = yes.two_coloring()
    # a bipartite graph cuts all of its edges
    yes_cut = yes.m if coloring is not None else maxcut_local(yes, restarts, g)[0]
    if exact:
        no_cut = maxcut_exact(no)[0]
    else:
        no_cut = maxcut_local(no, restarts, g)[0]
    return GapTrial(yes.m, yes_cut, no.m, no_cut, exact, coloring is not None)


def gap_experiment(n: int, alpha_n: int, T: int, epsilon: float, trials: int, seed: int,
                   exact: bool | None = None, delta: float | None = None, ratio_threshold: float = 1.7,
                   restarts: int = 20, workers: int | None = None) -> GapReport:
    """Paired YES/NO reductions; m0 = alpha_n T/2 (1 - delta), delta = eps/100 by default.

    In heuristic mode the NO value is a local-search lower bound, so the NO
    side is not certified and the report says ``rigorous=False``.
    """
    if exact is None:
        exact = n <= EXACT_MAX_N
    if exact and n > EXACT_MAX_N:
        raise CapacityError(f"exact mode needs n <= {EXACT_MAX_N}")
    delta = epsilon / 100.0 if delta is None else delta
    m0 = alpha_n * T / 2.0 * (1.0 - delta)
    thr = m0 / (2.0 - epsilon)
    rows = rngmod.map_trials(_gap_trial, [(n, alpha_n, T, exact, restarts, seed, i) for i in range(trials)], workers)
    ratios = np.array([r.ratio for r in rows])
    no_norm = np.array([r.no_maxcut / (r.no_m / 2.0) for r in rows if r.no_m])
    return GapReport(
        n, alpha_n, T, epsilon, delta, trials, m0, thr, exact,
        float(np.mean([r.yes_maxcut >= m0 for r in rows])),
        float(np.mean([r.no_maxcut <= thr for r in rows])),
        ratio_threshold,
        float(np.mean(ratios >= ratio_threshold)),
        float(np.mean(ratios)), float(np.median(ratios)),
        float(no_norm.mean()) if no_norm.size else float("nan"),
        all(r.yes_bipartite for r in rows),
        exact,
        tuple(rows),
    )


def chernoff_bound(mu: float, delta: float) -> float:
    """exp(-Delta^2 / (2 mu + 2 Delta))."""
    if mu <= 0 or delta <= 0:
        raise ValueError("need mu > 0 and Delta > 0")
    return math.exp(-delta * delta / (2.0 * mu + 2.0 * delta))


@dataclass(frozen=True)
class TailReport:
    trials: int
    threshold: float
    empirical: float
    se: float
    bound: float
    vacuous: bool
    passed: bool
    mean: float = float("nan")
    mean_expected: float = float("nan")
    mean_se: float = float("nan")


def chernoff_check(p: float, n: int, trials: int, rng: np.random.Generator,
                   delta_frac: float = 0.1, adaptive: bool = False) -> TailReport:
    """Empirical Pr[X >= mu + Delta] for sums of n bits with E[X_k | past] <= p.

    ``adaptive`` draws bit k with probability p/2 after a 1 and p after a 0,
    so the conditional means depend on the past but never exceed p.
    """
    mu = p * n
    Delta = delta_frac * n
    bound = chernoff_bound(mu, Delta)
    hits = 0
    done = 0
    while done < trials:
        batch = min(20000, trials - done)
        if adaptive:
            prev = np.zeros(batch, dtype=bool)
            total = np.zeros(batch, dtype=np.int64)
            for _ in range(n):
                prob = np.where(prev, p / 2.0, p)
                prev = rng.random(batch) < prob
                total += prev
        else:
            total = rng.binomial(n, p, size=batch)
        hits += int(np.count_nonzero(total >= mu + Delta))
        done += batch
    emp = hits / trials
    se = math.sqrt(max(emp * (1 - emp), 1.0 / trials) / trials)
    return TailReport(trials, mu + Delta, emp, se, bound, bound >= 1.0, emp <= bound + 3 * se)


def random_cut_tail_check(G: MultiGraph, delta: float, trials: int, rng: np.random.Generator) -> TailReport:
    """Empirical Pr[X < m/2 (1 - delta)] for a uniform random cut, against k / (delta^2 m)."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    m = G.m
    k = G.max_multiplicity
    bound = k / (delta * delta * m) if m else math.inf
    us = np.array([u for u, _, _ in G.edges], dtype=np.int64)
    vs = np.array([v for _, v, _ in G.edges], dtype=np.int64)
    ks = np.array([c for _, _, c in G.edges], dtype=np.int64)
    thr = m / 2.0 * (1.0 - delta)
    values = []
    done = 0
    while done < trials:
        batch = min(20000, trials - done)
        sides = rng.integers(0, 2, size=(batch, G.n), dtype=np.int8)
        values.append(((sides[:, us] != sides[:, vs]) * ks).sum(axis=1))
        done += batch
    X = np.concatenate(values) if values else np.zeros(0)
    emp = float(np.mean(X < thr))
    se = math.sqrt(max(emp * (1 - emp), 1.0 / trials) / trials)
    vac = bound > 1.0
    return TailReport(trials, thr, emp, se, bound, vac, vac or emp <= bound + 3 * se,
                      float(X.mean()), m / 2.0, float(X.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0)


def random_multigraph(n: int, m: int, max_mult: int, rng: np.random.Generator) -> MultiGraph:
    """m edges on n vertices with no pair repeated more than max_mult times."""
    counts: Counter = Counter()
    while sum(counts.values()) < m:
        u, v = rng.choice(n, size=2, replace=False)
        key = (int(min(u, v)), int(max(u, v)))
        if counts[key] < max_mult:
            counts[key] += 1
    return MultiGraph(n, tuple((u, v, k) for (u, v), k in counts.items()))


def random_graph(n: int, p: float, rng: np.random.Generator) -> MultiGraph:
    """Simple G(n, p) graph."""
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    return MultiGraph.from_pairs(n, zip(iu[keep].tolist(), ju[keep].tolist()))
