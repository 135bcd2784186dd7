"""Random matchings on [n], their action on the cube, and matching probabilities.

Edges are stored in canonical order (sorted by smaller endpoint). Label
vectors and edge subsets always refer to that order; an edge subset ``w`` is
an int whose bit j selects edge j.

Probability formulas return natural logs (``-inf`` for impossible events).
They are keyed on the matching size ``m_size`` directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb, factorial
from typing import Iterable, Iterator

import numpy as np

from .bitcube import BitVector
from .logcomb import exp_saturating, log_binom

Edge = tuple[int, int]


class DomainError(ValueError):
    """Arguments outside a formula's domain."""


@dataclass(frozen=True)
class Matching:
    n: int
    edges: tuple[Edge, ...]

    def __post_init__(self) -> None:
        canon = tuple(sorted((min(a, b), max(a, b)) for a, b in self.edges))
        seen: set[int] = set()
        for a, b in canon:
            if a == b:
                raise ValueError(f"self-loop at {a}")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"edge {(a, b)} outside [0, {self.n})")
            if a in seen or b in seen:
                raise ValueError(f"edge {(a, b)} shares an endpoint")
            seen.update((a, b))
        object.__setattr__(self, "edges", canon)

    @property
    def size(self) -> int:
        return len(self.edges)

    def __len__(self) -> int:
        return len(self.edges)

    def edge_masks(self) -> list[int]:
        return [(1 << a) | (1 << b) for a, b in self.edges]

    def vertex_mask(self) -> int:
        mask = 0
        for a, b in self.edges:
            mask |= (1 << a) | (1 << b)
        return mask

    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.edges:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        arr = np.asarray(self.edges, dtype=np.int64)
        return arr[:, 0], arr[:, 1]


@dataclass(frozen=True)
class EdgeClassification:
    internal: tuple[Edge, ...]
    boundary: tuple[Edge, ...]
    external: tuple[Edge, ...]


def sample_matching(n: int, size: int, rng: np.random.Generator) -> Matching:
    """Uniform matching with ``size`` edges.

    Draws a uniform injective sequence of 2*size vertices and pairs consecutive
    entries. Every matching corresponds to size! * 2^size sequences, so the
    result is exactly uniform.
    """
    if size < 0 or 2 * size > n:
        raise DomainError(f"cannot place {size} disjoint edges on {n} vertices")
    if size == 0:
        return Matching(n, ())
    seq = rng.choice(n, size=2 * size, replace=False, shuffle=True)
    pairs = seq.reshape(size, 2)
    return Matching(n, tuple((int(a), int(b)) for a, b in pairs))


def sample_edge_sequence(n: int, size: int, rng: np.random.Generator) -> list[Edge]:
    """The sampled edges in sampling order (each uniform given its predecessors)."""
    if size < 0 or 2 * size > n:
        raise DomainError(f"cannot place {size} disjoint edges on {n} vertices")
    seq = rng.choice(n, size=2 * size, replace=False, shuffle=True)
    return [(min(int(a), int(b)), max(int(a), int(b))) for a, b in seq.reshape(size, 2)]


def all_matchings(n: int, size: int) -> Iterator[Matching]:
    """Every matching of the given size on [n] (for exhaustive oracles)."""

    def rec(free: tuple[int, ...], need: int) -> Iterator[list[Edge]]:
        if need == 0:
            yield []
            return
        if len(free) < 2 * need:
            return
        first, rest = free[0], free[1:]
        # first vertex matched
        for j, partner in enumerate(rest):
            remaining = rest[:j] + rest[j + 1:]
            for tail in rec(remaining, need - 1):
                yield [(first, partner)] + tail
        # first vertex left unmatched
        yield from rec(rest, need)

    for edges in rec(tuple(range(n)), size):
        yield Matching(n, tuple(edges))


def _coord_value(x: BitVector | int) -> int:
    return x.value if isinstance(x, BitVector) else int(x)


def apply_matching(M: Matching, x: BitVector | int) -> np.ndarray:
    """Per-edge parities x_a xor x_b, canonical order, as uint8."""
    xv = _coord_value(x)
    return np.fromiter(((xv >> a ^ xv >> b) & 1 for a, b in M.edges), dtype=np.uint8, count=M.size)


def labels_to_int(labels: Iterable[int]) -> int:
    return sum(int(bit) << j for j, bit in enumerate(labels))


def matching_images(M: Matching) -> np.ndarray:
    """Mx (as an edge-subset int) for every x in [0, 2^n)."""
    x = np.arange(1 << M.n, dtype=np.int64)
    z = np.zeros_like(x)
    for j, (a, b) in enumerate(M.edges):
        z |= (((x >> a) ^ (x >> b)) & 1) << j
    return z


def _subset_indices(M: Matching, w: int | Iterable[int]) -> list[int]:
    if isinstance(w, (int, np.integer)):
        w = int(w)
        if w >> M.size:
            raise ValueError("edge subset refers to edges beyond the matching")
        return [j for j in range(M.size) if w >> j & 1]
    idx = sorted(set(int(j) for j in w))
    if idx and (idx[0] < 0 or idx[-1] >= M.size):
        raise ValueError("edge index out of range")
    return idx


def lift_coefficient(M: Matching, w: int | Iterable[int]) -> BitVector:
    """v = M^T w: the union of the chosen edges' endpoints."""
    masks = M.edge_masks()
    v = 0
    for j in _subset_indices(M, w):
        v |= masks[j]
    return BitVector(M.n, v)


def match_restriction(M: Matching, v: BitVector | int) -> int | None:
    """The unique edge subset w with M^T w = v, or None if M does not perfectly match v."""
    vv = _coord_value(v)
    w = 0
    covered = 0
    for j, mask in enumerate(M.edge_masks()):
        if vv & mask == mask:
            w |= 1 << j
            covered |= mask
    return w if covered == vv else None


def classify_edges(M: Matching, v: BitVector | int) -> EdgeClassification:
    vv = _coord_value(v)
    internal, boundary, external = [], [], []
    for a, b in M.edges:
        inside = (vv >> a & 1) + (vv >> b & 1)
        (external, boundary, internal)[inside].append((a, b))
    return EdgeClassification(tuple(internal), tuple(boundary), tuple(external))


def p_match(level: int, n: int, m_size: int) -> float:
    """log Pr[a uniform m_size-matching perfectly matches a fixed 2*level set] = log C(m,l)/C(n,2l)."""
    if level < 0 or 2 * level > n:
        raise DomainError(f"level {level} outside [0, n/2]")
    if m_size < 0 or 2 * m_size > n:
        raise DomainError(f"matching size {m_size} invalid for n={n}")
    return float(log_binom(m_size, level) - log_binom(n, 2 * level))


def _check_qk(k: int, i: int, n: int, m_size: int) -> None:
    if not (0 <= i <= k and 2 * k <= n):
        raise DomainError(f"need 0 <= i <= k <= n/2, got k={k}, i={i}, n={n}")
    if m_size < 0 or 2 * m_size > n:
        raise DomainError(f"matching size {m_size} invalid for n={n}")


def q_match(k: int, i: int, n: int, m_size: int) -> float:
    """log q(k,i,n): exactly i internal and no boundary edges for a fixed 2k-set."""
    _check_qk(k, i, n, m_size)
    return float(log_binom(m_size, i) + log_binom(n - 2 * m_size, 2 * (k - i)) - log_binom(n, 2 * k))


def q_match_b(k: int, i: int, b: int, n: int, m_size: int) -> float:
    """log q(k,i,b,n): exactly i internal and b boundary edges for a fixed 2k-set."""
    _check_qk(k, i, n, m_size)
    if b < 0 or 2 * i + b > 2 * k:
        raise DomainError(f"need b >= 0 and 2i+b <= 2k, got i={i}, b={b}, k={k}")
    return float(
        log_binom(m_size, i)
        + log_binom(m_size - i, b)
        + b * np.log(2.0)
        + log_binom(n - 2 * m_size, 2 * (k - i) - b)
        - log_binom(n, 2 * k)
    )


def q_match_b_grid(k: int, n: int, m_size: int) -> dict[tuple[int, int], float]:
    """log q(k,i,b,n) for every admissible (i, b)."""
    out = {}
    for i in range(k + 1):
        for b in range(2 * (k - i) + 1):
            out[(i, b)] = q_match_b(k, i, b, n, m_size)
    return out


def prob(log_value: float) -> float:
    """Linear-domain accessor; saturates to 0 below exp(-700)."""
    return exp_saturating(log_value)


def class_counts(M: Matching, vertex_set: int) -> tuple[int, int]:
    """(internal, boundary) edge counts of M relative to a vertex set mask."""
    cls = classify_edges(M, vertex_set)
    return len(cls.internal), len(cls.boundary)


def matching_count(n: int, size: int) -> int:
    """Number of matchings with ``size`` edges on n labelled vertices."""
    return comb(n, 2 * size) * factorial(2 * size) // (factorial(size) * 2**size)


@dataclass(frozen=True)
class QbScan:
    n: int
    checked: int
    violations: tuple[tuple[int, int, int, int], ...]  # (m_size, k, i, b)
    worst_margin: float  # min over triples of log(rhs) - log(lhs)


def qb_inequality_scan(n: int, m_sizes: Iterable[int] | None = None) -> QbScan:
    """Check q(k,i,b,n) <= q(k,i,n) 20^-b 4^(k-i) for every admissible triple.

    Range: k < n/10, matching sizes below n/100, 2i + b <= 2k. Triples where
    q(k,i,b,n) is zero (b > m - i) hold trivially and are skipped. The ratio
    q_b/q depends on (m, i, k-i, b) only, so it is assembled from two tables.
    """
    k_cap = -(-n // 10) - 1
    if m_sizes is None:
        m_sizes = range(1, -(-n // 100))
    checked, bad, worst = 0, [], math.inf
    ln2, ln4, ln20 = math.log(2.0), math.log(4.0), math.log(20.0)
    for m in m_sizes:
        rest = n - 2 * m
        j = np.arange(k_cap + 1, dtype=float)[:, None]
        b = np.arange(m + 1, dtype=float)[None, :]
        # log C(rest, 2j-b) - log C(rest, 2j) + b log 2 + b log 20 - j log 4, per (j, b)
        tail = log_binom(rest, 2 * j - b) - log_binom(rest, 2 * j) + b * (ln2 + ln20) - j * ln4
        for i in range(min(m, k_cap) + 1):
            jmax = k_cap - i
            bmax = m - i
            block = tail[: jmax + 1, : bmax + 1] + log_binom(m - i, b[:, : bmax + 1])
            ok_shape = (2 * j[: jmax + 1] >= b[:, : bmax + 1])
            vals = np.where(ok_shape, block, -np.inf)
            checked += int(ok_shape.sum())
            top = float(vals.max())
            worst = min(worst, -top)
            if top > 1e-9:
                for jj, bb in zip(*np.nonzero(vals > 1e-9)):
                    bad.append((m, int(jj) + i, i, int(bb)))
    return QbScan(n, checked, tuple(bad), worst)
