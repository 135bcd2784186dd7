"""Dense function algebra on the boolean cube {0,1}^n.

Points are integers in [0, 2^n); coordinate ``i`` is bit ``i`` of the integer.
Fourier coefficients use the averaging normalization

    hat f(v) = 2^-n * sum_x f(x) (-1)^(x.v),      f(x) = sum_v hat f(v) (-1)^(x.v),

and the "tilde" normalization of an indicator of A rescales by 2^n/|A|, so
that tilde f(v) is the average of (-1)^(x.v) over x in A.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Literal, Sequence

import numpy as np

from .logcomb import log_binom

DEFAULT_MAX_DIM = 22
LOG_TOL = 1e-9

Normalization = Literal["hat", "tilde"]


class CapacityError(ValueError):
    """Dimension exceeds the dense representation cap."""


class NormalizationError(ValueError):
    """Spectrum carries the wrong normalization tag."""


class EmptySetError(ValueError):
    """Tilde normalization of an empty set."""


class PreconditionError(ValueError):
    """A check was called outside its stated preconditions."""


_max_dim = DEFAULT_MAX_DIM


def set_max_dim(n: int) -> None:
    """Change the dense cap (default 22)."""
    global _max_dim
    _max_dim = int(n)


def max_dim() -> int:
    return _max_dim


def _check_dim(n: int) -> None:
    if n < 0:
        raise ValueError(f"negative dimension {n}")
    if n > _max_dim:
        raise CapacityError(f"dimension {n} exceeds dense cap {_max_dim}")


@dataclass(frozen=True)
class BitVector:
    n: int
    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value < (1 << self.n):
            raise ValueError(f"value {self.value} outside [0, 2^{self.n})")

    @property
    def weight(self) -> int:
        return self.value.bit_count()

    @classmethod
    def from_string(cls, bits: str) -> "BitVector":
        """``"1000"`` sets coordinate 0 (character j is coordinate j)."""
        value = sum(1 << j for j, ch in enumerate(bits) if ch == "1")
        return cls(len(bits), value)

    @classmethod
    def from_coords(cls, n: int, coords: Iterable[int]) -> "BitVector":
        value = 0
        for c in coords:
            value |= 1 << c
        return cls(n, value)

    def coords(self) -> list[int]:
        return [i for i in range(self.n) if self.value >> i & 1]

    def to_string(self) -> str:
        return "".join("1" if self.value >> j & 1 else "0" for j in range(self.n))

    def __xor__(self, other: "BitVector") -> "BitVector":
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        return BitVector(self.n, self.value ^ other.value)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CubeFunction:
    n: int
    values: np.ndarray

    def __post_init__(self) -> None:
        _check_dim(self.n)
        vals = _frozen(np.array(self.values, dtype=float))
        if vals.shape != (1 << self.n,):
            raise ValueError(f"expected {1 << self.n} values, got shape {vals.shape}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def indicator(cls, n: int, members: Iterable[int]) -> "CubeFunction":
        vals = np.zeros(1 << n)
        idx = np.fromiter(members, dtype=np.int64)
        vals[idx] = 1.0
        return cls(n, vals)

    @property
    def is_indicator(self) -> bool:
        return bool(np.all((self.values == 0) | (self.values == 1)))

    def support_size(self) -> int:
        return int(np.count_nonzero(self.values))

    def __mul__(self, other: "CubeFunction") -> "CubeFunction":
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        return CubeFunction(self.n, self.values * other.values)


@dataclass(frozen=True)
class Spectrum:
    n: int
    coeffs: np.ndarray
    normalization: Normalization = "hat"
    set_size: int | None = None

    def __post_init__(self) -> None:
        _check_dim(self.n)
        c = _frozen(np.array(self.coeffs, dtype=float))
        if c.shape != (1 << self.n,):
            raise ValueError(f"expected {1 << self.n} coefficients, got shape {c.shape}")
        object.__setattr__(self, "coeffs", c)
        if self.normalization not in ("hat", "tilde"):
            raise NormalizationError(f"unknown normalization {self.normalization!r}")
        if (self.normalization == "tilde") != (self.set_size is not None):
            raise NormalizationError("set_size is present exactly for tilde spectra")

    def __getitem__(self, v: int | BitVector) -> float:
        idx = v.value if isinstance(v, BitVector) else v
        return float(self.coeffs[idx])

    def support(self, tol: float = 1e-12) -> np.ndarray:
        return np.flatnonzero(np.abs(self.coeffs) > tol)


@lru_cache(maxsize=32)
def weights(n: int) -> np.ndarray:
    """Hamming weight of every index in [0, 2^n) (cached, read-only)."""
    w = np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(np.int64)
    w.setflags(write=False)
    return w


def fwht(values: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard butterflies on a private copy, O(n 2^n)."""
    a = np.array(values, dtype=float)
    size = a.size
    if size & (size - 1):
        raise ValueError("length must be a power of two")
    h = 1
    while h < size:
        blocks = a.reshape(-1, 2, h)
        lo = blocks[:, 0, :].copy()
        hi = blocks[:, 1, :]
        blocks[:, 0, :] += hi
        blocks[:, 1, :] = lo - hi
        h *= 2
    return a


def wht_forward(f: CubeFunction) -> Spectrum:
    _check_dim(f.n)
    return Spectrum(f.n, fwht(f.values) / float(1 << f.n), "hat")


def wht_inverse(spec: Spectrum) -> CubeFunction:
    if spec.normalization != "hat":
        raise NormalizationError("inverse transform needs a hat-normalized spectrum")
    return CubeFunction(spec.n, fwht(spec.coeffs))


def convolve_spectra(p_hat: Spectrum, q_hat: Spectrum) -> Spectrum:
    """result(v) = sum_x p_hat(x) q_hat(x xor v), via the product in the time domain."""
    if p_hat.n != q_hat.n:
        raise ValueError(f"dimension mismatch: {p_hat.n} vs {q_hat.n}")
    if p_hat.normalization != "hat" or q_hat.normalization != "hat":
        raise NormalizationError("convolution needs hat-normalized spectra")
    return wht_forward(wht_inverse(p_hat) * wht_inverse(q_hat))


def tilde_normalize(spec: Spectrum, set_size: int) -> Spectrum:
    if spec.normalization != "hat":
        raise NormalizationError("already tilde-normalized")
    if set_size <= 0:
        raise EmptySetError("tilde normalization of an empty set is undefined")
    scale = float(1 << spec.n) / set_size
    return Spectrum(spec.n, spec.coeffs * scale, "tilde", int(set_size))


def indicator_spectrum(f: CubeFunction) -> Spectrum:
    """Tilde spectrum of an indicator function."""
    if not f.is_indicator:
        raise ValueError("not an indicator function")
    return tilde_normalize(wht_forward(f), f.support_size())


def level_l1(spec: Spectrum, level: int) -> float:
    """Sum of |coeff(v)| over |v| = 2 * level."""
    if not 0 <= 2 * level <= spec.n:
        raise ValueError(f"level {level} outside [0, n/2]")
    return float(np.abs(spec.coeffs[weights(spec.n) == 2 * level]).sum())


def level_l2sq(spec: Spectrum, level: int) -> float:
    """Sum of coeff(v)^2 over |v| = 2 * level."""
    if not 0 <= 2 * level <= spec.n:
        raise ValueError(f"level {level} outside [0, n/2]")
    c = spec.coeffs[weights(spec.n) == 2 * level]
    return float(np.dot(c, c))


def weight_l1_profile(spec: Spectrum) -> np.ndarray:
    """l1 mass at every Hamming weight 0..n (odd weights included)."""
    return np.bincount(weights(spec.n), weights=np.abs(spec.coeffs), minlength=spec.n + 1)


def odd_level_mass(spec: Spectrum) -> float:
    return float(weight_l1_profile(spec)[1::2].sum())


def log_bound(C: float, s_star: float, n: float, level: float) -> float:
    """Natural log of the two-branch level bound.

    0 at level 0; level*log(C sqrt(s* n)/level) for 1 <= level <= s*;
    (level/2)*log(C^2 n/level) above s*.
    """
    if level < 0:
        raise ValueError("negative level")
    if level == 0:
        return 0.0
    if level <= s_star:
        return level * (math.log(C) + 0.5 * (math.log(s_star) + math.log(n)) - math.log(level))
    return 0.5 * level * (2.0 * math.log(C) + math.log(n) - math.log(level))


@dataclass(frozen=True)
class LevelRow:
    level: int
    l1: float
    bound: float
    log_l1: float
    log_bound: float
    passed: bool


@dataclass(frozen=True)
class BoundednessReport:
    C: float
    s_star: int
    per_level: tuple[LevelRow, ...]
    overall: bool
    odd_mass: float = 0.0
    levels_checked: tuple[int, ...] = field(default=())


def bounded_levels(n: int, C: float, s_star: int) -> list[int]:
    """Levels covered by the definition: 1..s*, then s* < l < n/C^2, all with 2l <= n."""
    top = n // 2
    levels = list(range(1, min(s_star, top) + 1))
    lvl = s_star + 1
    while lvl <= top and lvl < n / (C * C):
        levels.append(lvl)
        lvl += 1
    return levels


def check_bounded(spec: Spectrum, C: float, s_star: int, strict_odd: bool = False) -> BoundednessReport:
    """Compare each even-weight l1 level mass with the level bound, in log domain.

    With ``strict_odd`` the overall flag also requires zero odd-weight mass;
    by default that mass is only reported.
    """
    if spec.normalization != "tilde":
        raise NormalizationError("check_bounded needs a tilde spectrum")
    if C <= 0:
        raise ValueError("C must be positive")
    if s_star < 1:
        raise ValueError("s_star must be at least 1")
    profile = weight_l1_profile(spec)
    rows = []
    for lvl in bounded_levels(spec.n, C, s_star):
        l1 = float(profile[2 * lvl])
        log_l1 = math.log(l1) if l1 > 0 else -math.inf
        lb = log_bound(C, s_star, spec.n, lvl)
        rows.append(LevelRow(lvl, l1, math.exp(min(lb, 700.0)), log_l1, lb, log_l1 <= lb + LOG_TOL))
    odd = float(profile[1::2].sum())
    overall = all(r.passed for r in rows)
    if strict_odd:
        overall = overall and odd <= 1e-9
    return BoundednessReport(C, s_star, tuple(rows), overall, odd, tuple(r.level for r in rows))


@dataclass(frozen=True)
class KKLResult:
    lhs: float
    rhs: float
    l2_lhs: float
    l2_rhs: float
    passed: bool


def _as_indicator(A: CubeFunction | Iterable[int], m: int | None) -> CubeFunction:
    if isinstance(A, CubeFunction):
        return A
    if m is None:
        raise ValueError("dimension m required for a member list")
    return CubeFunction.indicator(m, A)


def _kkl_rhs(m: int, q: int, d: int) -> tuple[float, float]:
    log_l2 = q * math.log(4.0 * d / q)
    log_l1 = 0.5 * (log_binom(m, q) + log_l2)
    return log_l1, log_l2


def _kkl_prepare(f: CubeFunction, q: int, d: int) -> np.ndarray:
    size = f.support_size()
    if not f.is_indicator:
        raise ValueError("A must be given as an indicator")
    if not 1 <= q <= d:
        raise PreconditionError(f"need 1 <= q <= d, got q={q}, d={d}")
    if size < 2.0 ** (f.n - d):
        raise PreconditionError(f"|A|={size} below 2^(m-d)={2.0 ** (f.n - d)}")
    return indicator_spectrum(f).coeffs


def kkl_level_check(A: CubeFunction | Iterable[int], y: int | BitVector, q: int, d: int,
                    m: int | None = None) -> KKLResult:
    """Level-q mass of the tilde spectrum around y against the KKL-type bound.

    l1 form: sum_{|x^y|=q} |f~(x)| <= sqrt(C(m,q) (4d/q)^q);
    l2 form: sum_{|x^y|=q} f~(x)^2 <= (4d/q)^q.
    """
    f = _as_indicator(A, m)
    coeffs = _kkl_prepare(f, q, d)
    yv = y.value if isinstance(y, BitVector) else int(y)
    shell = weights(f.n)[np.arange(1 << f.n) ^ yv] == q
    sel = coeffs[shell]
    lhs = float(np.abs(sel).sum())
    l2 = float(np.dot(sel, sel))
    log_l1, log_l2 = _kkl_rhs(f.n, q, d)
    passed = _log_le(lhs, log_l1) and _log_le(l2, log_l2)
    return KKLResult(lhs, math.exp(log_l1), l2, math.exp(log_l2), passed)


def kkl_level_profile(A: CubeFunction | Iterable[int], q: int, d: int,
                      m: int | None = None) -> tuple[np.ndarray, np.ndarray, float, float]:
    """The KKL level sums for every centre y at once (XOR-convolution with the weight-q shell).

    Returns (l1 sums over y, l2 sums over y, l1 bound, l2 bound).
    """
    f = _as_indicator(A, m)
    coeffs = _kkl_prepare(f, q, d)
    shell = (weights(f.n) == q).astype(float)
    shell_t = fwht(shell)
    l1 = fwht(fwht(np.abs(coeffs)) * shell_t) / float(1 << f.n)
    l2 = fwht(fwht(coeffs * coeffs) * shell_t) / float(1 << f.n)
    log_l1, log_l2 = _kkl_rhs(f.n, q, d)
    return l1, l2, math.exp(log_l1), math.exp(log_l2)


def _log_le(value: float, log_rhs: float) -> bool:
    if value <= 0:
        return True
    return math.log(value) <= log_rhs + LOG_TOL


def parity_function(n: int, v: int) -> CubeFunction:
    """The character x -> (-1)^(x.v)."""
    par = weights(n)[np.arange(1 << n) & v] & 1
    return CubeFunction(n, 1.0 - 2.0 * par)


def sign_average(n: int, members: Sequence[int]) -> np.ndarray:
    """Direct O(|A| 2^n) oracle for the tilde spectrum: mean of (-1)^(x.v) over x in A."""
    idx = np.arange(1 << n)
    acc = np.zeros(1 << n)
    w = weights(n)
    for x in members:
        acc += 1.0 - 2.0 * (w[idx & x] & 1)
    return acc / len(members)
