"""Numerically stable log-domain combinatorics.

Arguments may be astronomically large (10^60 and beyond). ``log_falling`` uses a
Stirling difference written with ``log1p`` when both ends of the falling
factorial are large, which avoids the catastrophic cancellation of
``gammaln(N + 1) - gammaln(N - K + 1)``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, logsumexp

__all__ = ["log_falling", "log_binom", "logsumexp", "exp_saturating", "LOG_FLOOR"]

# Below this log-value the linear accessor returns exactly 0.
LOG_FLOOR = -700.0

# Above this size the Stirling series remainder (about 1/(360 M^3)) is far
# below double precision, and lgamma differences start to lose digits.
_STIRLING_CUTOVER = 1e7


def _stirling_diff(N: np.ndarray, K: np.ndarray) -> np.ndarray:
    # log N! - log (N-K)!  with M = N - K >= cutover
    M = N - K
    out = (M + 0.5) * np.log1p(K / M) + K * np.log(N) - K
    out += 1.0 / (12.0 * N) - 1.0 / (12.0 * M)
    out -= 1.0 / (360.0 * N**3) - 1.0 / (360.0 * M**3)
    return out


def log_falling(N, K):
    """log(N! / (N-K)!) for real N >= K >= 0, vectorized; -inf when K > N."""
    N_arr = np.asarray(N, dtype=float)
    K_arr = np.asarray(K, dtype=float)
    N_b, K_b = np.broadcast_arrays(N_arr, K_arr)
    out = np.full(N_b.shape, -np.inf)
    valid = (K_b >= 0) & (K_b <= N_b)
    M = N_b - K_b
    big = valid & (M >= _STIRLING_CUTOVER)
    small = valid & ~big
    if np.any(big):
        out[big] = _stirling_diff(N_b[big], K_b[big])
    if np.any(small):
        out[small] = gammaln(N_b[small] + 1.0) - gammaln(M[small] + 1.0)
    if out.ndim == 0:
        return float(out)
    return out


def log_binom(N, K):
    """log C(N, K), vectorized, exact to double precision for huge N; -inf outside 0 <= K <= N."""
    lf = log_falling(N, K)
    K_arr = np.asarray(K, dtype=float)
    with np.errstate(invalid="ignore"):
        out = np.where(np.isfinite(lf), lf - gammaln(np.maximum(K_arr, 0.0) + 1.0), -np.inf)
    if np.ndim(out) == 0:
        return float(out)
    return out


def exp_saturating(log_value: float) -> float:
    """Linear value of a log-probability, flushed to 0 below exp(-700)."""
    if log_value < LOG_FLOOR:
        return 0.0
    return math.exp(log_value)
