"""Finite distributions and total variation distance."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping

import numpy as np

NORM_TOL = 1e-9


class NormalizationError(ValueError):
    """Probabilities do not sum to one."""


@dataclass(frozen=True)
class DiscreteDistribution:
    probs: Mapping[Hashable, float]

    def __post_init__(self) -> None:
        total = float(sum(self.probs.values()))
        if abs(total - 1.0) > NORM_TOL:
            raise NormalizationError(f"probabilities sum to {total}")
        if any(p < 0 for p in self.probs.values()):
            raise NormalizationError("negative probability")

    @classmethod
    def from_samples(cls, samples: Iterable[Hashable]) -> "DiscreteDistribution":
        counts = Counter(samples)
        total = sum(counts.values())
        return cls({k: v / total for k, v in counts.items()})

    @classmethod
    def from_array(cls, probs) -> "DiscreteDistribution":
        return cls({i: float(p) for i, p in enumerate(probs)})

    def __getitem__(self, key: Hashable) -> float:
        return float(self.probs.get(key, 0.0))

    def support(self) -> set:
        return {k for k, p in self.probs.items() if p > 0}

    def pushforward(self, fn) -> "DiscreteDistribution":
        out: dict = {}
        for k, p in self.probs.items():
            img = fn(k)
            out[img] = out.get(img, 0.0) + p
        return DiscreteDistribution(out)


def exact_tvd(d1: DiscreteDistribution, d2: DiscreteDistribution) -> float:
    """Half the l1 distance; symmetric and in [0, 1]."""
    keys = set(d1.probs) | set(d2.probs)
    return 0.5 * float(sum(abs(d1[k] - d2[k]) for k in keys))


def tvd_arrays(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def product(d1: DiscreteDistribution, d2: DiscreteDistribution) -> DiscreteDistribution:
    """Joint law of independent draws, keys are pairs."""
    return DiscreteDistribution({(a, b): pa * pb for a, pa in d1.probs.items() for b, pb in d2.probs.items()})


def expectation_identity(mu: DiscreteDistribution, nu: DiscreteDistribution) -> float:
    """E_{X~mu} |1 - nu(X)/mu(X)|, which equals 2 TVD when mu has full support."""
    return float(sum(p * abs(1.0 - nu[k] / p) for k, p in mu.probs.items() if p > 0))
