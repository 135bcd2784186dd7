"""Monte Carlo experiments on the game: advantage, forest potential, transcript TVD.

Trial ``i`` of an experiment with master seed ``seed`` always uses the stream
``rng.stream(seed, i)``, so results are independent of the worker count.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .. import rng as rngmod
from ..matchings import Matching, apply_matching, sample_edge_sequence, sample_matching
from ..stats import mean_se, wilson_interval
from .forest import Forest
from .instance import Case, DihpInstance, gen_instance
from .protocols import make_protocol, run_protocol


@dataclass(frozen=True)
class AdvantageReport:
    protocol: str
    n: int
    alpha_n: int
    T: int
    s: int
    case: str
    trials: int
    successes: int
    success_rate: float
    wilson_low: float
    wilson_high: float
    advantage: float
    yes_trials: int
    yes_correct: int
    no_trials: int
    no_correct: int
    no_cycles: int
    cycles: int


def _advantage_trial(name: str, s: int, n: int, alpha_n: int, T: int, case: str, seed: int, idx: int):
    g = rngmod.stream(seed, idx)
    inst = gen_instance(n, alpha_n, T, case, g)
    tr = run_protocol(make_protocol(name, s), inst, g)
    return inst.case.value, tr.output.value, bool(tr.info.get("cycle_found", False))


def estimate_advantage(protocol: str, n: int, alpha_n: int, T: int, s: int, trials: int,
                       seed: int, case: str = "mixed", workers: int | None = None) -> AdvantageReport:
    """Success rate of a protocol with a 95% Wilson interval.

    ``case`` is ``"mixed"`` (fair coin per trial), ``"yes"`` or ``"no"``.
    Advantage is success rate minus 1/2.
    """
    args = [(protocol, s, n, alpha_n, T, case, seed, i) for i in range(trials)]
    rows = rngmod.map_trials(_advantage_trial, args, workers)
    succ = sum(c == o for c, o, _ in rows)
    yes = [r for r in rows if r[0] == "YES"]
    no = [r for r in rows if r[0] == "NO"]
    lo, hi = wilson_interval(succ, trials)
    return AdvantageReport(
        protocol, n, alpha_n, T, s, case, trials, succ, succ / trials, lo, hi, succ / trials - 0.5,
        len(yes), sum(o == "YES" for _, o, _ in yes),
        len(no), sum(o == "NO" for _, o, _ in no),
        sum(cy for _, _, cy in no), sum(cy for _, _, cy in rows),
    )


@dataclass(frozen=True)
class PotentialReport:
    n: int
    alpha_n: int
    T: int
    s: int
    trials: int
    round_mean: tuple[float, ...]
    round_se: tuple[float, ...]
    steps: int
    mean_ratio: float
    ratio_se: float
    max_potential: int
    ratio_bound: float  # 1 + 12/n + 8 max||F|| / n^2
    mean_excess: float  # mean of (ratio - per-step bound)
    excess_se: float
    cycle_hits: int
    cycle_expected: float  # sum over steps of ||F|| / n^2

    @property
    def ratio_ok(self) -> bool:
        return self.mean_ratio <= self.ratio_bound + 3 * self.ratio_se

    @property
    def paired_ok(self) -> bool:
        return self.mean_excess <= 3 * self.excess_se

    @property
    def cycle_ok(self) -> bool:
        # slack 2 on the per-edge bound, plus three Poisson standard errors
        expected = 2.0 * self.cycle_expected
        return self.cycle_hits <= expected + 3.0 * math.sqrt(max(expected, 1.0))


def _potential_trial(n: int, alpha_n: int, T: int, s: int, seed: int, idx: int):
    g = rngmod.stream(seed, idx)
    forest = Forest(n)
    ratios, bounds = [], []
    hits = 0
    expected = 0.0
    round_pot = []
    max_pot = 0
    for t in range(1, T + 1):
        # sampling order: each edge is uniform given the earlier ones
        seq = sample_edge_sequence(n, alpha_n, g)
        if t == 1:
            for a, b in seq[:s]:
                forest.add_edge(a, b)
        else:
            touching = [forest.in_nontrivial(a) or forest.in_nontrivial(b) for a, b in seq]
            for (a, b), touch in zip(seq, touching):
                before = forest.potential
                expected += before / (n * n)
                if forest.connected(a, b):
                    hits += 1
                if touch:
                    forest.add_edge(a, b)
                ratios.append(forest.potential / before)
                bounds.append(1.0 + 12.0 / n + 8.0 * before / (n * n))
                max_pot = max(max_pot, before)
            fresh = [e for e, touch in zip(seq, touching) if not touch][:s]
            for a, b in fresh:
                forest.add_edge(a, b)
        max_pot = max(max_pot, forest.potential)
        round_pot.append(forest.potential)
    return np.array(ratios), np.array(bounds), hits, expected, round_pot, max_pot


def potential_trace(n: int, alpha_n: int, T: int, s: int, trials: int, seed: int,
                    workers: int | None = None) -> PotentialReport:
    """Forest growth of the free-edge protocol: per-round potential and per-edge statistics.

    Player 1 adds s edges; each later round adds, in sampling order, every
    edge touching a nontrivial component, then up to s of the remaining edges.
    """
    if s < 1:
        raise ValueError("s must be positive")
    args = [(n, alpha_n, T, s, seed, i) for i in range(trials)]
    rows = rngmod.map_trials(_potential_trial, args, workers)
    ratios = np.concatenate([r[0] for r in rows]) if rows else np.zeros(0)
    bounds = np.concatenate([r[1] for r in rows]) if rows else np.zeros(0)
    pots = np.array([r[4] for r in rows], dtype=float)
    max_pot = max((r[5] for r in rows), default=0)
    mr, mse = mean_se(ratios)
    ex, exse = mean_se(ratios - bounds)
    return PotentialReport(
        n, alpha_n, T, s, trials,
        tuple(float(x) for x in pots.mean(axis=0)),
        tuple(float(x) for x in pots.std(axis=0, ddof=1) / math.sqrt(max(trials, 1))) if trials > 1 else tuple(0.0 for _ in range(T)),
        int(ratios.size), mr, mse, int(max_pot), 1.0 + 12.0 / n + 8.0 * max_pot / (n * n),
        ex, exse, int(sum(r[2] for r in rows)), float(sum(r[3] for r in rows)),
    )


@dataclass(frozen=True)
class TVDReport:
    protocol: str
    mode: str
    n: int
    alpha_n: int
    T: int
    samples: int
    estimate: float
    se: float
    ci_low: float
    ci_high: float
    bias_bound: float = 0.0
    per_sample: tuple[float, ...] = field(default=(), repr=False)


def _transcript_law(proto, n: int, alpha_n: int, T: int, matchings: tuple[Matching, ...],
                    label_rows) -> dict:
    law: dict = {}
    weight = 1.0 / len(label_rows)
    for labels in label_rows:
        inst = DihpInstance(n, alpha_n, T, matchings, labels, Case.NO)
        key = run_protocol(proto, inst).key()
        law[key] = law.get(key, 0.0) + weight
    return law


def _exact_tvd_given_matchings(name: str, s: int, n: int, alpha_n: int, T: int,
                               matchings: tuple[Matching, ...]) -> float:
    proto = make_protocol(name, s)
    yes_rows = [tuple(apply_matching(M, x) for M in matchings) for x in range(1 << n)]
    all_bits = itertools.product((0, 1), repeat=alpha_n * T)
    no_rows = [tuple(np.array(bits[t * alpha_n:(t + 1) * alpha_n], dtype=np.uint8) for t in range(T))
               for bits in all_bits]
    yes = _transcript_law(proto, n, alpha_n, T, matchings, yes_rows)
    no = _transcript_law(proto, n, alpha_n, T, matchings, no_rows)
    keys = set(yes) | set(no)
    return 0.5 * sum(abs(yes.get(k, 0.0) - no.get(k, 0.0)) for k in keys)


def _bootstrap(values: np.ndarray, g: np.random.Generator, reps: int = 1000) -> tuple[float, float, float]:
    if values.size < 2:
        v = float(values.mean()) if values.size else 0.0
        return 0.0, v, v
    idx = g.integers(0, values.size, size=(reps, values.size))
    means = values[idx].mean(axis=1)
    lo, hi = np.quantile(means, [0.025, 0.975])
    return float(means.std(ddof=1)), float(lo), float(hi)


EXACT_LABEL_BITS = 20


def transcript_tvd_experiment(protocol: str, s: int, n: int, alpha_n: int, T: int, trials: int,
                              seed: int, mode: str = "exact") -> TVDReport:
    """TVD between (M_{1:T}, S^YES) and (M_{1:T}, S^NO).

    ``exact``: for each of ``trials`` sampled matching tuples the two
    transcript laws are computed exactly by enumerating all hidden partitions
    and all label vectors. The estimate is the mean over matching tuples,
    which is unbiased for the joint TVD because the matchings have the same
    law in both cases. Needs alpha_n*T <= 20 label bits and n <= 20.

    ``plugin``: histogram of sampled (matchings, transcript) keys from each
    side; upward bias is at most sqrt(K/N) with K observed keys and N trials.
    """
    boot = rngmod.stream(seed, 1 << 30)
    if mode == "exact":
        if alpha_n * T > EXACT_LABEL_BITS or n > EXACT_LABEL_BITS:
            raise ValueError(f"exact mode needs alpha_n*T <= {EXACT_LABEL_BITS} and n <= {EXACT_LABEL_BITS}")
        vals = []
        for i in range(trials):
            g = rngmod.stream(seed, i)
            matchings = tuple(sample_matching(n, alpha_n, g) for _ in range(T))
            vals.append(_exact_tvd_given_matchings(protocol, s, n, alpha_n, T, matchings))
        arr = np.array(vals)
        se, lo, hi = _bootstrap(arr, boot)
        return TVDReport(protocol, mode, n, alpha_n, T, trials, float(arr.mean()), se, lo, hi, 0.0, tuple(vals))
    if mode != "plugin":
        raise ValueError(f"unknown mode {mode!r}")
    yes_keys, no_keys = [], []
    for i in range(trials):
        g = rngmod.stream(seed, i)
        for case, sink in (("YES", yes_keys), ("NO", no_keys)):
            inst = gen_instance(n, alpha_n, T, case, g)
            tr = run_protocol(make_protocol(protocol, s), inst, g)
            sink.append((tuple(M.edges for M in inst.matchings), tr.key()))
    # a trial's contribution to the plug-in estimate, for resampling
    codes: dict = {}
    y = np.array([codes.setdefault(k, len(codes)) for k in yes_keys])
    nn = np.array([codes.setdefault(k, len(codes)) for k in no_keys])

    def plug(yi: np.ndarray, ni: np.ndarray) -> float:
        py = np.bincount(yi, minlength=len(codes)) / yi.size
        pn = np.bincount(ni, minlength=len(codes)) / ni.size
        return 0.5 * float(np.abs(py - pn).sum())

    est = plug(y, nn)
    reps = []
    for _ in range(200):
        pick = boot.integers(0, trials, size=trials)
        reps.append(plug(y[pick], nn[pick]))
    reps_arr = np.array(reps)
    lo, hi = np.quantile(reps_arr, [0.025, 0.975])
    bias = math.sqrt(len(codes) / max(trials, 1))
    return TVDReport(protocol, mode, n, alpha_n, T, trials, est, float(reps_arr.std(ddof=1)), float(lo),
                     float(hi), bias)
