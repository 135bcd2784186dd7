"""Hard instances of the game and their line-delimited text format.

Text format (one record per line, ``#`` lines are comments)::

    dihp-instance 1
    n <n>
    alpha_n <matching size>
    T <players>
    case YES|NO
    hidden <bit string over vertices 0..n-1> | -
    round <t> <a>-<b>,<a>-<b>,... <labels as bit string, canonical edge order>

Rounds appear in order t = 1..T. An empty matching is written as ``-``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..matchings import Matching, apply_matching, sample_matching


class Case(str, enum.Enum):
    YES = "YES"
    NO = "NO"


@dataclass(frozen=True)
class DihpInstance:
    n: int
    alpha_n: int
    T: int
    matchings: tuple[Matching, ...]
    labels: tuple[np.ndarray, ...]
    case: Case
    hidden: int | None = None

    def __post_init__(self) -> None:
        if len(self.matchings) != self.T or len(self.labels) != self.T:
            raise ValueError("need exactly T matchings and T label vectors")
        labels = []
        for M, w in zip(self.matchings, self.labels):
            arr = np.asarray(w, dtype=np.uint8)
            if M.size != self.alpha_n or arr.shape != (self.alpha_n,):
                raise ValueError("every matching and label vector has alpha_n entries")
            arr.setflags(write=False)
            labels.append(arr)
        object.__setattr__(self, "labels", tuple(labels))
        if (self.case == Case.YES) != (self.hidden is not None):
            raise ValueError("hidden partition is present exactly for YES instances")

    def is_consistent(self) -> bool:
        """For YES instances, whether every label equals the hidden parity."""
        if self.hidden is None:
            return False
        return all(np.array_equal(apply_matching(M, self.hidden), w) for M, w in zip(self.matchings, self.labels))


def gen_instance(n: int, alpha_n: int, T: int, case: Case | str, rng: np.random.Generator) -> DihpInstance:
    """Sample from the YES or NO distribution; ``case="mixed"`` flips a fair coin first."""
    if alpha_n < 0 or 2 * alpha_n > n:
        raise ValueError(f"need 0 <= 2*alpha_n <= n, got alpha_n={alpha_n}, n={n}")
    if T < 1:
        raise ValueError("need at least one player")
    if isinstance(case, str) and case.lower() == "mixed":
        case = Case.YES if rng.integers(2) == 0 else Case.NO
    case = Case(case.upper()) if isinstance(case, str) else case
    matchings = tuple(sample_matching(n, alpha_n, rng) for _ in range(T))
    if case == Case.YES:
        bits = rng.integers(0, 2, size=n)
        hidden = int(sum(int(b) << i for i, b in enumerate(bits)))
        labels = tuple(apply_matching(M, hidden) for M in matchings)
        return DihpInstance(n, alpha_n, T, matchings, labels, case, hidden)
    labels = tuple(rng.integers(0, 2, size=alpha_n).astype(np.uint8) for _ in range(T))
    return DihpInstance(n, alpha_n, T, matchings, labels, case, None)


def _bits(arr: Iterable[int]) -> str:
    return "".join(str(int(b)) for b in arr)


def dump_instance(inst: DihpInstance) -> str:
    lines = [
        "dihp-instance 1",
        f"n {inst.n}",
        f"alpha_n {inst.alpha_n}",
        f"T {inst.T}",
        f"case {inst.case.value}",
        "hidden " + ("-" if inst.hidden is None else _bits((inst.hidden >> i) & 1 for i in range(inst.n))),
    ]
    for t, (M, w) in enumerate(zip(inst.matchings, inst.labels), start=1):
        edges = ",".join(f"{a}-{b}" for a, b in M.edges) or "-"
        lines.append(f"round {t} {edges} {_bits(w) or '-'}")
    return "\n".join(lines) + "\n"


def load_instance(text: str) -> DihpInstance:
    fields: dict[str, str] = {}
    rounds: list[tuple[int, str, str]] = []
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != "dihp-instance 1":
        raise ValueError("not a dihp-instance file")
    for ln in lines[1:]:
        key, _, rest = ln.partition(" ")
        if key == "round":
            t, edges, labels = rest.split()
            rounds.append((int(t), edges, labels))
        else:
            fields[key] = rest
    n, alpha_n, T = int(fields["n"]), int(fields["alpha_n"]), int(fields["T"])
    if [r[0] for r in rounds] != list(range(1, T + 1)):
        raise ValueError("rounds missing or out of order")
    matchings, labels = [], []
    for _, edges, bits in rounds:
        pairs = [] if edges == "-" else [tuple(int(v) for v in e.split("-")) for e in edges.split(",")]
        matchings.append(Matching(n, tuple(pairs)))
        labels.append(np.array([] if bits == "-" else [int(c) for c in bits], dtype=np.uint8))
    hid = fields["hidden"]
    hidden = None if hid == "-" else sum(1 << i for i, c in enumerate(hid) if c == "1")
    return DihpInstance(n, alpha_n, T, tuple(matchings), tuple(labels), Case(fields["case"]), hidden)
