"""Blackboard protocols and the sequential harness.

Players speak once, in order. Player t sees the matchings M_1..M_t, the posted
messages S_1..S_{t-1} and its own labels w_t. A protocol object keeps only
state derived from public information: ``respond`` may read the private
labels but must not change that state, and ``observe`` updates it from the
posted message.

A message carries counted ``bits`` (at most the budget s) and ``free`` bits
that are reported on an auxiliary counter and not charged against s. The final
message S_T is the output: ``"0"`` means YES and ``"1"`` means NO.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..matchings import Matching
from .forest import Forest
from .instance import Case, DihpInstance


class BudgetViolation(RuntimeError):
    """A player posted more counted bits than the budget allows."""


@dataclass(frozen=True)
class Message:
    bits: str = ""
    free: str = ""

    def __post_init__(self) -> None:
        if set(self.bits) - {"0", "1"} or set(self.free) - {"0", "1"}:
            raise ValueError("messages are bit strings")


@dataclass(frozen=True)
class Transcript:
    messages: tuple[Message, ...]
    budget: int
    output: Case
    info: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def free_bits(self) -> int:
        return sum(len(m.free) for m in self.messages)

    def key(self) -> tuple[tuple[str, str], ...]:
        """Hashable view of the posted bits, used for histograms."""
        return tuple((m.bits, m.free) for m in self.messages)


def _decode_output(bits: str) -> Case:
    if bits == "0":
        return Case.YES
    if bits == "1":
        return Case.NO
    raise ValueError(f"final message {bits!r} is not an output bit")


def _bitstr(values) -> str:
    return "".join("1" if int(v) else "0" for v in values)


class Protocol:
    """Base class; subclasses override ``respond`` and usually ``observe``."""

    name = "protocol"

    def __init__(self, s: int):
        self.budget = int(s)

    def reset(self, n: int, alpha_n: int, T: int, rng: np.random.Generator | None = None) -> None:
        self.n, self.alpha_n, self.T = n, alpha_n, T
        self.rng = rng

    def respond(self, t: int, matching: Matching, labels: np.ndarray) -> Message:
        raise NotImplementedError

    def observe(self, t: int, matching: Matching, message: Message) -> None:
        pass

    def read_output(self, message: Message) -> Case:
        return _decode_output(message.bits)

    def info(self) -> dict[str, Any]:
        return {}


class TrivialProtocol(Protocol):
    """Always answers YES."""

    name = "trivial"

    def __init__(self, s: int = 1):
        super().__init__(s)

    def respond(self, t, matching, labels):
        return Message("0") if t == self.T else Message()


class RandomGuessProtocol(Protocol):
    """The last player flips a coin from the trial's stream."""

    name = "random"

    def __init__(self, s: int = 1):
        super().__init__(s)

    def respond(self, t, matching, labels):
        if t < self.T:
            return Message()
        if self.rng is None:
            raise ValueError("random-guess protocol needs a seeded stream")
        return Message(str(int(self.rng.integers(2))))


class LabelBlindProtocol(Protocol):
    """Posts a bit computed from the matching only, then answers YES."""

    name = "blind"

    def __init__(self, s: int = 1):
        super().__init__(s)

    def respond(self, t, matching, labels):
        if t == self.T:
            return Message("0")
        first = matching.edges[0] if matching.edges else (0, 0)
        return Message(str((first[0] + first[1]) & 1))


class ForwardFirstProtocol(Protocol):
    """Player 1 forwards all of w_1; the rest stay silent. Output is always YES."""

    name = "forward"

    def respond(self, t, matching, labels):
        return Message(_bitstr(labels)) if t == 1 else Message()

    def read_output(self, message):
        return Case.YES


class _Overlay:
    """Tentative unions on top of a forest, without touching it."""

    def __init__(self, forest: Forest):
        self.forest = forest
        self.parent: dict[int, int] = {}
        self.parity: dict[int, int] = {}

    def find(self, v: int) -> tuple[int, int]:
        r, p = self.forest.find(v)
        while r in self.parent:
            p ^= self.parity[r]
            r = self.parent[r]
        return r, p

    def add(self, a: int, b: int, label: int) -> int | None:
        ra, pa = self.find(a)
        rb, pb = self.find(b)
        if ra == rb:
            return (label ^ pa ^ pb) & 1
        self.parent[rb] = ra
        self.parity[rb] = (pa ^ pb ^ label) & 1
        return None


def _first_cycle(forest: Forest, matching: Matching, idx: list[int], labels=None) -> tuple[int | None, int]:
    """Index (into idx) of the first edge closing a cycle, and that cycle's label parity."""
    ov = _Overlay(forest)
    for pos, j in enumerate(idx):
        a, b = matching.edges[j]
        lab = 0 if labels is None else int(labels[j])
        cyc = ov.add(a, b, lab)
        if cyc is not None:
            return pos, cyc
    return None, 0


class ComponentGrowingDistinguisher(Protocol):
    """Grow components from revealed edges and test the first cycle's parity.

    Player 1 reveals its first s edges (canonical order). Player t reveals every
    edge touching a nontrivial component (free bits) and up to s further
    edges that touch none (counted bits). When the touching edges close a
    cycle, which is public knowledge, the player posts the cycle's label
    parity instead, and that bit is repeated by everyone after.
    """

    name = "distinguisher"

    def __init__(self, s: int):
        if s < 2:
            raise ValueError("distinguisher needs s >= 2")
        super().__init__(s)

    def reset(self, n, alpha_n, T, rng=None):
        super().reset(n, alpha_n, T, rng)
        self.forest = Forest(n)
        self.decision: str | None = None
        self.cycle_round: int | None = None

    def _select(self, matching: Matching) -> tuple[list[int], list[int]]:
        touching, fresh = [], []
        for j, (a, b) in enumerate(matching.edges):
            if self.forest.in_nontrivial(a) or self.forest.in_nontrivial(b):
                touching.append(j)
            elif len(fresh) < self.budget:
                fresh.append(j)
        return touching, fresh

    def respond(self, t, matching, labels):
        if self.decision is not None:
            return Message(self.decision)
        touching, fresh = self._select(matching)
        pos, parity = _first_cycle(self.forest, matching, touching, labels)
        if pos is not None:
            return Message(str(parity))
        if t == self.T:
            return Message("0")
        return Message(_bitstr(labels[j] for j in fresh), _bitstr(labels[j] for j in touching))

    def observe(self, t, matching, message):
        if self.decision is not None:
            return
        touching, fresh = self._select(matching)
        pos, _ = _first_cycle(self.forest, matching, touching)
        if pos is not None:
            self.decision = message.bits
            self.cycle_round = t
            return
        if t == self.T:
            return
        for j, bit in zip(touching, message.free):
            self.forest.add_edge(*matching.edges[j], int(bit))
        for j, bit in zip(fresh, message.bits):
            self.forest.add_edge(*matching.edges[j], int(bit))

    def info(self):
        return {
            "cycle_found": self.cycle_round is not None,
            "cycle_round": self.cycle_round,
            "potential": self.forest.potential,
        }


class AdaptiveSolver(Protocol):
    """Track a bounded set of components and watch for an edge inside one.

    Player 1 reveals s/2 edges. Later players reveal every edge touching a
    tracked component; afterwards the smallest components are dropped until
    the tracked components hold at most s/2 edges. Since a tree with e edges
    has at most 2e vertices, no player reveals more than s edges.
    """

    name = "adaptive"

    def __init__(self, s: int):
        if s < 4:
            raise ValueError("adaptive solver needs s >= 4")
        super().__init__(s)
        self.cap = s // 2

    def reset(self, n, alpha_n, T, rng=None):
        super().reset(n, alpha_n, T, rng)
        self.forest = Forest(n)
        self.decision: str | None = None
        self.cycle_round: int | None = None
        self.mean_sizes: list[float] = []  # after each round's merges, before eviction
        self.saturated: list[bool] = []

    def _select(self, t: int, matching: Matching) -> list[int]:
        if t == 1:
            return list(range(min(self.cap, matching.size)))
        return [j for j, (a, b) in enumerate(matching.edges)
                if self.forest.in_nontrivial(a) or self.forest.in_nontrivial(b)]

    def respond(self, t, matching, labels):
        if self.decision is not None:
            return Message(self.decision)
        chosen = self._select(t, matching)
        pos, parity = _first_cycle(self.forest, matching, chosen, labels)
        if pos is not None:
            return Message(str(parity))
        if t == self.T:
            return Message("0")
        return Message(_bitstr(labels[j] for j in chosen))

    def observe(self, t, matching, message):
        if self.decision is not None:
            return
        chosen = self._select(t, matching)
        pos, _ = _first_cycle(self.forest, matching, chosen)
        if pos is not None:
            self.decision = message.bits
            self.cycle_round = t
            return
        if t == self.T:
            return
        for j, bit in zip(chosen, message.bits):
            self.forest.add_edge(*matching.edges[j], int(bit))
        comps = self.forest.components()
        self.mean_sizes.append(float(np.mean([len(c) for c in comps])) if comps else 0.0)
        total = self.forest.edge_count()
        self.saturated.append(total > self.cap)
        if total > self.cap:
            order = sorted(comps, key=lambda c: (len(c), c[0]))
            for comp in order:
                if total <= self.cap:
                    break
                total -= len(comp) - 1
                self.forest.remove_component(comp[0])

    def info(self):
        return {
            "cycle_found": self.cycle_round is not None,
            "cycle_round": self.cycle_round,
            "mean_sizes": list(self.mean_sizes),
            "saturated": list(self.saturated),
        }


PROTOCOLS = {
    "trivial": TrivialProtocol,
    "random": RandomGuessProtocol,
    "blind": LabelBlindProtocol,
    "forward": ForwardFirstProtocol,
    "distinguisher": ComponentGrowingDistinguisher,
    "adaptive": AdaptiveSolver,
}


def make_protocol(name: str, s: int) -> Protocol:
    try:
        return PROTOCOLS[name](s)
    except KeyError:
        raise ValueError(f"unknown protocol {name!r}; choose from {sorted(PROTOCOLS)}") from None


def component_growing_distinguisher(s: int) -> ComponentGrowingDistinguisher:
    return ComponentGrowingDistinguisher(s)


def adaptive_solver(s: int) -> AdaptiveSolver:
    return AdaptiveSolver(s)


def run_protocol(p: Protocol, inst: DihpInstance, rng: np.random.Generator | None = None) -> Transcript:
    """Run the players in order, enforcing the budget on counted bits."""
    p.reset(inst.n, inst.alpha_n, inst.T, rng)
    messages = []
    for t, (M, w) in enumerate(zip(inst.matchings, inst.labels), start=1):
        msg = p.respond(t, M, w)
        if not isinstance(msg, Message):
            raise TypeError("respond must return a Message")
        if len(msg.bits) > p.budget:
            raise BudgetViolation(f"player {t} posted {len(msg.bits)} bits, budget {p.budget}")
        p.observe(t, M, msg)
        messages.append(msg)
    return Transcript(tuple(messages), p.budget, p.read_output(messages[-1]), p.info())


def dump_transcript(tr: Transcript) -> str:
    lines = ["dihp-transcript 1", f"budget {tr.budget}", f"output {tr.output.value}"]
    for t, m in enumerate(tr.messages, start=1):
        lines.append(f"S {t} {m.bits or '-'} {m.free or '-'}")
    return "\n".join(lines) + "\n"


def load_transcript(text: str) -> Transcript:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != "dihp-transcript 1":
        raise ValueError("not a dihp-transcript file")
    budget = output = None
    msgs = []
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "budget":
            budget = int(parts[1])
        elif parts[0] == "output":
            output = Case(parts[1])
        elif parts[0] == "S":
            bits, free = (x if x != "-" else "" for x in parts[2:4])
            msgs.append(Message(bits, free))
    if budget is None or output is None:
        raise ValueError("transcript missing budget or output")
    return Transcript(tuple(msgs), budget, output)
