"""Labelled union-find forest with the squared-size potential.

Each vertex stores its label parity relative to its parent, so the parity
x_u xor x_v implied by a tree path is available in near-constant time. The
potential ||F|| (sum of squared sizes of components with at least two
vertices) is updated on every union.
"""

from __future__ import annotations

from dataclasses import dataclass


class ContradictionError(ValueError):
    """A labelled cycle has odd parity."""


@dataclass(frozen=True)
class LabeledEdge:
    a: int
    b: int
    label: int


class Forest:
    """Acyclic labelled edge set over [n]."""

    def __init__(self, n: int):
        self.n = n
        self._parent = list(range(n))
        self._parity = [0] * n  # label parity to parent
        self._size = [1] * n
        self._members: dict[int, list[int]] = {}
        self._edges: dict[int, list[LabeledEdge]] = {}
        self._potential = 0

    def find(self, v: int) -> tuple[int, int]:
        """(root, parity of v relative to root)."""
        parent, parity = self._parent, self._parity
        path = []
        while parent[v] != v:
            path.append(v)
            v = parent[v]
        root = v
        # compress, accumulating parity from the top of the path down
        acc = 0
        for u in reversed(path):
            acc ^= parity[u]
            parity[u] = acc
            parent[u] = root
        return root, (parity[path[0]] if path else 0)

    def component_size(self, v: int) -> int:
        return self._size[self.find(v)[0]]

    def in_nontrivial(self, v: int) -> bool:
        return self._size[self.find(v)[0]] >= 2

    def connected(self, a: int, b: int) -> bool:
        return self.find(a)[0] == self.find(b)[0]

    def path_parity(self, a: int, b: int) -> int | None:
        """Label sum along the tree path from a to b, or None if disconnected."""
        ra, pa = self.find(a)
        rb, pb = self.find(b)
        if ra != rb:
            return None
        return pa ^ pb

    def add_edge(self, a: int, b: int, label: int = 0) -> int | None:
        """Insert edge (a, b).

        Returns None when the edge joins two components. If a and b are already
        connected the edge is not stored and the parity of the closed cycle
        (label plus tree path) is returned.
        """
        if a == b:
            raise ValueError("self-loop")
        label &= 1
        ra, pa = self.find(a)
        rb, pb = self.find(b)
        if ra == rb:
            return label ^ pa ^ pb
        sa, sb = self._size[ra], self._size[rb]
        if sa < sb:
            ra, rb, sa, sb = rb, ra, sb, sa
        self._parent[rb] = ra
        self._parity[rb] = pa ^ pb ^ label
        self._size[ra] = sa + sb
        self._potential += (sa + sb) ** 2 - (sa * sa if sa >= 2 else 0) - (sb * sb if sb >= 2 else 0)
        members = self._members.pop(ra, [ra])
        members.extend(self._members.pop(rb, [rb]))
        self._members[ra] = members
        edges = self._edges.pop(ra, [])
        edges.extend(self._edges.pop(rb, []))
        edges.append(LabeledEdge(min(a, b), max(a, b), label))
        self._edges[ra] = edges
        return None

    def remove_component(self, v: int) -> None:
        """Dissolve the component containing v back into singletons."""
        root = self.find(v)[0]
        size = self._size[root]
        if size < 2:
            return
        for u in self._members.pop(root):
            self._parent[u] = u
            self._parity[u] = 0
            self._size[u] = 1
        self._edges.pop(root, None)
        self._potential -= size * size

    @property
    def potential(self) -> int:
        return self._potential

    def recompute_potential(self) -> int:
        return sum(s * s for s in (len(m) for m in self._members.values()) if s >= 2)

    def components(self) -> list[list[int]]:
        """Vertex lists of the nontrivial components."""
        return [sorted(m) for m in self._members.values()]

    def roots(self) -> list[int]:
        return list(self._members)

    def members(self, root: int) -> list[int]:
        return self._members.get(root, [root])

    def edges(self) -> list[LabeledEdge]:
        out = [e for es in self._edges.values() for e in es]
        out.sort(key=lambda e: (e.a, e.b))
        return out

    def edge_count(self) -> int:
        return sum(len(es) for es in self._edges.values())

    def nontrivial_vertex_count(self) -> int:
        return sum(len(m) for m in self._members.values())

    @classmethod
    def from_edges(cls, n: int, edges, strict: bool = True) -> "Forest":
        """Build from (a, b, label) triples.

        Redundant edges with even cycle parity are dropped; an odd cycle raises
        ContradictionError. With ``strict=False`` odd cycles are dropped too.
        """
        forest = cls(n)
        for a, b, label in edges:
            cyc = forest.add_edge(a, b, label)
            if cyc == 1 and strict:
                raise ContradictionError(f"edge {(a, b)} closes an odd labelled cycle")
        return forest


def forest_potential(forest: Forest) -> int:
    return forest.potential
