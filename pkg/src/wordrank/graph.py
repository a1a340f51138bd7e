"""Arc graphs of a chain, their condensation, and simple-cycle catalogs."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .chain import ChainSpec

DEFAULT_CYCLE_CAP = 10**6


class CycleCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class DirectedGraph:
    """Vertices with sorted successor lists; ``weight`` maps arcs to probabilities."""

    vertices: tuple[int, ...]
    succ: dict[int, tuple[int, ...]]
    weight: dict[tuple[int, int], float] = field(default_factory=dict)

    @classmethod
    def from_matrix(cls, m: np.ndarray, vertices=None) -> "DirectedGraph":
        vertices = tuple(range(m.shape[0])) if vertices is None else tuple(vertices)
        succ, weight = {}, {}
        for v in vertices:
            out = []
            for w in vertices:
                if m[v, w] > 0:
                    out.append(w)
                    weight[(v, w)] = float(m[v, w])
            succ[v] = tuple(out)
        return cls(vertices, succ, weight)

    def arcs(self) -> list[tuple[int, int]]:
        return [(v, w) for v in self.vertices for w in self.succ[v]]

    def subgraph(self, vertices) -> "DirectedGraph":
        keep = set(vertices)
        vs = tuple(v for v in self.vertices if v in keep)
        succ = {v: tuple(w for w in self.succ[v] if w in keep) for v in vs}
        weight = {(v, w): self.weight[(v, w)] for v in vs for w in succ[v] if (v, w) in self.weight}
        return DirectedGraph(vs, succ, weight)


def full_graph(spec: ChainSpec) -> DirectedGraph:
    """G0: all states including the absorbing one."""
    return DirectedGraph.from_matrix(spec.matrix)


def transient_graph(spec: ChainSpec) -> DirectedGraph:
    """G: the subgraph of G0 generated by states 1..n."""
    return DirectedGraph.from_matrix(spec.matrix, range(1, spec.n + 1))


@dataclass
class Condensation:
    """SCCs listed sinks first (reverse topological order) with their DAG.

    ``tags[c]`` is ``"trivial"`` (single vertex, no loop), ``"cycle"`` (the
    component is exactly one simple cycle) or ``"complex"`` (some vertex lies
    on two different simple cycles).
    """

    components: list[tuple[int, ...]]
    comp_of: dict[int, int]
    arcs: set[tuple[int, int]]
    tags: list[str]
    internal_arcs: list[int]

    def successors(self, c: int) -> list[int]:
        return sorted(d for (s, d) in self.arcs if s == c)

    def sources(self) -> list[int]:
        targets = {d for (_, d) in self.arcs}
        return [c for c in range(len(self.components)) if c not in targets]

    def descendants(self, c: int) -> set[int]:
        """Components reachable from ``c`` by at least one arc."""
        out: dict[int, list[int]] = {}
        for s, d in self.arcs:
            out.setdefault(s, []).append(d)
        seen: set[int] = set()
        stack = list(out.get(c, []))
        while stack:
            x = stack.pop()
            if x not in seen:
                seen.add(x)
                stack.extend(out.get(x, []))
        return seen


def strongly_connected_components(g: DirectedGraph) -> Condensation:
    """Tarjan's algorithm, iterative; components come out sinks first."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    components: list[tuple[int, ...]] = []
    counter = itertools.count()

    for root in g.vertices:
        if root in index:
            continue
        index[root] = low[root] = next(counter)
        stack.append(root)
        on_stack.add(root)
        work = [(root, iter(g.succ[root]))]
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = next(counter)
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(g.succ[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                components.append(tuple(sorted(comp)))

    comp_of = {v: c for c, comp in enumerate(components) for v in comp}
    arcs = set()
    internal = [0] * len(components)
    for v, w in g.arcs():
        cv, cw = comp_of[v], comp_of[w]
        if cv == cw:
            internal[cv] += 1
        else:
            arcs.add((cv, cw))
    tags = []
    for c, comp in enumerate(components):
        if internal[c] == 0:
            tags.append("trivial")
        elif internal[c] == len(comp):
            tags.append("cycle")
        else:
            tags.append("complex")
    return Condensation(components, comp_of, arcs, tags, internal)


@dataclass(frozen=True)
class Cycle:
    vertices: tuple[int, ...]
    weight: float

    @property
    def log_weight(self) -> float:
        return math.log(self.weight)


@dataclass
class CycleCatalog:
    cycles: list[Cycle]

    def __len__(self) -> int:
        return len(self.cycles)

    def __iter__(self):
        return iter(self.cycles)

    def heaviest(self) -> Cycle | None:
        """The max-weight cycle; ties go to the first in catalog order."""
        best = None
        for c in self.cycles:
            if best is None or c.weight > best.weight:
                best = c
        return best


def _canonical(cycle: list[int]) -> tuple[int, ...]:
    k = cycle.index(min(cycle))
    return tuple(cycle[k:] + cycle[:k])


def simple_cycles(g: DirectedGraph, cap: int = DEFAULT_CYCLE_CAP) -> CycleCatalog:
    """All simple cycles of ``g``, each rotated to start at its smallest vertex.

    Enumeration stops with :class:`CycleCapExceeded` after ``cap`` cycles;
    the regime classifier never needs the full catalog outside the case
    where every vertex lies on at most one cycle.
    """
    dg = nx.DiGraph()
    dg.add_nodes_from(g.vertices)
    dg.add_edges_from(g.arcs())
    found = []
    for cyc in nx.simple_cycles(dg):
        if len(found) >= cap:
            raise CycleCapExceeded(
                f"more than {cap} simple cycles; the regime can still be read from SCC tags"
            )
        found.append(_canonical(list(cyc)))
    found.sort(key=lambda c: (len(c), c))
    cycles = []
    for c in found:
        w = 1.0
        for v, u in zip(c, c[1:] + c[:1]):
            w *= g.weight.get((v, u), 1.0)
        cycles.append(Cycle(c, w))
    return CycleCatalog(cycles)


def vertex_on_two_cycles(g: DirectedGraph, cond: Condensation | None = None) -> tuple[bool, int | None]:
    """Whether some vertex lies on two different simple cycles, with a witness.

    Decided per SCC: a nontrivial component that is not a single simple cycle
    has more internal arcs than vertices, hence a vertex with two internal
    out-arcs; each of those arcs closes its own cycle through the vertex.
    """
    cond = strongly_connected_components(g) if cond is None else cond
    witnesses = []
    for c, comp in enumerate(cond.components):
        if cond.tags[c] != "complex":
            continue
        members = set(comp)
        witnesses.extend(v for v in comp if sum(1 for w in g.succ[v] if w in members) >= 2)
    if not witnesses:
        return False, None
    return True, min(witnesses)


def paths_touch_at_most_one_cycle(g: DirectedGraph, cond: Condensation | None = None) -> bool:
    """True iff no cycle component of the condensation reaches another one."""
    cond = strongly_connected_components(g) if cond is None else cond
    cyclic = {c for c, tag in enumerate(cond.tags) if tag != "trivial"}
    return all(not (cond.descendants(c) & cyclic) for c in cyclic)


def cycle_chain_witness(g: DirectedGraph, cond: Condensation) -> tuple[int, int] | None:
    """A pair of cycle components ``(c1, c2)`` with ``c2`` reachable from ``c1``."""
    cyclic = [c for c, tag in enumerate(cond.tags) if tag != "trivial"]
    for c in sorted(cyclic, key=lambda c: cond.components[c]):
        hit = sorted(cond.descendants(c) & set(cyclic), key=lambda d: cond.components[d])
        if hit:
            return c, hit[0]
    return None
