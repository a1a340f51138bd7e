"""Randomized property suite over small valid chains.

Each property is checked against a route that does not share code with the
implementation under test where that is possible: cycle catalogs instead
of SCC arc counts, a null-space linear program instead of the structural
eigenvector test, threshold depth-first enumeration instead of best-first search.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainSpec, chain_to_dict, random_chain, reachable_subchain
from .classify import classify
from .enumeration import enumerate_words, exhaustive_top
from .graph import simple_cycles, transient_graph
from .spectral import (
    nullspace_positive_left_eigenvector,
    positive_left_eigenvector_exists,
    powered,
    solve_beta,
    spectral_radius,
)

PSI_GRID = np.linspace(0.0, 1.0, 11)
ORACLE_TOP = 300
ORACLE_BUDGET = 20_000
FAULTS = ("order",)


@dataclass
class SelftestReport:
    seed: int
    chains: int
    passed: Counter = field(default_factory=Counter)
    failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "chains": self.chains,
            "ok": self.ok,
            "passed": dict(sorted(self.passed.items())),
            "failures": self.failures,
        }


def _catalog_regime(spec: ChainSpec) -> str:
    """Regime read off the full cycle catalog and plain reachability."""
    sub, _ = reachable_subchain(spec)
    g = transient_graph(sub)
    cycles = [set(c.vertices) for c in simple_cycles(g)]
    if not cycles:
        return "finitary"
    for v in g.vertices:
        if sum(v in c for c in cycles) >= 2:
            return "power"

    def reach(src):
        seen, stack = set(src), list(src)
        while stack:
            x = stack.pop()
            for y in g.succ[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return seen

    for a in cycles:
        downstream = reach(a)
        if any(b is not a and downstream & b for b in cycles):
            return "intermediate"
    return "exponential"


def _check_chain(spec: ChainSpec, report: SelftestReport, idx: int, fault: str | None) -> None:
    p = spec.substochastic
    g = transient_graph(spec)
    cycles = simple_cycles(g)
    has_cycle = len(cycles) > 0
    shared = any(sum(v in c.vertices for c in cycles) >= 2 for v in g.vertices)

    def fail(prop, detail):
        report.failures.append(
            {"property": prop, "chain_index": idx, "detail": detail, "chain": chain_to_dict(spec)}
        )

    radii = [spectral_radius(powered(p, psi)).radius for psi in PSI_GRID]
    diffs = np.diff(radii)
    if np.any(diffs > 1e-12) or (has_cycle and np.any(diffs >= 0)):
        fail("monotonicity", {"psi": PSI_GRID.tolist(), "radius": radii})
    else:
        report.passed["monotonicity"] += 1

    if has_cycle:
        if radii[-1] < 1.0 <= radii[0] + 1e-12:
            report.passed["bracketing"] += 1
        else:
            fail("bracketing", {"r0": radii[0], "r1": radii[-1]})
        beta = solve_beta(p)
        if (beta > 0) == shared:
            report.passed["beta_positive_iff_shared_vertex"] += 1
        else:
            fail("beta_positive_iff_shared_vertex", {"beta": beta, "shared_vertex": shared})
        if beta > 0:
            structural, _ = positive_left_eigenvector_exists(spec, beta)
            direct = nullspace_positive_left_eigenvector(powered(p, beta)) is not None
            if structural == direct:
                report.passed["positive_eigenvector"] += 1
            else:
                fail("positive_eigenvector", {"beta": beta, "structural": structural, "direct": direct})

    expected = _catalog_regime(spec)
    got = classify(spec).regime
    if got == expected:
        report.passed["decision_tree"] += 1
    else:
        fail("decision_tree", {"classify": got, "catalog": expected})

    brute = exhaustive_top(spec, ORACLE_TOP, max_words=ORACLE_BUDGET)
    k = min(ORACLE_TOP, brute.certified())
    if k == 0:
        return
    fast = [(rw.states, rw.logprob) for rw in enumerate_words(spec, top=k)]
    if fault == "order" and len(fast) >= 2:
        fast[0], fast[1] = fast[1], fast[0]
    slow = [(w.states, w.logprob) for w in brute.words[:k]]
    if fast == slow:
        report.passed["oracle_equivalence"] += 1
    else:
        first = next(i for i, (a, b) in enumerate(zip(fast, slow)) if a != b)
        fail(
            "oracle_equivalence",
            {"rank": first + 1, "enumerated": list(fast[first][0]), "brute_force": list(slow[first][0])},
        )


def run_selftest(seed: int = 0, chains: int = 100, fault: str | None = None) -> SelftestReport:
    """Check every property on ``chains`` random chains drawn from ``seed``."""
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; choose from {FAULTS}")
    rng = np.random.default_rng(seed)
    report = SelftestReport(seed, chains)
    for idx in range(chains):
        spec = random_chain(rng, n_max=6, max_out=3)
        _check_chain(spec, report, idx, fault)
    return report
