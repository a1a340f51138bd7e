"""Decay regime of the ranked word probabilities p(t).

Decision tree on the arc graph G of the transient states reachable from
the initial support:

* no cycle -> ``finitary``;
* a vertex on two simple cycles -> ``power`` with exponent ``1/beta``;
  the order is exact unless one path of the condensation meets two
  critical components;
* otherwise every nontrivial component is a single cycle, and the decay is
  ``exponential`` when no cycle reaches another and ``intermediate`` when
  one does.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .asymptotics import compute_nu
from .chain import ChainError, ChainSpec, reachable_subchain, validate_chain
from .graph import (
    cycle_chain_witness,
    paths_touch_at_most_one_cycle,
    simple_cycles,
    strongly_connected_components,
    transient_graph,
    vertex_on_two_cycles,
)
from .spectral import CRITICAL_TOL, component_radii, positive_left_eigenvector_exists, solve_beta

log = logging.getLogger(__name__)

REGIMES = ("finitary", "power", "intermediate", "exponential")


@dataclass
class RegimeReport:
    regime: str
    beta: float | None = None
    exact_order: bool | None = None
    nu: float | None = None
    alpha: float | None = None
    evidence: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "beta": self.beta,
            "exact_order": self.exact_order,
            "nu": self.nu,
            "alpha": self.alpha,
            "evidence": self.evidence,
            "warnings": self.warnings,
        }


def _names(kept, states):
    return [kept[v] for v in states]


def classify(spec: ChainSpec, critical_tol: float = CRITICAL_TOL) -> RegimeReport:
    """Regime and its parameters; state numbers in the evidence are the chain's own."""
    check = validate_chain(spec)
    if not check.ok:
        raise ChainError("; ".join(v.message for v in check.errors))
    sub, kept = reachable_subchain(spec)
    warnings = []
    if len(kept) - 1 < spec.n:
        msg = f"ignoring {spec.n - len(kept) + 1} state(s) unreachable from the initial support"
        log.info(msg)
        warnings.append(msg)

    g = transient_graph(sub)
    cond = strongly_connected_components(g)
    evidence: dict = {
        "components": [
            {"states": _names(kept, comp), "kind": cond.tags[c]}
            for c, comp in enumerate(cond.components)
        ],
    }

    if all(tag == "trivial" for tag in cond.tags):
        return RegimeReport("finitary", evidence=evidence, warnings=warnings)

    shared, witness = vertex_on_two_cycles(g, cond)
    if shared:
        beta = solve_beta(sub.substochastic)
        rcond, radii = component_radii(sub, beta)
        critical = [c for c, r in enumerate(radii) if abs(r - 1.0) <= critical_tol]
        on_one_path = [
            (a, b) for a in critical for b in critical if b in rcond.descendants(a)
        ]
        positive, _ = positive_left_eigenvector_exists(sub, beta, critical_tol)
        evidence.update(
            shared_vertex=kept[witness],
            component_radii=[
                {"states": _names(kept, comp), "radius": radii[c]}
                for c, comp in enumerate(rcond.components)
            ],
            critical=[_names(kept, rcond.components[c]) for c in critical],
            critical_chain=[
                [_names(kept, rcond.components[a]), _names(kept, rcond.components[b])]
                for a, b in on_one_path
            ],
            positive_left_eigenvector=positive,
        )
        return RegimeReport(
            "power", beta=beta, exact_order=not on_one_path, evidence=evidence, warnings=warnings
        )

    cycles = simple_cycles(g)
    heaviest = cycles.heaviest()
    evidence["cycles"] = [
        {"cycle": _names(kept, c.vertices), "weight": c.weight} for c in cycles
    ]
    evidence["heaviest_cycle"] = _names(kept, heaviest.vertices)
    if paths_touch_at_most_one_cycle(g, cond):
        rates = compute_nu(spec)
        evidence["nu_terms"] = rates.to_dict()["cycles"]
        return RegimeReport(
            "exponential", nu=rates.nu, alpha=rates.alpha, evidence=evidence, warnings=warnings
        )
    c1, c2 = cycle_chain_witness(g, cond)
    evidence["cycle_chain"] = [_names(kept, cond.components[c1]), _names(kept, cond.components[c2])]
    return RegimeReport("intermediate", alpha=heaviest.weight, evidence=evidence, warnings=warnings)
