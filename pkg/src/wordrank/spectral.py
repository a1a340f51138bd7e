"""Perron roots of nonnegative matrices and the exponent beta with r(P(beta)) = 1.

The radius of a matrix is the max over the diagonal blocks of its normal
form, i.e. over the strongly connected components of its arc graph. Blocks
that are a single vertex or a single simple cycle have closed forms; the
others go through power iteration on ``(B + I) / 2``, which is primitive
even when ``B`` is periodic, with the Collatz-Wielandt bounds
``min(By/y) <= r <= max(By/y)`` as the stopping rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .chain import ChainSpec
from .graph import Condensation, DirectedGraph, strongly_connected_components

RADIUS_TOL = 1e-13
MAX_ITER = 200_000
BISECTION_STEPS = 64
BETA_TOL = 1e-12
CRITICAL_TOL = 1e-9
RESIDUAL_TOL = 1e-10


class SpectralError(RuntimeError):
    """Power iteration failed to converge, or a runtime bound check failed."""


class NoBetaError(ValueError):
    """The matrix is nilpotent or has a closed class, so beta is undefined."""


@dataclass
class SpectralResult:
    radius: float
    vector: np.ndarray
    iterations: int
    residual: float
    block_radii: list[float] = field(default_factory=list)


def powered(m: np.ndarray, psi: float) -> np.ndarray:
    """Entry-wise ``m ** psi`` with ``0 ** psi = 0`` for every ``psi``."""
    m = np.asarray(m, dtype=float)
    out = np.zeros_like(m)
    pos = m > 0
    out[pos] = m[pos] ** psi
    return out


def _cycle_order(block: np.ndarray) -> list[int]:
    order = [0]
    while True:
        nxt = int(np.flatnonzero(block[order[-1]] > 0)[0])
        if nxt == 0:
            return order
        order.append(nxt)


def _perron_block(block: np.ndarray, tag: str, start=None, tol=RADIUS_TOL, max_iter=MAX_ITER):
    """Perron root and positive right eigenvector of an irreducible block."""
    k = block.shape[0]
    if tag == "trivial":
        return float(block[0, 0]), np.ones(1), 0
    if tag == "cycle":
        # weighted cycle: r^k = product of the arc weights
        order = _cycle_order(block)
        weights = [block[v, order[(i + 1) % k]] for i, v in enumerate(order)]
        r = float(np.prod(weights) ** (1.0 / k))
        y = np.empty(k)
        y[order[0]] = 1.0
        for i in range(k - 1):
            y[order[i + 1]] = r * y[order[i]] / weights[i]
        return r, y / y.max(), 0

    y = np.ones(k) if start is None else np.array(start, dtype=float)
    for it in range(1, max_iter + 1):
        w = block @ y
        ratios = w / y
        lo, hi = ratios.min(), ratios.max()
        if hi - lo <= tol * hi:
            return float(0.5 * (lo + hi)), y, it
        y = 0.5 * (w + y)
        y /= y.max()
    raise SpectralError(
        f"power iteration did not converge in {max_iter} steps (bracket width {hi - lo:.3e})"
    )


class _Blocks:
    """Normal-form decomposition of a fixed sparsity pattern."""

    def __init__(self, pattern: np.ndarray):
        g = DirectedGraph.from_matrix(pattern)
        self.cond: Condensation = strongly_connected_components(g)
        self.index = [np.array(comp) for comp in self.cond.components]
        self._starts: dict[int, np.ndarray] = {}

    def radii(self, m: np.ndarray, which=None) -> list[tuple[float, np.ndarray, int]]:
        out = []
        for c, idx in enumerate(self.index):
            if which is not None and c not in which:
                out.append((np.nan, None, 0))
                continue
            block = m[np.ix_(idx, idx)]
            r, y, it = _perron_block(block, self.cond.tags[c], self._starts.get(c))
            if self.cond.tags[c] == "complex":
                self._starts[c] = y
            out.append((r, y, it))
        return out


def spectral_radius(m: np.ndarray, side: str = "right", tol: float = RADIUS_TOL) -> SpectralResult:
    """Perron root of a nonnegative square matrix with a nonnegative eigenvector.

    ``side="left"`` returns ``y`` with ``y m = r y``. The eigenvector is
    supported on one maximal block that no other maximal block can reach
    (for the right vector: that no other maximal block reaches) and the
    blocks leading into it.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    if np.any(m < 0):
        raise ValueError("matrix must be nonnegative")
    a = m.T if side == "left" else m
    k = a.shape[0]
    if k == 0:
        return SpectralResult(0.0, np.zeros(0), 0, 0.0, [])

    blocks = _Blocks(a)
    per_block = blocks.radii(a)
    radii = [r for r, _, _ in per_block]
    iters = sum(it for _, _, it in per_block)
    r = max(radii)

    sums = a.sum(axis=1)
    slack = 1e-12 * max(1.0, float(sums.max()))
    if not (sums.min() - slack <= r <= sums.max() + slack):
        raise SpectralError(f"radius {r} outside row-sum bracket [{sums.min()}, {sums.max()}]")

    cond = blocks.cond
    # components are sinks first; the last maximal one has no maximal ancestor
    near = [c for c, rc in enumerate(radii) if rc >= r - tol * max(r, 1e-300)]
    target = near[-1]
    ancestors = {c for c in range(len(radii)) if target in cond.descendants(c)}
    y = np.zeros(k)
    y[blocks.index[target]] = per_block[target][1]
    for c in range(target + 1, len(radii)):
        if c not in ancestors:
            continue
        idx = blocks.index[c]
        rhs = a[idx] @ y
        lhs = r * np.eye(len(idx)) - a[np.ix_(idx, idx)]
        y[idx] = np.linalg.solve(lhs, rhs)
    y = np.clip(y, 0.0, None)
    y /= y.max()
    residual = float(np.abs(a @ y - r * y).max())
    return SpectralResult(r, y, iters, residual, radii)


def _check_beta_conditions(p: np.ndarray, cond: Condensation, index) -> None:
    if all(tag == "trivial" for tag in cond.tags):
        raise NoBetaError("acyclic: no beta (the matrix is nilpotent, every word list is finite)")
    if np.any(p.sum(axis=1) > 1 + 1e-12):
        raise NoBetaError("matrix is not substochastic")
    for c, idx in enumerate(index):
        inner = p[np.ix_(idx, idx)].sum(axis=1)
        if cond.tags[c] != "trivial" and inner.min() >= 1 - 1e-12:
            states = ", ".join(str(i + 1) for i in idx)
            raise NoBetaError(f"states {{{states}}} form a closed class; they are recurrent")


def solve_beta(p: np.ndarray) -> float:
    """The unique ``beta`` in ``[0, 1)`` with ``r(P(beta)) = 1``.

    ``beta = 0`` exactly when no vertex lies on two simple cycles (every
    nontrivial block is then a simple cycle with radius 1 at 0). Otherwise
    ``r`` is strictly decreasing on ``[0, 1]`` with ``r(0) > 1 > r(1)``,
    and a fixed number of bisection steps brackets the root to float
    resolution.
    """
    p = np.asarray(p, dtype=float)
    blocks = _Blocks(p)
    _check_beta_conditions(p, blocks.cond, blocks.index)
    complex_blocks = {c for c, tag in enumerate(blocks.cond.tags) if tag == "complex"}
    if not complex_blocks:
        return 0.0

    def radius(psi: float) -> float:
        # trivial and cycle blocks have radius < 1 for psi > 0
        return max(r for r, _, _ in blocks.radii(powered(p, psi), complex_blocks) if r == r)

    lo, hi = 0.0, 1.0
    if not (radius(lo) > 1.0 > radius(hi)):
        raise SpectralError("r(P(0)) > 1 > r(P(1)) does not hold; cannot bracket beta")
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if radius(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    beta = 0.5 * (lo + hi)
    gap = abs(radius(beta) - 1.0)
    if gap > BETA_TOL:
        raise SpectralError(f"|r(P(beta)) - 1| = {gap:.3e} exceeds {BETA_TOL}")
    return beta


def component_radii(spec: ChainSpec, beta: float) -> tuple[Condensation, list[float]]:
    """Per-SCC radii of ``P_H(beta)``; SCC vertices are chain states 1..n."""
    p = spec.substochastic
    blocks = _Blocks(p)
    radii = [r for r, _, _ in blocks.radii(powered(p, beta))]
    comps = [tuple(int(i) + 1 for i in comp) for comp in blocks.cond.components]
    comp_of = {v: c for c, comp in enumerate(comps) for v in comp}
    cond = Condensation(comps, comp_of, blocks.cond.arcs, blocks.cond.tags, blocks.cond.internal_arcs)
    return cond, radii


def critical_components(spec: ChainSpec, beta: float, tol: float = CRITICAL_TOL) -> list[int]:
    """SCC ids (in :func:`component_radii` order) with ``|r(P_H(beta)) - 1| <= tol``."""
    cond, radii = component_radii(spec, beta)
    critical = [c for c, r in enumerate(radii) if abs(r - 1.0) <= tol]
    if beta > 0:
        for c in critical:
            if cond.tags[c] != "complex":
                raise SpectralError(
                    f"critical component {cond.components[c]} has no vertex on two cycles"
                )
    return critical


def positive_left_eigenvector_exists(
    spec: ChainSpec, beta: float, tol: float = CRITICAL_TOL
) -> tuple[bool, np.ndarray | None]:
    """Whether ``P(beta)^T`` has a positive eigenvector for eigenvalue 1.

    Decided structurally: the critical components must be exactly the
    components without incoming arcs. When they are, the vector is built
    from the left Perron vectors of the critical sources, propagated
    downstream through ``(I - P_J(beta))^{-1}``, and checked for positivity
    and residual.
    """
    p = powered(spec.substochastic, beta)
    cond, radii = component_radii(spec, beta)
    critical = set(c for c, r in enumerate(radii) if abs(r - 1.0) <= tol)
    if critical != set(cond.sources()):
        return False, None

    index = [np.array(comp) - 1 for comp in cond.components]
    e = np.zeros(spec.n)
    # sources first
    for c in reversed(range(len(index))):
        idx = index[c]
        block = p[np.ix_(idx, idx)]
        if c in critical:
            _, u, _ = _perron_block(block.T.copy(), cond.tags[c])
            e[idx] = u
        else:
            inflow = e @ p[:, idx]
            e[idx] = np.linalg.solve((np.eye(len(idx)) - block).T, inflow)
    e /= e.max()
    residual = float(np.abs(e @ p - e).max())
    if e.min() <= 0 or residual > RESIDUAL_TOL:
        raise SpectralError(
            f"structural test passed but eigenvector check failed (min {e.min():.3e}, residual {residual:.3e})"
        )
    return True, e


def nullspace_positive_left_eigenvector(m: np.ndarray, rank_tol: float = 1e-9) -> np.ndarray | None:
    """Direct search for ``e > 0`` with ``e m = e``, without graph structure.

    Takes the numerical null space of ``m^T - I`` and asks a linear program
    for a combination whose entries are all at least 1.
    """
    k = m.shape[0]
    basis = scipy.linalg.null_space(m.T - np.eye(k), rcond=rank_tol)
    if basis.shape[1] == 0:
        return None
    res = scipy.optimize.linprog(
        c=np.zeros(basis.shape[1]),
        A_ub=-basis,
        b_ub=-np.ones(k),
        bounds=[(None, None)] * basis.shape[1],
        method="highs",
    )
    if res.status != 0:
        return None
    e = basis @ res.x
    return e / e.max()
