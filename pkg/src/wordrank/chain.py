"""Absorbing Markov chains: definition, validation, serialization, composition.

State 0 is the absorbing state ("space"); states 1..n are transient letters.
A word is a trajectory ``(i_1, ..., i_m)`` with ``i_m == 0`` and no earlier 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

ROW_SUM_TOL = 1e-12


class ChainError(ValueError):
    """Malformed chain input (dimension mismatch, bad word, bad composition)."""


@dataclass(frozen=True)
class ChainSpec:
    """Transition matrix over states ``0..n`` plus the initial distribution.

    ``initial`` holds ``a_1..a_n``; the deficit ``1 - sum(initial)`` is the
    probability ``a_0`` of starting absorbed (the empty word).
    """

    matrix: np.ndarray
    initial: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        a = np.array(self.initial, dtype=float).reshape(-1)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ChainError(f"matrix must be square with at least one row, got shape {m.shape}")
        if a.shape[0] != m.shape[0] - 1:
            raise ChainError(
                f"initial must have n={m.shape[0] - 1} entries (states 1..n), got {a.shape[0]}"
            )
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != m.shape[0]:
                raise ChainError(f"labels must name all {m.shape[0]} states, got {len(labels)}")
            object.__setattr__(self, "labels", labels)
        m.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "initial", a)

    @property
    def n(self) -> int:
        return self.matrix.shape[0] - 1

    @property
    def a0(self) -> float:
        # rounding residue of a full initial distribution is not an empty word
        deficit = 1.0 - float(self.initial.sum())
        return deficit if deficit > ROW_SUM_TOL else 0.0

    @property
    def substochastic(self) -> np.ndarray:
        """The block ``P`` of transitions among states 1..n."""
        return self.matrix[1:, 1:]

    def label(self, state: int) -> str:
        if self.labels is not None:
            return self.labels[state]
        return f"E{state}"

    def support(self) -> list[int]:
        return [i + 1 for i in np.flatnonzero(self.initial > 0)]

    def successors(self, state: int) -> list[int]:
        return [int(j) for j in np.flatnonzero(self.matrix[state] > 0)]

    def normalized(self) -> "ChainSpec":
        """Copy with every row rescaled to sum to 1 and row 0 made absorbing."""
        m = np.array(self.matrix, dtype=float)
        sums = m.sum(axis=1)
        if np.any(sums <= 0):
            raise ChainError("cannot normalize a row with zero mass")
        m = m / sums[:, None]
        m[0] = 0.0
        m[0, 0] = 1.0
        return ChainSpec(m, self.initial, self.labels)


@dataclass(frozen=True)
class Word:
    states: tuple[int, ...]
    logprob: float

    @property
    def prob(self) -> float:
        return math.exp(self.logprob)

    @property
    def length(self) -> int:
        return len(self.states) - 1


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str


@dataclass
class ValidationReport:
    errors: list[Violation] = field(default_factory=list)
    warnings: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def kinds(self) -> set[str]:
        return {v.kind for v in self.errors}

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "errors": [{"kind": v.kind, "message": v.message} for v in self.errors],
            "warnings": [{"kind": v.kind, "message": v.message} for v in self.warnings],
        }


def _reach(succ: Mapping[int, Iterable[int]], sources: Iterable[int]) -> set[int]:
    seen = set(sources)
    stack = list(seen)
    while stack:
        v = stack.pop()
        for w in succ[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def reachable_states(spec: ChainSpec) -> list[int]:
    """Non-absorbing states visited with positive probability, ascending."""
    succ = {i: [j for j in spec.successors(i) if j != 0] for i in range(1, spec.n + 1)}
    return sorted(_reach(succ, spec.support()))


def validate_chain(spec: ChainSpec, tol: float = ROW_SUM_TOL) -> ValidationReport:
    """Check stochasticity, the absorbing row, transience and reachability.

    Unreachable states only produce a warning: the analysis ignores them.
    """
    report = ValidationReport()
    m = spec.matrix
    n = spec.n

    if np.any(m < 0) or np.any(m > 1) or not np.all(np.isfinite(m)):
        report.errors.append(Violation("stochastic", "matrix entries must lie in [0, 1]"))
    sums = m.sum(axis=1)
    for i in np.flatnonzero(np.abs(sums - 1.0) > tol):
        report.errors.append(
            Violation("stochastic", f"row {spec.label(int(i))} sums to {sums[i]!r}, not 1")
        )

    expected = np.zeros(n + 1)
    expected[0] = 1.0
    if not np.array_equal(m[0], expected):
        report.errors.append(
            Violation("absorbing", f"row {spec.label(0)} must be (1, 0, ..., 0) exactly")
        )

    a = spec.initial
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        report.errors.append(Violation("initial", "initial probabilities must be nonnegative"))
    if a.sum() > 1 + tol:
        report.errors.append(Violation("initial", f"initial probabilities sum to {a.sum()!r} > 1"))

    # reverse reachability to 0
    pred: dict[int, list[int]] = {i: [] for i in range(n + 1)}
    for i in range(1, n + 1):
        for j in spec.successors(i):
            pred[j].append(i)
    escaping = _reach(pred, [0])
    for i in range(1, n + 1):
        if i not in escaping:
            report.errors.append(
                Violation("recurrent", f"state {spec.label(i)} cannot reach {spec.label(0)}")
            )

    visited = set(reachable_states(spec))
    unreached = [i for i in range(1, n + 1) if i not in visited]
    if unreached:
        names = ", ".join(spec.label(i) for i in unreached)
        report.warnings.append(
            Violation("unreachable", f"states never visited from the initial support: {names}")
        )
    return report


def log_tables(spec: ChainSpec) -> tuple[list[list[float]], list[float]]:
    """``math.log`` of the matrix and of ``a_1..a_n`` (``-inf`` for zeros).

    Every log-probability in the package is a left-to-right sum of these
    values, so one word always gets one bit pattern.
    """
    def lg(x: float) -> float:
        return math.log(x) if x > 0 else -math.inf

    logm = [[lg(float(x)) for x in row] for row in spec.matrix]
    loga = [-math.inf] + [lg(float(x)) for x in spec.initial]
    return logm, loga


def word_logprob(spec: ChainSpec, states: Sequence[int]) -> float:
    """Log-probability of a word, accumulated left to right.

    The summation order matches the enumerators so that equal words give
    bit-identical results.
    """
    states = tuple(int(s) for s in states)
    if not states or states[-1] != 0:
        raise ChainError(f"word {states} must end at the absorbing state 0")
    if any(s == 0 for s in states[:-1]):
        raise ChainError(f"word {states} visits state 0 before its end")
    if any(s < 0 or s > spec.n for s in states):
        raise ChainError(f"word {states} uses a state outside 0..{spec.n}")
    if len(states) == 1:
        if spec.a0 <= 0:
            raise ChainError("empty word has zero probability (a_0 = 0)")
        return math.log(spec.a0)
    first = states[0]
    if spec.initial[first - 1] <= 0:
        raise ChainError(f"word cannot start at {spec.label(first)}: initial probability is 0")
    logm, loga = log_tables(spec)
    logp = loga[first]
    for i, j in zip(states, states[1:]):
        if spec.matrix[i, j] <= 0:
            raise ChainError(f"transition {spec.label(i)} -> {spec.label(j)} has probability 0")
        logp += logm[i][j]
    return logp


def word_probability(spec: ChainSpec, states: Sequence[int]) -> float:
    """Exact product ``a_{i1} p_{i1 i2} ... p_{i_{m-1} 0}``; the empty word ``(0,)`` gives ``a_0``."""
    states = tuple(int(s) for s in states)
    if states == (0,):
        return spec.a0
    word_logprob(spec, states)  # validation only
    prob = float(spec.initial[states[0] - 1])
    for i, j in zip(states, states[1:]):
        prob *= float(spec.matrix[i, j])
    return prob


def make_word(spec: ChainSpec, states: Sequence[int]) -> Word:
    return Word(tuple(int(s) for s in states), word_logprob(spec, states))


def from_letter_probabilities(p: Sequence[float]) -> ChainSpec:
    """Chain whose letters are drawn independently: every row of ``P_0`` is ``p``.

    ``p[0]`` is the space probability. The first letter is drawn from ``p``
    conditioned on not being the space, so ``a_0 = 0``.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise ChainError("letter probabilities must be a nonempty vector")
    if np.any(p < 0) or abs(p.sum() - 1.0) > ROW_SUM_TOL:
        raise ChainError("letter probabilities must be nonnegative and sum to 1")
    if p[0] <= 0:
        raise ChainError("space probability p_0 must be positive, otherwise absorption is impossible")
    n = p.size - 1
    m = np.tile(p, (n + 1, 1))
    m[0] = 0.0
    m[0, 0] = 1.0
    letters = p[1:]
    a = letters / letters.sum() if letters.sum() > 0 else np.zeros(n)
    return ChainSpec(m, a)


def compose_parallel(specs: Sequence[ChainSpec], weights: Sequence[float] | None = None) -> ChainSpec:
    """Disjoint union of chains sharing one absorbing state.

    Chain ``k`` keeps its transition probabilities; its states are shifted by
    the sizes of the chains before it. The initial distribution is the
    ``weights``-mixture of the parts.
    """
    if len(specs) < 2:
        raise ChainError("parallel composition needs at least two chains")
    if weights is None:
        weights = [1.0 / len(specs)] * len(specs)
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(specs),) or np.any(w <= 0) or abs(w.sum() - 1.0) > ROW_SUM_TOL:
        raise ChainError("weights must be positive, one per chain, and sum to 1")

    n = sum(s.n for s in specs)
    m = np.zeros((n + 1, n + 1))
    m[0, 0] = 1.0
    a = np.zeros(n)
    offset = 0
    for spec, wk in zip(specs, w):
        k = spec.n
        block = slice(offset + 1, offset + 1 + k)
        m[block, 0] = spec.matrix[1:, 0]
        m[block, block] = spec.matrix[1:, 1:]
        a[offset : offset + k] = wk * spec.initial
        offset += k
    return ChainSpec(m, a)


def compose_sequential(
    first: ChainSpec,
    second: ChainSpec,
    redirect: Mapping[int, Mapping[int, float]],
) -> ChainSpec:
    """Chain ``first`` feeding into ``second`` through redirected absorption arcs.

    ``redirect[i][j] = f`` moves the fraction ``f`` of the absorption
    probability ``p_{i0}`` of state ``i`` of ``first`` onto a new arc to state
    ``j`` of ``second``. Every state of ``second`` must be reachable from the
    entry states. The initial distribution is that of ``first``.
    """
    if not redirect or not any(redirect.values()):
        raise ChainError("sequential composition needs at least one redirected arc")
    n1, n2 = first.n, second.n
    n = n1 + n2
    m = np.zeros((n + 1, n + 1))
    m[0, 0] = 1.0
    m[1 : n1 + 1, : n1 + 1] = first.matrix[1:, :]
    m[n1 + 1 :, 0] = second.matrix[1:, 0]
    m[n1 + 1 :, n1 + 1 :] = second.matrix[1:, 1:]

    entries = set()
    for i, targets in redirect.items():
        if not 1 <= i <= n1:
            raise ChainError(f"redirected state {i} is not a state of the first chain")
        absorb = first.matrix[i, 0]
        if absorb <= 0:
            raise ChainError(f"state {i} of the first chain has no absorption arc to redirect")
        total = 0.0
        for j, frac in targets.items():
            if not 1 <= j <= n2:
                raise ChainError(f"entry state {j} is not a state of the second chain")
            if not 0 < frac <= 1:
                raise ChainError(f"redirected fraction {frac} must lie in (0, 1]")
            total += frac
            m[i, n1 + j] += frac * absorb
            entries.add(j)
        if total > 1 + ROW_SUM_TOL:
            raise ChainError(f"fractions redirected from state {i} sum to {total} > 1")
        m[i, 0] = absorb * max(0.0, 1.0 - total)

    succ = {j: [k for k in second.successors(j) if k != 0] for j in range(1, n2 + 1)}
    missing = set(range(1, n2 + 1)) - _reach(succ, entries)
    if missing:
        raise ChainError(
            f"states {sorted(missing)} of the second chain are unreachable through the redirected arcs"
        )
    a = np.concatenate([first.initial, np.zeros(n2)])
    return ChainSpec(m, a)


def restrict(spec: ChainSpec, states: Sequence[int]) -> ChainSpec:
    """Sub-chain on ``states`` (closed under transitions); mass leaving it is dropped.

    Intended for the set of reachable states, which is closed, so rows keep
    summing to 1.
    """
    keep = [0] + list(states)
    m = spec.matrix[np.ix_(keep, keep)]
    a = spec.initial[[s - 1 for s in states]]
    labels = tuple(spec.label(s) for s in keep)
    return ChainSpec(m, a, labels)


def random_chain(
    rng: np.random.Generator,
    n_max: int = 6,
    max_out: int = 3,
    full_support: bool = False,
) -> ChainSpec:
    """Random valid chain with at most ``n_max`` transient states.

    Each transient state gets between 1 and ``max_out`` transient successors;
    states that could not reach 0 get an arc to 0, so the result always
    satisfies transience.
    """
    n = int(rng.integers(1, n_max + 1))
    adj = np.zeros((n + 1, n + 1), dtype=bool)
    for i in range(1, n + 1):
        k = int(rng.integers(1, min(max_out, n) + 1))
        adj[i, rng.choice(np.arange(1, n + 1), size=k, replace=False)] = True
        if rng.random() < 0.5:
            adj[i, 0] = True
    pred: dict[int, list[int]] = {i: [] for i in range(n + 1)}
    for i in range(1, n + 1):
        for j in np.flatnonzero(adj[i]):
            pred[int(j)].append(i)
    escaping = _reach(pred, [0])
    for i in range(1, n + 1):
        if i not in escaping:
            adj[i, 0] = True
            escaping |= _reach(pred, [i])

    m = np.where(adj, rng.uniform(0.05, 1.0, size=adj.shape), 0.0)
    m[0] = 0.0
    m[0, 0] = 1.0
    m[1:] /= m[1:].sum(axis=1, keepdims=True)

    if full_support:
        a = rng.uniform(0.1, 1.0, size=n)
    else:
        a = np.where(rng.random(n) < 0.5, rng.uniform(0.1, 1.0, size=n), 0.0)
        if not a.any():
            a[int(rng.integers(n))] = 1.0
    a /= a.sum()
    return ChainSpec(m, a)


def chain_to_dict(spec: ChainSpec) -> dict:
    d = {
        "n": spec.n,
        "matrix": spec.matrix.tolist(),
        "initial": spec.initial.tolist(),
    }
    if spec.labels is not None:
        d["labels"] = list(spec.labels)
    return d


def chain_from_dict(d: Mapping) -> ChainSpec:
    try:
        n = int(d["n"])
        matrix = d["matrix"]
        initial = d["initial"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ChainError(f"chain file needs integer 'n', 'matrix' and 'initial': {exc}") from exc
    if len(matrix) != n + 1 or any(len(row) != n + 1 for row in matrix):
        raise ChainError(f"matrix must have {n + 1} rows of {n + 1} numbers")
    if len(initial) != n:
        raise ChainError(f"initial must have {n} numbers (states 1..n)")
    return ChainSpec(np.array(matrix, dtype=float), np.array(initial, dtype=float), d.get("labels"))


def load_chain(path: str | Path) -> ChainSpec:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ChainError(f"{path}: invalid JSON: {exc}") from exc
    return chain_from_dict(data)


def dump_chain(spec: ChainSpec, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(chain_to_dict(spec), fh, indent=2)
        fh.write("\n")


BUNDLED = ("fig1a", "fig1b", "fig1c", "fig1d", "fig1e", "fig1e_start1", "fig2")


def bundled_chain(name: str) -> ChainSpec:
    """One of the shipped example chains (reconstructed figure topologies)."""
    from importlib.resources import files

    if name not in BUNDLED:
        raise ChainError(f"unknown bundled chain {name!r}; choose from {', '.join(BUNDLED)}")
    return load_chain(files("wordrank") / "data" / f"{name}.json")


def reachable_subchain(spec: ChainSpec) -> tuple[ChainSpec, list[int]]:
    """The chain on states reachable from the initial support.

    Returns the sub-chain and ``kept``, where ``kept[i]`` is the original
    index of sub-chain state ``i`` (``kept[0] == 0``).
    """
    states = reachable_states(spec)
    if len(states) == spec.n:
        return spec, list(range(spec.n + 1))
    return restrict(spec, states), [0] + states
