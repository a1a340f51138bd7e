"""Exact ranked word lists p(t), the counting function Q(q), and oracles.

Words are ordered by decreasing probability. Log-probabilities within
``tie_band`` of their neighbour form one tie group (single linkage on the
sorted values); inside a group words are ordered by length, then by their
state sequence. Both the best-first enumerator and the brute-force oracle
apply exactly this rule, so their outputs can be compared verbatim.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .chain import ChainSpec, Word, log_tables

TIE_BAND = 1e-12
EXPANSION_CAP = 10**8
BRUTE_FORCE_CAP = 2_000_000
NONREPEATING_CAP = 1_000_000
BISECTION_STEPS = 8

_WORD, _PREFIX = 0, 1


class EnumerationCapExceeded(RuntimeError):
    def __init__(self, message: str, emitted: int):
        super().__init__(message)
        self.emitted = emitted


@dataclass(frozen=True)
class RankedWord:
    rank: int
    word: Word

    @property
    def states(self) -> tuple[int, ...]:
        return self.word.states

    @property
    def logprob(self) -> float:
        return self.word.logprob

    @property
    def prob(self) -> float:
        return self.word.prob

    @property
    def length(self) -> int:
        return self.word.length


def _tie_key(states: tuple[int, ...]):
    return (len(states), states)


def _unwind(node) -> tuple[int, ...]:
    out = [0]
    push = out.append
    while node:
        state, node = node
        push(state)
    out.reverse()
    return tuple(out)


def enumerate_words(
    spec: ChainSpec,
    top: int | None = None,
    min_prob: float | None = None,
    expansion_cap: int = EXPANSION_CAP,
    tie_band: float = TIE_BAND,
) -> Iterator[RankedWord]:
    """Stream the most probable words in rank order.

    Best-first search over prefixes: a prefix's probability bounds every
    completion because all factors are at most 1, so a word popped from the
    frontier is never beaten by anything still in it. Stops after ``top``
    words, or once every word with probability at least ``min_prob`` is out.

    Raises :class:`EnumerationCapExceeded` after ``expansion_cap`` pops; the
    words yielded before that are correct.
    """
    if top is not None and top < 1:
        raise ValueError("top must be at least 1")
    logm, loga = log_tables(spec)
    n = spec.n
    succ = [[j for j in range(1, n + 1) if logm[i][j] > -math.inf] for i in range(n + 1)]
    absorb = [logm[i][0] for i in range(n + 1)]
    floor = -math.inf if min_prob is None else math.log(min_prob) - tie_band

    seq = itertools.count()
    heap: list = []
    if spec.a0 > 0:
        heap.append((-math.log(spec.a0), next(seq), None, _WORD))
    for i in range(1, n + 1):
        if loga[i] > -math.inf:
            heap.append((-loga[i], next(seq), (i, None), _PREFIX))
    heapq.heapify(heap)

    emitted = 0
    pops = 0
    group: list[tuple[float, object]] = []
    group_floor = math.inf

    def flush():
        nonlocal emitted
        words = sorted(
            ((_unwind(node), logp) for logp, node in group), key=lambda w: _tie_key(w[0])
        )
        group.clear()
        for states, logp in words:
            emitted += 1
            yield RankedWord(emitted, Word(states, logp))
            if top is not None and emitted >= top:
                return

    while True:
        top_logp = -heap[0][0] if heap else -math.inf
        if group and (top_logp < group_floor - tie_band or top_logp < floor):
            yield from flush()
            if top is not None and emitted >= top:
                return
            continue
        if not heap or top_logp < floor:
            return
        pops += 1
        if pops > expansion_cap:
            raise EnumerationCapExceeded(
                f"expansion cap {expansion_cap} reached after {emitted} words", emitted
            )
        neg, _, node, kind = heapq.heappop(heap)
        logp = -neg
        if kind == _WORD:
            group.append((logp, node))
            group_floor = logp
            continue
        i = node[0]
        if absorb[i] > -math.inf:
            heapq.heappush(heap, (-(logp + absorb[i]), next(seq), node, _WORD))
        row = logm[i]
        for j in succ[i]:
            heapq.heappush(heap, (-(logp + row[j]), next(seq), (j, node), _PREFIX))


def rank_series(spec: ChainSpec, top: int, **kwargs) -> tuple[np.ndarray, np.ndarray]:
    """Ranks ``t = 1..T`` and ``ln p(t)`` as arrays (the states are dropped)."""
    logp = np.fromiter((rw.logprob for rw in enumerate_words(spec, top=top, **kwargs)), float)
    return np.arange(1, logp.size + 1), logp


def count_words_by_length(spec: ChainSpec, max_length: int) -> list[int]:
    """Number of words of each length ``0..max_length`` (exact integers)."""
    n = spec.n
    adj = [[j for j in range(1, n + 1) if spec.matrix[i, j] > 0] for i in range(n + 1)]
    ends = [1 if i > 0 and spec.matrix[i, 0] > 0 else 0 for i in range(n + 1)]
    counts = [1 if spec.a0 > 0 else 0]
    ways = [0] + [1 if spec.initial[i - 1] > 0 else 0 for i in range(1, n + 1)]
    for _ in range(max_length):
        counts.append(sum(w * e for w, e in zip(ways, ends)))
        nxt = [0] * (n + 1)
        for i in range(1, n + 1):
            if ways[i]:
                for j in adj[i]:
                    nxt[j] += ways[i]
        ways = nxt
    return counts


@dataclass
class BruteForceResult:
    words: list[Word]
    max_length: int
    longer_bound: float  # log-probability bound for every word longer than max_length

    def certified(self, tie_band: float = TIE_BAND) -> int:
        """How many leading words are provably the true top of the full list.

        A leading tie group counts only if its smallest log-probability
        clears ``longer_bound`` by more than the tie band.
        """
        return _certified_count([w.logprob for w in self.words], self.longer_bound, tie_band)


def sort_words(words: list[Word], tie_band: float = TIE_BAND) -> list[Word]:
    """Sort by decreasing probability with single-linkage tie groups."""
    by_prob = sorted(words, key=lambda w: -w.logprob)
    out: list[Word] = []
    k = 0
    while k < len(by_prob):
        j = k
        while j + 1 < len(by_prob) and by_prob[j].logprob - by_prob[j + 1].logprob <= tie_band:
            j += 1
        out.extend(sorted(by_prob[k : j + 1], key=lambda w: _tie_key(w.states)))
        k = j + 1
    return out


def brute_force_words(
    spec: ChainSpec, max_length: int, max_words: int = BRUTE_FORCE_CAP
) -> BruteForceResult:
    """Every word of length at most ``max_length``, depth-first, then sorted."""
    total = sum(count_words_by_length(spec, max_length))
    if total > max_words:
        raise OverflowError(f"{total} words up to length {max_length} exceed the guard {max_words}")
    logm, loga = log_tables(spec)
    n = spec.n
    words: list[Word] = []
    if spec.a0 > 0:
        words.append(Word((0,), math.log(spec.a0)))
    bound = -math.inf
    stack = [((i,), loga[i]) for i in range(n, 0, -1) if loga[i] > -math.inf]
    while stack:
        prefix, logp = stack.pop()
        i = prefix[-1]
        if logm[i][0] > -math.inf:
            words.append(Word(prefix + (0,), logp + logm[i][0]))
        for j in range(1, n + 1):
            if logm[i][j] == -math.inf:
                continue
            child = logp + logm[i][j]
            if len(prefix) < max_length:
                stack.append((prefix + (j,), child))
            else:
                bound = max(bound, child)
    return BruteForceResult(sort_words(words), max_length, bound)


def _certified_count(logs: list[float], longer_bound: float, tie_band: float) -> int:
    logs = sorted(logs, reverse=True)
    cut = 0
    k = 0
    while k < len(logs):
        j = k
        while j + 1 < len(logs) and logs[j] - logs[j + 1] <= tie_band:
            j += 1
        if logs[j] <= longer_bound + tie_band:
            break
        cut = j + 1
        k = j + 1
    return cut


def _threshold_scan(spec: ChainSpec, log_floor: float, max_words: int, keep_states: bool):
    """Words above the floor as ``(states or None, logp)`` plus the bound on the rest.

    Prefixes are plain tuples: the stack stays shallow and a tuple copy is
    far cheaper than walking a linked list per word.
    """
    logm, loga = log_tables(spec)
    n = spec.n
    bound = -math.inf
    stack = []
    for i in range(n, 0, -1):
        if loga[i] >= log_floor:
            stack.append((i, (i,) if keep_states else None, loga[i]))
        elif loga[i] > -math.inf:
            bound = max(bound, loga[i])
    succ = [[j for j in range(1, n + 1) if logm[i][j] > -math.inf] for i in range(n + 1)]
    found: list[tuple] = []
    if spec.a0 > 0:
        found.append(((0,), math.log(spec.a0)))
    while stack:
        i, prefix, logp = stack.pop()
        if logm[i][0] > -math.inf:
            found.append((prefix + (0,) if keep_states else None, logp + logm[i][0]))
            if len(found) > max_words:
                raise OverflowError(f"more than {max_words} words above e^{log_floor:.6g}")
        row = logm[i]
        for j in succ[i]:
            child = logp + row[j]
            if child >= log_floor:
                stack.append((j, prefix + (j,) if keep_states else None, child))
            elif child > bound:
                bound = child
    return found, bound


def threshold_words(
    spec: ChainSpec, log_floor: float, max_words: int = BRUTE_FORCE_CAP
) -> BruteForceResult:
    """Every word whose prefixes all have log-probability at least ``log_floor``.

    Depth-first with pruning; any word left out extends a pruned prefix, so
    ``longer_bound`` (the best pruned prefix) bounds every missing word.
    """
    found, bound = _threshold_scan(spec, log_floor, max_words, keep_states=True)
    return BruteForceResult(sort_words([Word(st, lp) for st, lp in found]), -1, bound)


def exhaustive_top(
    spec: ChainSpec, top: int, max_words: int = BRUTE_FORCE_CAP, tie_band: float = TIE_BAND
) -> BruteForceResult:
    """Lower the threshold of :func:`threshold_words` until ``top`` words are certified.

    Stops early when the guard is hit or every word has been listed; the
    result's ``certified()`` says how far it can be trusted.
    """
    _, loga = log_tables(spec)
    start = max([x for x in loga if x > -math.inf] + [math.log(spec.a0) if spec.a0 > 0 else -math.inf])

    def enough(step):
        found, bound = _threshold_scan(spec, start - step, max_words, keep_states=False)
        return bound == -math.inf or _certified_count([lp for _, lp in found], bound, tie_band) >= top

    good, step = 0.0, 1.0
    while True:
        try:
            if enough(step):
                return threshold_words(spec, start - step, max_words)
        except OverflowError:
            break
        good = step
        step *= 2.0
    bad = step
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (good + bad)
        try:
            if enough(mid):
                return threshold_words(spec, start - mid, max_words)
        except OverflowError:
            bad = mid
            continue
        good = mid
    return threshold_words(spec, start - good, max_words)


def longest_feasible_length(spec: ChainSpec, max_words: int = BRUTE_FORCE_CAP, limit: int = 25) -> int:
    """Largest ``L <= limit`` whose brute-force word list stays under ``max_words``."""
    counts = count_words_by_length(spec, limit)
    total = 0
    for L, c in enumerate(counts):
        total += c
        if total > max_words:
            return max(L - 1, 0)
    return limit


def count_q(
    spec: ChainSpec, q: float, tie_band: float = TIE_BAND, cap: int = EXPANSION_CAP
) -> int:
    """Q(q): the number of words with probability not less than ``q``.

    Pruned depth-first search; ``Pr(w) >= q`` is read as
    ``ln Pr(w) >= ln q - tie_band``. Terminates because every cycle of a
    transient chain has weight below 1.
    """
    if not 0 < q <= 1:
        raise ValueError("q must lie in (0, 1]")
    logm, loga = log_tables(spec)
    n = spec.n
    floor = math.log(q) - tie_band
    count = 1 if spec.a0 > 0 and math.log(spec.a0) >= floor else 0
    stack = [(i, loga[i]) for i in range(1, n + 1) if loga[i] >= floor]
    visits = 0
    while stack:
        i, logp = stack.pop()
        visits += 1
        if visits > cap:
            raise EnumerationCapExceeded(f"count_q visited more than {cap} prefixes", count)
        row = logm[i]
        if logp + row[0] >= floor:
            count += 1
        for j in range(1, n + 1):
            child = logp + row[j]
            if child >= floor:
                stack.append((j, child))
    return count


def words_with_nonrepeating_states(spec: ChainSpec, cap: int = NONREPEATING_CAP) -> list[tuple[int, ...]]:
    """All words whose states are pairwise distinct (simple paths to 0 from the support)."""
    n = spec.n
    out: list[tuple[int, ...]] = []
    stack = [(i,) for i in range(n, 0, -1) if spec.initial[i - 1] > 0]
    while stack:
        path = stack.pop()
        i = path[-1]
        if spec.matrix[i, 0] > 0:
            out.append(path + (0,))
            if len(out) > cap:
                raise EnumerationCapExceeded(f"more than {cap} words with nonrepeating states", len(out))
        for j in range(n, 0, -1):
            if spec.matrix[i, j] > 0 and j not in path:
                stack.append(path + (j,))
    out.sort(key=_tie_key)
    return out


def k_of_cycle(words: list[tuple[int, ...]], cycle_vertices) -> int:
    """Number of nonrepeating-state words passing through at least one vertex of the cycle."""
    vs = set(cycle_vertices)
    return sum(1 for w in words if vs.intersection(w))
