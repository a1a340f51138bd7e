"""Rate parameters of the exponential regime and empirical fits of p(t).

The fits work on ``ln p(t)`` throughout: in the exponential regime ``p(t)``
underflows long before ``t = 10**4``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

import numpy as np

from .chain import ChainSpec, reachable_subchain
from .enumeration import count_q, k_of_cycle, words_with_nonrepeating_states
from .graph import (
    CycleCatalog,
    paths_touch_at_most_one_cycle,
    simple_cycles,
    strongly_connected_components,
    transient_graph,
)

GEOMETRIC_RATIO = 1.05
MIN_WINDOW_POINTS = 50
MIN_SERIES = 100
TRAILING_FRACTION = 0.5
SHAPE_SLOPE = 0.25


class RegimeMismatch(ValueError):
    pass


@dataclass
class CycleTerm:
    vertices: tuple[int, ...]
    weight: float
    k: int
    contribution: float  # -k / ln(weight)


@dataclass
class RateParameters:
    nu: float
    alpha: float
    heaviest: tuple[int, ...]
    terms: list[CycleTerm] = field(default_factory=list)

    @property
    def inverse_nu(self) -> float:
        return math.fsum(t.contribution for t in self.terms)

    def to_dict(self) -> dict:
        return {
            "nu": self.nu,
            "alpha": self.alpha,
            "heaviest_cycle": list(self.heaviest),
            "cycles": [
                {"cycle": list(t.vertices), "weight": t.weight, "k": t.k, "contribution": t.contribution}
                for t in self.terms
            ],
        }


def compute_nu(
    spec: ChainSpec,
    cycles: CycleCatalog | None = None,
    k_values: list[int] | None = None,
) -> RateParameters:
    """Exponential rate ``nu`` from ``1/nu = -sum_c k(c) / ln w(c)``.

    ``k(c)`` counts words with nonrepeating states that pass through ``c``;
    ``w(c)`` is the product of arc probabilities around ``c``. ``alpha`` is
    the heaviest cycle weight. Only the states reachable from the initial
    support are considered. Cycle vertices are reported in the chain's own
    numbering.
    """
    sub, kept = reachable_subchain(spec)
    g = transient_graph(sub)
    cond = strongly_connected_components(g)
    if "complex" in cond.tags:
        raise RegimeMismatch("a vertex lies on two simple cycles: the regime is a power law")
    if all(tag == "trivial" for tag in cond.tags):
        raise RegimeMismatch("no cycles: the word list is finite")
    if not paths_touch_at_most_one_cycle(g, cond):
        raise RegimeMismatch("a path meets two cycles: decay is faster than power but not exponential")

    if cycles is None:
        cycles = CycleCatalog(
            [type(c)(tuple(kept[v] for v in c.vertices), c.weight) for c in simple_cycles(g)]
        )
    if k_values is None:
        words = words_with_nonrepeating_states(spec)
        k_values = [k_of_cycle(words, c.vertices) for c in cycles]
    if len(k_values) != len(cycles):
        raise ValueError("one k value per cycle is required")

    terms = [
        CycleTerm(c.vertices, c.weight, int(k), -k / math.log(c.weight))
        for c, k in zip(cycles, k_values)
    ]
    inverse = math.fsum(t.contribution for t in terms)
    heaviest = cycles.heaviest()
    return RateParameters(1.0 / inverse, heaviest.weight, heaviest.vertices, terms)


@dataclass
class FitResult:
    model: str  # "power" or "exponential"
    slope: float
    intercept: float
    t_min: int
    t_max: int
    residual: float  # RMS of ln p about the fitted line
    samples: int

    @property
    def estimate(self) -> float:
        """``1/beta`` for the power model, ``nu`` for the exponential one."""
        return -self.slope

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "slope": self.slope,
            "estimate": self.estimate,
            "intercept": self.intercept,
            "t_min": self.t_min,
            "t_max": self.t_max,
            "residual": self.residual,
            "samples": self.samples,
        }


def window_ranks(
    t_max: int,
    ratio: float = GEOMETRIC_RATIO,
    min_points: int = MIN_WINDOW_POINTS,
    fraction: float = TRAILING_FRACTION,
) -> np.ndarray:
    """Geometrically spaced ranks ending at ``t_max``.

    Covers the trailing ``fraction`` of the ranks; when that yields fewer
    than ``min_points`` distinct ranks the window is stretched towards 1.
    """
    ranks: list[int] = []
    x = float(t_max)
    while x >= 1:
        r = int(round(x))
        if not ranks or r != ranks[-1]:
            if r < fraction * t_max and len(ranks) >= min_points:
                break
            ranks.append(r)
        x /= ratio
    return np.array(sorted(set(ranks)))


def _line_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    if x.size < 2 or np.ptp(x) == 0 or not np.all(np.isfinite(y)):
        raise ValueError("degenerate fit window")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))


def _window(t, logp, ratio, min_points, fraction):
    t = np.asarray(t)
    logp = np.asarray(logp, dtype=float)
    if t.size < MIN_SERIES:
        raise ValueError(f"need at least {MIN_SERIES} points, got {t.size}")
    if not np.array_equal(t, np.arange(1, t.size + 1)):
        raise ValueError("ranks must be 1..T")
    ranks = window_ranks(int(t[-1]), ratio, min_points, fraction)
    return ranks, logp[ranks - 1]


def fit_power_exponent(
    t, logp, ratio=GEOMETRIC_RATIO, min_points=MIN_WINDOW_POINTS, fraction=TRAILING_FRACTION
) -> FitResult:
    """Least-squares slope of ``ln p`` against ``ln t``; ``-slope`` estimates ``1/beta``."""
    ranks, y = _window(t, logp, ratio, min_points, fraction)
    slope, intercept, res = _line_fit(np.log(ranks), y)
    return FitResult("power", slope, intercept, int(ranks[0]), int(ranks[-1]), res, ranks.size)


def fit_exponential_rate(
    t, logp, ratio=GEOMETRIC_RATIO, min_points=MIN_WINDOW_POINTS, fraction=TRAILING_FRACTION
) -> FitResult:
    """Least-squares slope of ``ln p`` against ``t``; ``-slope`` estimates ``nu``."""
    ranks, y = _window(t, logp, ratio, min_points, fraction)
    slope, intercept, res = _line_fit(ranks.astype(float), y)
    return FitResult("exponential", slope, intercept, int(ranks[0]), int(ranks[-1]), res, ranks.size)


def select_model(t, logp, **window) -> dict:
    """Both fits and the one with the smaller residual.

    A diagnostic only; the structural classification is authoritative.
    """
    power = fit_power_exponent(t, logp, **window)
    expo = fit_exponential_rate(t, logp, **window)
    best = power if power.residual <= expo.residual else expo
    return {"power": power.to_dict(), "exponential": expo.to_dict(), "preferred": best.model}


@dataclass
class IntermediateDiagnostics:
    t_min: int
    t_max: int
    sup_log_ratio: float  # sup of ln(1/p(t)) / sqrt(t) over the window
    log_ratio_slope: float  # d ln[ln(1/p)/sqrt(t)] / d ln t
    shape: str  # "power-like", "intermediate" or "exponential-like"
    moment_slopes: dict[float, float]  # lambda -> d ln(t^lambda p) / d ln t
    moment_decreasing: dict[float, bool]

    @property
    def sqrt_bounded(self) -> bool:
        return self.log_ratio_slope <= SHAPE_SLOPE

    def to_dict(self) -> dict:
        return {
            "t_min": self.t_min,
            "t_max": self.t_max,
            "sup_log_ratio": self.sup_log_ratio,
            "log_ratio_slope": self.log_ratio_slope,
            "sqrt_bounded": self.sqrt_bounded,
            "shape": self.shape,
            "moment_slopes": {str(k): v for k, v in self.moment_slopes.items()},
            "moment_decreasing": {str(k): v for k, v in self.moment_decreasing.items()},
        }


def intermediate_diagnostics(
    t, logp, lambdas=(2, 5), decade: float = 10.0, ratio: float = GEOMETRIC_RATIO
) -> IntermediateDiagnostics:
    """Trailing-decade checks for super-polynomial, sub-exponential decay.

    ``t**lam * p(t)`` counts as eventually decreasing when its log-log slope
    over the window is negative and its last value is below its first.
    ``ln(1/p)/sqrt(t)`` counts as bounded when it grows slower than
    ``t**0.25``; an exponential law makes it grow like ``sqrt(t)``, a power
    law makes it shrink.
    """
    t = np.asarray(t)
    logp = np.asarray(logp, dtype=float)
    if t.size < 2:
        raise ValueError("need at least two points")
    ranks = window_ranks(int(t[-1]), ratio, min_points=2, fraction=1.0 / decade)
    y = logp[ranks - 1]
    lt = np.log(ranks)
    g = -y / np.sqrt(ranks)
    if np.any(g <= 0):
        raise ValueError("p(t) = 1 inside the window")
    g_slope, _, _ = _line_fit(lt, np.log(g))
    if g_slope > SHAPE_SLOPE:
        shape = "exponential-like"
    elif g_slope < -SHAPE_SLOPE:
        shape = "power-like"
    else:
        shape = "intermediate"
    slopes, decreasing = {}, {}
    for lam in lambdas:
        h = lam * lt + y
        s, _, _ = _line_fit(lt, h)
        slopes[lam] = s
        decreasing[lam] = bool(s < 0 and h[-1] < h[0])
    return IntermediateDiagnostics(
        int(ranks[0]), int(ranks[-1]), float(g.max()), g_slope, shape, slopes, decreasing
    )


def q_offsets(spec: ChainSpec, nu: float, xs) -> list[float]:
    """``Q(exp(-nu x)) - x`` for each ``x``; bounded in the exponential regime."""
    return [count_q(spec, math.exp(-nu * x)) - x for x in xs]


def power_overlay(t, logp, beta: float) -> np.ndarray:
    """``ln(c t^(-1/beta))`` with ``c`` matched to the series at ``t = T/2``."""
    t = np.asarray(t)
    logp = np.asarray(logp, dtype=float)
    mid = max(1, int(t[-1]) // 2)
    log_c = logp[mid - 1] + math.log(mid) / beta
    return log_c - np.log(t) / beta


SERIES_COLUMNS = ("t", "p", "ln_t", "ln_p")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def emit_series(out: TextIO | str | Path, t, logp, overlay=None, fmt: str = "csv") -> None:
    """Write ``t, p, ln t, ln p`` rows (plus ``theory_p`` when an overlay is given).

    Floats carry 17 significant digits so they read back bit-exact.
    """
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="") as fh:
            return emit_series(fh, t, logp, overlay, fmt)
    columns = list(SERIES_COLUMNS) + (["theory_p"] if overlay is not None else [])
    rows = []
    for k, (tk, lp) in enumerate(zip(t, logp)):
        row = [str(int(tk)), _fmt(math.exp(lp)), _fmt(math.log(tk)), _fmt(lp)]
        if overlay is not None:
            row.append(_fmt(math.exp(overlay[k])))
        rows.append(row)
    if fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)
    elif fmt == "jsonl":
        for row in rows:
            out.write("{" + ", ".join(f'"{c}": {v}' for c, v in zip(columns, row)) + "}\n")
    else:
        raise ValueError(f"unknown series format {fmt!r}")


def read_series(src: TextIO | str | Path) -> dict[str, np.ndarray]:
    """Inverse of :func:`emit_series` for the CSV format."""
    if isinstance(src, (str, Path)):
        with open(src, newline="") as fh:
            return read_series(fh)
    reader = csv.reader(src)
    header = next(reader, None)
    if header is None:
        raise ValueError("empty series file")
    cols: dict[str, list] = {c: [] for c in header}
    for row in reader:
        for c, v in zip(header, row):
            cols[c].append(int(v) if c == "t" else float(v))
    return {c: np.array(v, dtype=int if c == "t" else float) for c, v in cols.items()}
