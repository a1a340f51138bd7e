"""Command-line front end.

Exit status: 0 on success, 1 on invalid input (bad chain, wrong regime,
no beta), 2 on numeric trouble (non-convergence, caps, selftest failure).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .asymptotics import (
    GEOMETRIC_RATIO,
    MIN_WINDOW_POINTS,
    TRAILING_FRACTION,
    RegimeMismatch,
    compute_nu,
    emit_series,
    fit_exponential_rate,
    fit_power_exponent,
    intermediate_diagnostics,
    power_overlay,
    read_series,
    select_model,
)
from .chain import (
    BUNDLED,
    ChainError,
    ChainSpec,
    bundled_chain,
    load_chain,
    validate_chain,
    word_probability,
)
from .classify import classify
from .enumeration import EnumerationCapExceeded, enumerate_words, rank_series
from .graph import CycleCapExceeded
from .selftest import FAULTS, run_selftest
from .spectral import (
    CRITICAL_TOL,
    NoBetaError,
    SpectralError,
    component_radii,
    positive_left_eigenvector_exists,
    solve_beta,
)


class UsageError(Exception):
    pass


def dumps(obj) -> str:
    """Deterministic JSON for reports."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)


def open_chain(arg: str) -> ChainSpec:
    """A chain file path, or the name of a bundled example."""
    path = Path(arg)
    if path.exists():
        return load_chain(path)
    if arg in BUNDLED:
        return bundled_chain(arg)
    raise ChainError(f"{arg}: no such file and not a bundled chain ({', '.join(BUNDLED)})")


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _probability(text: str) -> float:
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError("must lie in (0, 1]")
    return v


def _ratio(text: str) -> float:
    v = float(text)
    if not v > 1:
        raise argparse.ArgumentTypeError("must exceed 1")
    return v


def _fraction(text: str) -> float:
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError("must lie in (0, 1]")
    return v


def _word_fields(spec: ChainSpec, rw) -> tuple[float, float, str]:
    """Probability as the direct product (exact for dyadic chains), its log10, and the labels."""
    prob = word_probability(spec, rw.states)
    log10p = math.log10(prob) if prob > 0 else rw.logprob / math.log(10)
    return prob, log10p, "-".join(spec.label(s) for s in rw.states)


def _text_block(pairs) -> str:
    width = max(len(k) for k, _ in pairs)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in pairs) + "\n"


def _emit(args, payload: dict, text_pairs) -> None:
    if args.format == "json":
        sys.stdout.write(dumps(payload) + "\n")
    else:
        sys.stdout.write(_text_block(text_pairs))


def cmd_validate(args) -> int:
    spec = open_chain(args.chain)
    report = validate_chain(spec)
    pairs = [("valid", str(report.ok).lower()), ("states", spec.n)]
    pairs += [(f"error[{v.kind}]", v.message) for v in report.errors]
    pairs += [(f"warning[{v.kind}]", v.message) for v in report.warnings]
    _emit(args, {"n": spec.n, **report.to_dict()}, pairs)
    return 0 if report.ok else 1


def cmd_classify(args) -> int:
    report = classify(open_chain(args.chain), args.critical_tol)
    pairs = [("regime", report.regime)]
    for key in ("beta", "exact_order", "nu", "alpha"):
        value = getattr(report, key)
        if value is not None:
            pairs.append((key, value if not isinstance(value, bool) else str(value).lower()))
    ev = report.evidence
    if "shared_vertex" in ev:
        pairs.append(("shared_vertex", ev["shared_vertex"]))
        pairs.append(("critical", ev["critical"]))
    if "heaviest_cycle" in ev:
        pairs.append(("heaviest_cycle", ev["heaviest_cycle"]))
    if "cycle_chain" in ev:
        pairs.append(("cycle_chain", ev["cycle_chain"]))
    pairs += [("warning", w) for w in report.warnings]
    _emit(args, report.to_dict(), pairs)
    return 0


def _beta_report(spec: ChainSpec, tol: float) -> dict:
    beta = solve_beta(spec.substochastic)
    cond, radii = component_radii(spec, beta)
    critical = [list(cond.components[c]) for c, r in enumerate(radii) if abs(r - 1.0) <= tol]
    positive, vector = positive_left_eigenvector_exists(spec, beta, tol)
    return {
        "beta": beta,
        "inverse_beta": 1.0 / beta if beta > 0 else None,
        "component_radii": [
            {"states": list(comp), "radius": radii[c]} for c, comp in enumerate(cond.components)
        ],
        "critical": critical,
        "positive_left_eigenvector": positive,
        "eigenvector": None if vector is None else [float(x) for x in vector],
    }


def cmd_beta(args) -> int:
    payload = _beta_report(open_chain(args.chain), args.critical_tol)
    pairs = [
        ("beta", payload["beta"]),
        ("inverse_beta", payload["inverse_beta"]),
        ("critical", payload["critical"]),
        ("positive_left_eigenvector", str(payload["positive_left_eigenvector"]).lower()),
    ]
    pairs += [(f"radius{r['states']}", r["radius"]) for r in payload["component_radii"]]
    _emit(args, payload, pairs)
    return 0


def cmd_nu(args) -> int:
    rates = compute_nu(open_chain(args.chain))
    payload = {**rates.to_dict(), "inverse_nu": rates.inverse_nu}
    pairs = [("nu", rates.nu), ("inverse_nu", rates.inverse_nu), ("alpha", rates.alpha),
             ("heaviest_cycle", list(rates.heaviest))]
    pairs += [
        (f"cycle{list(t.vertices)}", f"weight={t.weight!r} k={t.k} contribution={t.contribution!r}")
        for t in rates.terms
    ]
    _emit(args, payload, pairs)
    return 0


def _open_output(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def cmd_enumerate(args) -> int:
    if args.top is None and args.min_prob is None:
        raise UsageError("enumerate needs --top or --min-prob")
    spec = open_chain(args.chain)
    out, close = _open_output(args.output)
    try:
        if args.format == "csv":
            out.write("rank,probability,log10_probability,word\n")
        for rw in enumerate_words(spec, top=args.top, min_prob=args.min_prob,
                                  expansion_cap=args.expansion_cap):
            prob, log10p, word = _word_fields(spec, rw)
            if args.format == "csv":
                out.write(f"{rw.rank},{prob:.17g},{log10p:.17g},{word}\n")
            else:
                out.write(json.dumps({"rank": rw.rank, "probability": prob,
                                      "log10_probability": log10p, "word": word}) + "\n")
    finally:
        if close:
            out.close()
    return 0


def _window(args) -> dict:
    return {"ratio": args.ratio, "min_points": args.min_points, "fraction": args.fraction}


def _load_series(args):
    if args.series is not None:
        cols = read_series(args.series)
        if "ln_p" not in cols:
            raise UsageError(f"{args.series}: series file needs an ln_p column")
        return None, cols["t"], cols["ln_p"]
    if args.chain is None or args.top is None:
        raise UsageError("fit needs CHAIN with --top, or --series FILE")
    spec = open_chain(args.chain)
    t, logp = rank_series(spec, args.top, expansion_cap=args.expansion_cap)
    return spec, t, logp


def _fit(model: str, t, logp, window: dict) -> dict:
    if model == "power":
        return fit_power_exponent(t, logp, **window).to_dict()
    if model == "exp":
        return fit_exponential_rate(t, logp, **window).to_dict()
    return select_model(t, logp, **window)


def cmd_fit(args) -> int:
    spec, t, logp = _load_series(args)
    result = _fit(args.model, t, logp, _window(args))
    if args.output is not None:
        overlay = None
        if spec is not None:
            regime = classify(spec)
            if regime.regime == "power" and regime.beta > 0:
                overlay = power_overlay(t, logp, regime.beta)
        emit_series(args.output, t, logp, overlay)
    payload = {"points": int(len(t)), "fit": result}
    if args.format == "json":
        sys.stdout.write(dumps(payload) + "\n")
    else:
        fits = [result] if "model" in result else [result["power"], result["exponential"]]
        pairs = [("points", len(t))]
        for f in fits:
            pairs.append((f["model"], f"slope={f['slope']!r} estimate={f['estimate']!r} "
                                      f"window={f['t_min']}..{f['t_max']} residual={f['residual']!r}"))
        if "preferred" in result:
            pairs.append(("preferred", result["preferred"]))
        sys.stdout.write(_text_block(pairs))
    return 0


def cmd_report(args) -> int:
    spec = open_chain(args.chain)
    regime = classify(spec, args.critical_tol)
    payload: dict = {"chain": args.chain, "classification": regime.to_dict()}
    if regime.regime == "power":
        payload["beta"] = _beta_report(spec, args.critical_tol)
    if regime.regime == "exponential":
        rates = compute_nu(spec)
        payload["nu"] = {**rates.to_dict(), "inverse_nu": rates.inverse_nu}
    words = list(enumerate_words(spec, top=args.top, expansion_cap=args.expansion_cap))
    payload["top_words"] = []
    for rw in words[: args.show]:
        prob, _, word = _word_fields(spec, rw)
        payload["top_words"].append({"rank": rw.rank, "probability": prob, "word": word})
    payload["enumerated"] = len(words)
    t = np.arange(1, len(words) + 1)
    logp = np.array([rw.logprob for rw in words])
    if len(words) >= 100:
        window = _window(args)
        payload["fit"] = select_model(t, logp, **window)
        if regime.regime == "intermediate":
            payload["diagnostics"] = intermediate_diagnostics(t, logp).to_dict()
    else:
        payload["fit"] = None
    if args.output is not None:
        overlay = power_overlay(t, logp, regime.beta) if regime.regime == "power" and len(t) else None
        emit_series(args.output, t, logp, overlay)
    sys.stdout.write(dumps(payload) + "\n")
    return 0


def cmd_selftest(args) -> int:
    report = run_selftest(args.seed, args.chains, args.inject_fault)
    if args.format == "json":
        sys.stdout.write(dumps(report.to_dict()) + "\n")
    else:
        pairs = [("seed", report.seed), ("chains", report.chains)]
        pairs += [(f"passed[{k}]", v) for k, v in sorted(report.passed.items())]
        pairs += [("failures", len(report.failures)), ("status", "ok" if report.ok else "FAILED")]
        sys.stdout.write(_text_block(pairs))
    if report.ok:
        return 0
    first = report.failures[0]
    print(
        f"selftest failed (seed {report.seed}): {first['property']} on chain {first['chain_index']}: "
        f"{json.dumps(first['detail'], sort_keys=True)}; chain {json.dumps(first['chain'], sort_keys=True)}",
        file=sys.stderr,
    )
    return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wordrank",
        description="Decay regimes and exact top-word enumeration for absorbing Markov chains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def chain_arg(p, optional=False):
        p.add_argument("chain", nargs="?" if optional else None,
                       help=f"chain JSON file or bundled name ({', '.join(BUNDLED)})")

    def fmt_arg(p):
        p.add_argument("--format", choices=("text", "json"), default="text")

    def tol_arg(p):
        p.add_argument("--critical-tol", type=float, default=CRITICAL_TOL,
                       help="|r - 1| below which a component counts as critical")

    def cap_arg(p):
        p.add_argument("--expansion-cap", type=_positive_int, default=10**8,
                       help="maximum frontier pops during enumeration")

    def window_args(p):
        p.add_argument("--ratio", type=_ratio, default=GEOMETRIC_RATIO, help="geometric subsampling ratio")
        p.add_argument("--min-points", type=_positive_int, default=MIN_WINDOW_POINTS)
        p.add_argument("--fraction", type=_fraction, default=TRAILING_FRACTION,
                       help="trailing fraction of ranks in the fit window")

    p = sub.add_parser("validate", help="check a chain file")
    chain_arg(p)
    fmt_arg(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("classify", help="decay regime and its parameters")
    chain_arg(p)
    fmt_arg(p)
    tol_arg(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("beta", help="root of r(P^(beta)) = 1 and per-component radii")
    chain_arg(p)
    fmt_arg(p)
    tol_arg(p)
    p.set_defaults(func=cmd_beta)

    p = sub.add_parser("nu", help="exponential rate and per-cycle terms")
    chain_arg(p)
    fmt_arg(p)
    p.set_defaults(func=cmd_nu)

    p = sub.add_parser("enumerate", help="most probable words in rank order")
    chain_arg(p)
    p.add_argument("--top", type=_positive_int)
    p.add_argument("--min-prob", type=_probability)
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--output", "-o", help="output file (default stdout)")
    cap_arg(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("fit", help="fit power or exponential decay to p(t)")
    chain_arg(p, optional=True)
    p.add_argument("--top", type=_positive_int)
    p.add_argument("--series", help="CSV with columns t, p, ln_t, ln_p instead of a chain")
    p.add_argument("--model", choices=("power", "exp", "auto"), default="auto")
    p.add_argument("--output", "-o", help="write the series (with theory overlay) as CSV")
    fmt_arg(p)
    window_args(p)
    cap_arg(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("report", help="classification, parameters, enumeration and fit as JSON")
    chain_arg(p)
    p.add_argument("--top", type=_positive_int, default=10_000)
    p.add_argument("--show", type=int, default=20, help="words listed in the report")
    p.add_argument("--output", "-o", help="write the series as CSV")
    tol_arg(p)
    window_args(p)
    cap_arg(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("selftest", help="randomized property suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chains", type=_positive_int, default=100)
    p.add_argument("--inject-fault", choices=FAULTS, help="test hook: corrupt one check on purpose")
    fmt_arg(p)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ChainError, RegimeMismatch, NoBetaError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SpectralError, EnumerationCapExceeded, CycleCapExceeded, OverflowError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
