"""Command-line front end.

Exit codes: 0 success or positive answer, 1 negative answer, 2 indeterminate,
64 usage error (bad flags, unreadable or malformed input).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

from . import assemblages, conversion, freeness, functionals, locc, monotones
from .assemblages import Assemblage
from .sdp import (
    DEFAULT_EPS_FEASIBLE,
    DEFAULT_EPS_INFEASIBLE,
    DEFAULT_SOLVER_TOL,
    FEASIBLE,
    INFEASIBLE,
    DecisionSettings,
    SolverSettings,
)

EXIT_OK, EXIT_NEGATIVE, EXIT_INDETERMINATE, EXIT_USAGE = 0, 1, 2, 64

FIG3_THETAS = (("pi/12", math.pi / 12), ("pi/6", math.pi / 6), ("pi/4", math.pi / 4))
FIG3_PS = (0.8, 0.9, 1.0)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _out(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")
    sys.stdout.flush()


def fig3_name(theta_label: str, p: float) -> str:
    return f"S({theta_label};{p:g})"


def fig3_family() -> list[tuple[str, Assemblage]]:
    return [
        (fig3_name(label, p), assemblages.family_S(theta, p))
        for label, theta in FIG3_THETAS
        for p in FIG3_PS
    ]


# pairs of (theta label, p) nodes joined by an arrow in the reference figure
FIG3_DRAWN = [
    (("pi/4", 1.0), ("pi/12", 0.9)),
    (("pi/4", 1.0), ("pi/6", 0.8)),
    (("pi/6", 1.0), ("pi/4", 0.9)),
    (("pi/12", 1.0), ("pi/6", 0.8)),
    (("pi/4", 0.9), ("pi/6", 0.8)),
    (("pi/6", 0.9), ("pi/12", 0.9)),
    (("pi/6", 0.9), ("pi/4", 0.8)),
    (("pi/6", 0.8), ("pi/12", 0.8)),
    (("pi/4", 0.8), ("pi/12", 0.8)),
] + [
    ((label, hi), (label, lo))
    for label, _ in FIG3_THETAS
    for hi in FIG3_PS
    for lo in FIG3_PS
    if lo < hi
]


def fig3_drawn_edges() -> list[tuple[str, str]]:
    return [(fig3_name(*s), fig3_name(*d)) for s, d in FIG3_DRAWN]


def fig3_required_absences() -> list[tuple[str, str]]:
    top = [fig3_name(label, 1.0) for label, _ in FIG3_THETAS]
    pairs = [(s, d) for s in top for d in top if s != d]
    pairs.append((fig3_name("pi/12", 1.0), fig3_name("pi/4", 0.9)))
    return pairs


def check_fig3(graph: conversion.PreorderGraph) -> list[str]:
    """Problems found when comparing a computed graph with the reference figure."""
    problems = []
    edges = graph.edge_set()
    for s, d in fig3_drawn_edges():
        if (s, d) not in edges:
            problems.append(f"missing drawn arrow {s} -> {d}")
    for s, d in fig3_required_absences():
        if (s, d) in edges:
            problems.append(f"unexpected arrow {s} -> {d}")
    for s, d in edges:
        if (d, s) in edges:
            problems.append(f"two-way pair {s} <-> {d}")
    if graph.indeterminate:
        problems.append(f"{len(graph.indeterminate)} indeterminate pairs")
    free = [n for n, f in graph.free.items() if f]
    if free != [fig3_name("pi/12", 0.8)]:
        problems.append(f"free nodes {free}, expected only {fig3_name('pi/12', 0.8)}")
    return problems


# --------------------------------------------------------------------------
# configuration and I/O


def _read_config(path: str | None) -> dict:
    if not path:
        return {}
    cfg = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{no}: expected key=value")
        cfg[key.strip().replace("-", "_")] = value.strip()
    return cfg


def _settings(args) -> DecisionSettings:
    cfg = _read_config(args.config)
    unknown = set(cfg) - {"eps_feasible", "eps_infeasible", "solver_tol", "workers"}
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")

    def pick(name, default, cast=float):
        flag = getattr(args, name)
        if flag is not None:
            return flag
        try:
            return cast(cfg[name]) if name in cfg else default
        except ValueError:
            raise UsageError(f"config value for {name} is not a number: {cfg[name]!r}") from None

    args.workers = pick("workers", 1, int)
    try:
        return DecisionSettings(
            pick("eps_feasible", DEFAULT_EPS_FEASIBLE),
            pick("eps_infeasible", DEFAULT_EPS_INFEASIBLE),
            SolverSettings(solver_tol=pick("solver_tol", DEFAULT_SOLVER_TOL)),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def load_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON ({exc.msg})") from None


def load_assemblage(path: str) -> Assemblage:
    obj = load_json(path)
    try:
        return Assemblage.from_json(obj)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def write_text(path: str, text: str) -> None:
    Path(path).write_text(text)


def _status_code(status: str) -> int:
    return {FEASIBLE: EXIT_OK, INFEASIBLE: EXIT_NEGATIVE}.get(status, EXIT_INDETERMINATE)


# --------------------------------------------------------------------------
# subcommands


def cmd_build_family(args) -> int:
    try:
        if args.family == "S":
            a = assemblages.family_S(args.theta, args.p)
        else:
            a = assemblages.family_GHZ(args.n_parties, args.theta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    text = json.dumps(a.to_json())
    if args.out:
        write_text(args.out, text)
    else:
        _out(text)
    return EXIT_OK


def cmd_validate(args) -> int:
    a = load_assemblage(args.input)
    report = assemblages.validate(a, args.tol)
    _out(report.summary())
    return EXIT_OK if report.ok else EXIT_NEGATIVE


def cmd_check_free(args) -> int:
    settings = _settings(args)
    a = load_assemblage(args.input)
    try:
        res = freeness.is_free(a, args.model, settings)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    verdict = {FEASIBLE: "free", INFEASIBLE: "not free"}.get(res.status, "indeterminate")
    _out(f"{verdict} (model {args.model}, t* = {res.t:.3e})")
    return _status_code(res.status)


def cmd_convert(args) -> int:
    settings = _settings(args)
    src, dst = load_assemblage(args.src), load_assemblage(args.dst)
    fn = conversion.decide_conversion_multi if args.multi else conversion.decide_conversion
    try:
        res = fn(src, dst, settings)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _out(f"{res.status} (t* = {res.t:.3e})")
    if res.certificate is not None and args.certificate:
        write_text(args.certificate, json.dumps(res.certificate.to_json()))
    return _status_code(res.status)


def _load_family_dir(path: str) -> list[tuple[str, Assemblage]]:
    d = Path(path)
    if not d.is_dir():
        raise UsageError(f"{path} is not a directory")
    files = sorted(d.glob("*.json"))
    if not files:
        raise UsageError(f"{path} contains no .json assemblages")
    return [(f.stem, load_assemblage(str(f))) for f in files]


def _emit_graph(graph: conversion.PreorderGraph, args) -> None:
    dot = graph.to_dot()
    if args.out:
        write_text(args.out, dot)
    else:
        _out(dot)
    if args.out_json:
        write_text(args.out_json, conversion.graph_to_json_text(graph))


def cmd_preorder(args) -> int:
    settings = _settings(args)
    family = _load_family_dir(args.family)
    try:
        graph = conversion.preorder_graph(family, settings, workers=args.workers, fast=args.fast)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit_graph(graph, args)
    return EXIT_INDETERMINATE if graph.indeterminate else EXIT_OK


def cmd_reproduce_fig3(args) -> int:
    settings = _settings(args)
    graph = conversion.preorder_graph(fig3_family(), settings, workers=args.workers, fast=args.fast)
    _emit_graph(graph, args)
    problems = check_fig3(graph) if not args.fast else []
    for p in problems:
        sys.stderr.write(p + "\n")
    sys.stderr.write(f"{len(graph.edges)} edges, {len(graph.indeterminate)} indeterminate\n")
    if graph.indeterminate:
        return EXIT_INDETERMINATE
    return EXIT_NEGATIVE if problems else EXIT_OK


def cmd_functional(args) -> int:
    try:
        if args.n_parties == 2:
            f = functionals.epr_functional_bipartite(args.eta)
            qmax = functionals.quantum_max_bipartite(args.eta)
        else:
            f = functionals.epr_functional_multi(args.n_parties, args.eta)
            qmax = functionals.quantum_max_multi(args.n_parties, args.eta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    lines = []
    if args.eval:
        a = load_assemblage(args.eval)
        try:
            lines.append(f"value {functionals.evaluate(f, a):.12g}")
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    lines.append(f"quantum_max {qmax:.12g}")
    lines.append(f"lhs_bound {functionals.lhs_bound(f):.12g}")
    _out("\n".join(lines))
    return EXIT_OK


def cmd_monotone(args) -> int:
    settings = _settings(args)
    a = load_assemblage(args.input)
    try:
        if args.kind == "weight":
            res = monotones.epr_weight(a, settings.solver)
        elif args.kind == "robustness":
            res = monotones.epr_robustness(a, settings.solver)
        else:
            if args.eta is None:
                raise UsageError("--eta is required for --kind yield")
            fn = monotones.yield_monotone if a.scenario.n_alices == 1 else monotones.yield_monotone_multi
            res = fn(a, args.eta, settings.solver)
    except monotones.IndeterminateError as exc:
        _out(f"indeterminate: {exc}")
        return EXIT_INDETERMINATE
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _out(f"{args.kind} {res.value:.12g}")
    return EXIT_OK


def cmd_locc_apply(args) -> int:
    a = load_assemblage(args.input)
    make = {"appendixF-stoch": locc.appendixF_stochastic, "appendixF-det": locc.appendixF_deterministic}
    try:
        m = make[args.map](args.theta)
        out, q = locc.apply_1wlocc(m, a)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.out:
        write_text(args.out, json.dumps(out.to_json()))
    _out(f"success_probability {q:.15g}")
    return EXIT_OK


# --------------------------------------------------------------------------


def _add_numeric(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps-feasible", type=float, default=None)
    p.add_argument("--eps-infeasible", type=float, default=None)
    p.add_argument("--solver-tol", type=float, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--config", default=None, help="key=value file with the numeric settings")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="epr-losr", description="LOSR convertibility of steering assemblages")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build-family", help="write a family member as JSON")
    p.add_argument("family", choices=["S", "GHZ"])
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--n-parties", type=int, default=3)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_build_family)

    p = sub.add_parser("validate", help="check assemblage invariants")
    p.add_argument("input")
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("check-free", help="membership in a classical set")
    p.add_argument("--model", choices=list(freeness.MODELS), default="lhs")
    p.add_argument("--input", required=True)
    _add_numeric(p)
    p.set_defaults(fn=cmd_check_free)

    p = sub.add_parser("convert", help="decide an LOSR conversion")
    p.add_argument("--src", required=True)
    p.add_argument("--dst", required=True)
    p.add_argument("--multi", action="store_true")
    p.add_argument("--certificate", help="write the certificate JSON here when feasible")
    _add_numeric(p)
    p.set_defaults(fn=cmd_convert)

    for name, fn, help_ in (
        ("preorder", cmd_preorder, "pre-order digraph of a directory of assemblages"),
        ("reproduce-fig3", cmd_reproduce_fig3, "pre-order of the nine-member noisy family"),
    ):
        p = sub.add_parser(name, help=help_)
        if name == "preorder":
            p.add_argument("--family", required=True)
        p.add_argument("--out", help="DOT output (stdout if omitted)")
        p.add_argument("--out-json")
        p.add_argument("--fast", action="store_true", help="skip pairs implied by transitivity")
        _add_numeric(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("functional", help="evaluate a steering functional")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--n-parties", type=int, default=2)
    p.add_argument("--eval")
    p.set_defaults(fn=cmd_functional)

    p = sub.add_parser("monotone", help="compute a resource monotone")
    p.add_argument("--kind", choices=["weight", "robustness", "yield"], required=True)
    p.add_argument("--eta", type=float)
    p.add_argument("--input", required=True)
    _add_numeric(p)
    p.set_defaults(fn=cmd_monotone)

    p = sub.add_parser("locc-apply", help="apply a one-way LOCC map")
    p.add_argument("--map", choices=["appendixF-stoch", "appendixF-det"], required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_locc_apply)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.fn(args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
