"""Resource monotones: EPR weight, EPR robustness and functional yields."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import functionals
from .assemblages import Assemblage
from .conversion import _side_constraints, comb_tuples, processed_sources
from .freeness import response_tables
from .sdp import (
    FEASIBLE,
    INDETERMINATE,
    Block,
    Constraint,
    SdpProblem,
    SdpSolution,
    SolverSettings,
    coeff_partial_trace_in,
    solve,
)


class IndeterminateError(RuntimeError):
    """The backend did not return a trustworthy optimum."""


@dataclass
class MonotoneResult:
    value: float
    status: str
    solution: SdpSolution | None = field(default=None, repr=False)
    extra: dict = field(default_factory=dict, repr=False)

    def __float__(self) -> float:
        return self.value


def _free_tables(a: Assemblage) -> list[np.ndarray]:
    model = "lhs" if a.scenario.n_alices == 1 else "losr"
    return response_tables(a, model)[0]


def _gap_problem(a: Assemblage, sign: int):
    """Blocks ``h_l`` (hidden states) and ``Z[a,x]`` with ``sign*(sigma - sum D h) = Z``."""
    sc = a.scenario
    d = sc.bob_dim
    tables = _free_tables(a)
    eye = np.eye(d * d, dtype=complex)
    hidden = [f"h{i}" for i in range(len(tables))]
    blocks = [Block(n, d) for n in hidden]
    cons = []
    for ai in range(sc.n_a):
        for xi in range(sc.n_x):
            z = f"Z{ai}_{xi}"
            blocks.append(Block(z, d))
            terms = [(z, -eye)] + [
                (n, -sign * t[ai, xi] * eye) for n, t in zip(hidden, tables) if t[ai, xi]
            ]
            cons.append(Constraint(f"gap[{ai},{xi}]", d, tuple(terms), sign * a.elements[ai, xi],
                                   relax=False))
    return blocks, cons, hidden, tables


def _finish(sol: SdpSolution, value: float, **extra) -> MonotoneResult:
    if sol.status != FEASIBLE:
        raise IndeterminateError(f"monotone SDP did not converge: {sol.diagnostic}")
    return MonotoneResult(value, sol.status, sol, extra)


def epr_weight(a: Assemblage, settings: SolverSettings | None = None) -> MonotoneResult:
    """Smallest weight of a steerable part in a split into steerable plus free.

    Computed as one minus the largest total trace of an unnormalised free
    assemblage lying below ``a`` elementwise in the PSD order.
    """
    blocks, cons, hidden, _ = _gap_problem(a, +1)
    eye = np.eye(a.scenario.bob_dim)
    problem = SdpProblem(tuple(blocks), tuple(cons), {n: eye for n in hidden})
    sol = solve(problem, settings)
    value = min(1.0, max(0.0, 1.0 - sol.objective_value)) if sol.status == FEASIBLE else math.nan
    return _finish(sol, value)


def epr_robustness(a: Assemblage, settings: SolverSettings | None = None) -> MonotoneResult:
    """Least ``nu`` such that mixing ``a`` with some assemblage at ratio
    ``1 : nu`` gives a free assemblage.

    ``extra["free_mixture"]`` holds that free assemblage for replay.
    """
    blocks, cons, hidden, tables = _gap_problem(a, -1)
    eye = np.eye(a.scenario.bob_dim)
    problem = SdpProblem(tuple(blocks), tuple(cons), {n: -eye for n in hidden})
    sol = solve(problem, settings)
    if sol.status != FEASIBLE:
        return _finish(sol, math.nan)
    total = -sol.objective_value
    value = max(0.0, total - 1.0)
    sc = a.scenario
    mixture = np.zeros_like(a.elements)
    for n, t in zip(hidden, tables):
        mixture += t[:, :, None, None] * sol.blocks[n]
    free = Assemblage(sc, mixture / total)
    return _finish(sol, value, free_mixture=free)


# --------------------------------------------------------------------------
# yields


def _default_functional(a: Assemblage, eta: float) -> functionals.EprFunctional:
    k = a.scenario.n_alices
    if k == 1:
        return functionals.epr_functional_bipartite(eta)
    return functionals.epr_functional_multi(k + 1, eta)


def yield_objectives(a: Assemblage, f: functionals.EprFunctional) -> np.ndarray:
    """``C[l]`` with ``Re tr(C[l] W_l)`` the functional value of comb ``l``'s branch.

    Target type is the functional's scenario.
    """
    target = Assemblage(f.scenario, np.zeros_like(f.operators))
    combs = comb_tuples(a, target)
    taus = processed_sources(a, target, combs)
    d_in = a.scenario.bob_dim
    # d * sum_{a',x'} F[a',x'] ⊗ tau[l,a',x']^T
    c = np.einsum("axij,laxkm->likjm", f.operators, np.swapaxes(taus, -1, -2))
    d_out = f.scenario.bob_dim
    return d_in * c.reshape(len(combs), d_out * d_in, d_out * d_in)


def _yield_joint(a, f, settings):
    objs = yield_objectives(a, f)
    d_in, d_out = a.scenario.bob_dim, f.scenario.bob_dim
    n = len(objs)
    names, qnames = [f"W{i}" for i in range(n)], [f"q{i}" for i in range(n)]
    blocks = tuple([Block(w, d_out * d_in) for w in names] + [Block(q, 1) for q in qnames])
    cons = tuple(_side_constraints(names, qnames, d_in, d_out))
    sol = solve(SdpProblem(blocks, cons, {w: c for w, c in zip(names, objs)}), settings)
    return sol, sol.objective_value


def _yield_single(c: np.ndarray, d_in: int, d_out: int, settings) -> SdpSolution:
    ptr = coeff_partial_trace_in(d_out, d_in)
    con = Constraint("marginal", d_in, (("W", ptr),), -np.eye(d_in) / d_in, relax=False)
    return solve(SdpProblem((Block("W", d_out * d_in),), (con,), {"W": c}), settings)


def _yield_per_comb(a, f, settings):
    objs = yield_objectives(a, f)
    d_in, d_out = a.scenario.bob_dim, f.scenario.bob_dim
    cache: dict[bytes, SdpSolution] = {}
    best, best_sol = -math.inf, None
    for c in objs:
        key = np.round(c, 12).tobytes()
        if key not in cache:
            cache[key] = _yield_single(c, d_in, d_out, settings)
        sol = cache[key]
        if sol.status != FEASIBLE:
            return sol, math.nan
        if sol.objective_value > best:
            best, best_sol = sol.objective_value, sol
    return best_sol, best


def yield_monotone(a: Assemblage, eta: float, settings: SolverSettings | None = None,
                   functional: functionals.EprFunctional | None = None,
                   method: str = "joint") -> MonotoneResult:
    """Largest functional value reachable from ``a`` by LOSR operations.

    ``method="joint"`` solves one SDP over all combs; ``"per_comb"`` uses that
    the reachable set is the convex hull of single-comb branches and takes
    the best of many one-block SDPs.
    """
    f = functional or _default_functional(a, eta)
    if f.scenario.n_alices != a.scenario.n_alices:
        raise ValueError("functional and assemblage have different numbers of Alices")
    runner = {"joint": _yield_joint, "per_comb": _yield_per_comb}.get(method)
    if runner is None:
        raise ValueError(f"unknown method {method!r}")
    sol, value = runner(a, f, settings)
    if sol is None:
        raise IndeterminateError("no comb produced a solution")
    return _finish(sol, value, method=method)


def yield_monotone_multi(a: Assemblage, eta: float, settings: SolverSettings | None = None,
                         functional: functionals.EprFunctional | None = None,
                         method: str = "per_comb") -> MonotoneResult:
    """Multipartite yield; the per-comb route keeps the 4096-comb case cheap."""
    return yield_monotone(a, eta, settings, functional, method)


__all__ = [
    "INDETERMINATE",
    "IndeterminateError",
    "MonotoneResult",
    "epr_weight",
    "epr_robustness",
    "yield_monotone",
    "yield_monotone_multi",
    "yield_objectives",
]
