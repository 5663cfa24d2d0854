"""Small semidefinite-programming layer over Hermitian PSD blocks.

A problem is a list of Hermitian PSD block variables plus affine matrix
equalities of the form ``sum_k C_k vec(X_k) + const = 0`` where ``vec`` is
the row-major flattening and ``C_k`` is a complex coefficient matrix.  An
optional objective ``maximize sum_k Re tr(F_k X_k)`` may be attached.

Each Hermitian block ``X`` of size ``n`` is parametrised by ``n**2`` real
numbers and handed to the backend as the real symmetric cone constraint
``real_embed(X) >= 0`` of size ``2n``.  Feasibility is decided by
:func:`decide_feasibility`, which minimises the largest entrywise violation
``t`` of the relaxable constraints and maps ``t`` onto a three-way verdict.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .qcore import hermitize, real_embed

log = logging.getLogger(__name__)

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
INDETERMINATE = "indeterminate"

DEFAULT_EPS_FEASIBLE = 1e-6
DEFAULT_EPS_INFEASIBLE = 1e-4
DEFAULT_SOLVER_TOL = 1e-8


@dataclass(frozen=True)
class Block:
    name: str
    dim: int


@dataclass(frozen=True, eq=False)
class Constraint:
    """``sum(coeff @ vec(block)) + const == 0`` for an ``m x m`` expression.

    ``hermitian`` marks expressions that are Hermitian for every Hermitian
    assignment of the blocks; only their independent real entries are
    emitted.  ``relax`` marks constraints that :func:`decide_feasibility` may
    violate by at most ``t``; the others stay exact.
    """

    name: str
    dim: int
    terms: tuple[tuple[str, np.ndarray], ...]
    const: np.ndarray
    hermitian: bool = True
    relax: bool = True


@dataclass(frozen=True, eq=False)
class SdpProblem:
    blocks: tuple[Block, ...]
    constraints: tuple[Constraint, ...]
    objective: Mapping[str, np.ndarray] | None = None
    objective_const: float = 0.0

    def __post_init__(self):
        dims = {}
        for b in self.blocks:
            if b.name in dims:
                raise ValueError(f"duplicate block name {b.name!r}")
            if b.dim < 1:
                raise ValueError(f"block {b.name!r} has dimension {b.dim}")
            dims[b.name] = b.dim
        for c in self.constraints:
            if np.shape(c.const) != (c.dim, c.dim):
                raise ValueError(f"constraint {c.name!r}: constant has shape {np.shape(c.const)}")
            for name, coeff in c.terms:
                if name not in dims:
                    raise ValueError(f"constraint {c.name!r} references unknown block {name!r}")
                n = dims[name]
                if coeff.shape != (c.dim * c.dim, n * n):
                    raise ValueError(
                        f"constraint {c.name!r}: coefficient for {name!r} has shape "
                        f"{coeff.shape}, expected {(c.dim * c.dim, n * n)}"
                    )
        if self.objective is not None:
            for name, f in self.objective.items():
                if name not in dims:
                    raise ValueError(f"objective references unknown block {name!r}")
                if np.shape(f) != (dims[name], dims[name]):
                    raise ValueError(f"objective matrix for {name!r} has shape {np.shape(f)}")

    @property
    def block_dims(self) -> dict[str, int]:
        return {b.name: b.dim for b in self.blocks}


@dataclass
class SolverSettings:
    solver_tol: float = DEFAULT_SOLVER_TOL
    max_iter: int = 300
    backend: str = "clarabel"
    verbose: bool = False
    retry: bool = True


@dataclass
class DecisionSettings:
    """Thresholds of the three-way verdict plus backend settings."""

    eps_feasible: float = DEFAULT_EPS_FEASIBLE
    eps_infeasible: float = DEFAULT_EPS_INFEASIBLE
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        if not self.eps_feasible < self.eps_infeasible:
            raise ValueError(
                f"need eps_feasible < eps_infeasible, got {self.eps_feasible} >= {self.eps_infeasible}"
            )


@dataclass
class SdpSolution:
    status: str
    blocks: dict[str, np.ndarray] = field(default_factory=dict)
    objective_value: float = float("nan")
    slack: float = float("inf")
    t: float = float("nan")
    diagnostic: str = ""
    solve_seconds: float = 0.0
    converged: bool = False


@dataclass
class FeasibilityDecision:
    status: str
    t: float
    solution: SdpSolution

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE


# --------------------------------------------------------------------------
# coefficient helpers


def coeff_identity(n: int) -> np.ndarray:
    return np.eye(n * n, dtype=complex)


def coeff_trace(n: int) -> np.ndarray:
    """Coefficient of ``X -> [tr X]`` (a 1x1 expression)."""
    return np.eye(n, dtype=complex).reshape(1, n * n)


def coeff_from_map(fn, n: int, m: int) -> np.ndarray:
    """Tabulate a linear map ``X (n x n) -> Y (m x m)`` on matrix units."""
    out = np.zeros((m * m, n * n), dtype=complex)
    for p in range(n):
        for q in range(n):
            e = np.zeros((n, n), dtype=complex)
            e[p, q] = 1.0
            out[:, p * n + q] = np.asarray(fn(e), dtype=complex).reshape(-1)
    return out


def coeff_partial_trace_in(d_out: int, d_in: int) -> np.ndarray:
    """Coefficient of ``W -> tr_out W`` for ``W`` on ``out ⊗ in``."""
    # Y[k,l] = sum_i W[(i,k),(i,l)]
    c = np.zeros((d_in, d_in, d_out, d_in, d_out, d_in), dtype=complex)
    for i in range(d_out):
        for k in range(d_in):
            c[k, :, i, k, i, :] += np.eye(d_in)
    return c.reshape(d_in * d_in, (d_out * d_in) ** 2)


def coeff_choi(tau: np.ndarray, d_in: int, d_out: int) -> np.ndarray:
    """Coefficient of ``W -> d_in * tr_in[W (I ⊗ tau^T)]``."""
    # Y[i,j] = d_in * sum_{k,l} W[(i,k),(j,l)] tau[k,l]
    c = np.zeros((d_out, d_out, d_out, d_in, d_out, d_in), dtype=complex)
    for i in range(d_out):
        for j in range(d_out):
            c[i, j, i, :, j, :] = d_in * np.asarray(tau)
    return c.reshape(d_out * d_out, (d_out * d_in) ** 2)


# --------------------------------------------------------------------------
# Hermitian parametrisation and cone bookkeeping


_PARAM_CACHE: dict[int, np.ndarray] = {}
_EMBED_CACHE: dict[tuple[int, str], np.ndarray] = {}


def hermitian_basis(n: int) -> np.ndarray:
    """Complex ``(n*n, n*n)`` matrix mapping real parameters to ``vec(X)``.

    Parameter order: diagonal entries, then real parts of the strict upper
    triangle, then imaginary parts of the strict upper triangle.
    """
    if n in _PARAM_CACHE:
        return _PARAM_CACHE[n]
    p = np.zeros((n * n, n * n), dtype=complex)
    col = 0
    for k in range(n):
        p[k * n + k, col] = 1.0
        col += 1
    upper = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for i, j in upper:
        p[i * n + j, col] = 1.0
        p[j * n + i, col] = 1.0
        col += 1
    for i, j in upper:
        p[i * n + j, col] = 1j
        p[j * n + i, col] = -1j
        col += 1
    p.setflags(write=False)
    _PARAM_CACHE[n] = p
    return p


def _svec_indices(m: int, backend: str) -> tuple[np.ndarray, np.ndarray]:
    if backend == "clarabel":
        # upper triangle, column-stacked
        pairs = [(i, j) for j in range(m) for i in range(j + 1)]
    elif backend == "scs":
        # lower triangle, column-stacked
        pairs = [(i, j) for j in range(m) for i in range(j, m)]
    else:
        raise ValueError(f"unknown backend {backend!r}")
    rows = np.array([p[0] for p in pairs])
    cols = np.array([p[1] for p in pairs])
    return rows, cols


def embed_operator(n: int, backend: str) -> np.ndarray:
    """Real matrix sending block parameters to svec(real_embed(X))."""
    key = (n, backend)
    if key in _EMBED_CACHE:
        return _EMBED_CACHE[key]
    basis = hermitian_basis(n)
    rows, cols = _svec_indices(2 * n, backend)
    scale = np.where(rows == cols, 1.0, np.sqrt(2.0))
    op = np.zeros((len(rows), n * n))
    for k in range(n * n):
        e = real_embed(basis[:, k].reshape(n, n))
        op[:, k] = scale * e[rows, cols]
    op.setflags(write=False)
    _EMBED_CACHE[key] = op
    return op


def _real_row_selection(m: int, hermitian: bool) -> tuple[np.ndarray, np.ndarray]:
    """Indices into vec(Y) whose real / imaginary parts become constraint rows."""
    if not hermitian:
        idx = np.arange(m * m)
        return idx, idx
    re = [i * m + j for i in range(m) for j in range(i, m)]
    im = [i * m + j for i in range(m) for j in range(i + 1, m)]
    return np.array(re, dtype=int), np.array(im, dtype=int)


class _Compiled:
    """Sparse real form of a problem, ready for a conic backend."""

    def __init__(self, problem: SdpProblem, with_t: bool, backend: str):
        self.problem = problem
        self.offsets: dict[str, int] = {}
        off = 0
        for b in problem.blocks:
            self.offsets[b.name] = off
            off += b.dim * b.dim
        self.n_theta = off
        self.with_t = with_t
        self.n_var = off + (1 if with_t else 0)
        self.backend = backend

        eq_rows, eq_b = [], []
        ineq_rows, ineq_b = [], []
        dims = problem.block_dims
        for c in problem.constraints:
            rows, rhs = self._constraint_rows(c, dims)
            if with_t and c.relax:
                ineq_rows.append(sp.hstack([rows, -sp.csr_matrix(np.ones((rows.shape[0], 1)))]))
                ineq_b.append(rhs)
                ineq_rows.append(sp.hstack([-rows, -sp.csr_matrix(np.ones((rows.shape[0], 1)))]))
                ineq_b.append(-rhs)
            else:
                if with_t:
                    rows = sp.hstack([rows, sp.csr_matrix((rows.shape[0], 1))])
                eq_rows.append(rows)
                eq_b.append(rhs)
        if with_t:
            # t >= 0
            e = sp.csr_matrix(([-1.0], ([0], [self.n_var - 1])), shape=(1, self.n_var))
            ineq_rows.append(e)
            ineq_b.append(np.zeros(1))

        psd_blocks, psd_sizes = [], []
        for b in problem.blocks:
            op = embed_operator(b.dim, backend)
            o = self.offsets[b.name]
            coo = sp.coo_matrix(-op)
            psd_blocks.append(
                sp.csr_matrix((coo.data, (coo.row, coo.col + o)), shape=(op.shape[0], self.n_var))
            )
            psd_sizes.append(2 * b.dim)

        parts = eq_rows + ineq_rows + psd_blocks
        self.A = sp.vstack(parts, format="csc") if parts else sp.csc_matrix((0, self.n_var))
        n_psd_rows = sum(p.shape[0] for p in psd_blocks)
        self.b = np.concatenate(eq_b + ineq_b + [np.zeros(n_psd_rows)]) if parts else np.zeros(0)
        self.n_eq = sum(r.shape[0] for r in eq_rows)
        self.n_ineq = sum(r.shape[0] for r in ineq_rows)
        self.psd_sizes = psd_sizes

        q = np.zeros(self.n_var)
        if with_t:
            q[-1] = 1.0
        elif problem.objective is not None:
            for name, f in problem.objective.items():
                n = dims[name]
                o = self.offsets[name]
                # Re tr(F X) = Re sum_{pq} F[q,p] X[p,q]
                lin = (np.asarray(f, dtype=complex).T.reshape(1, -1) @ hermitian_basis(n)).real
                q[o:o + n * n] -= lin.ravel()
        self.q = q

    def _constraint_rows(self, c: Constraint, dims) -> tuple[sp.csr_matrix, np.ndarray]:
        sel_re, sel_im = _real_row_selection(c.dim, c.hermitian)
        n_rows = len(sel_re) + len(sel_im)
        data, ri, ci = [], [], []
        for name, coeff in c.terms:
            n = dims[name]
            m = coeff @ hermitian_basis(n)
            dense = np.vstack([m[sel_re].real, m[sel_im].imag])
            nz_r, nz_c = np.nonzero(np.abs(dense) > 0)
            data.append(dense[nz_r, nz_c])
            ri.append(nz_r)
            ci.append(nz_c + self.offsets[name])
        if data:
            rows = sp.csr_matrix(
                (np.concatenate(data), (np.concatenate(ri), np.concatenate(ci))),
                shape=(n_rows, self.n_var - (1 if self.with_t else 0)),
            )
        else:
            rows = sp.csr_matrix((n_rows, self.n_var - (1 if self.with_t else 0)))
        const = np.asarray(c.const, dtype=complex).reshape(-1)
        rhs = -np.concatenate([const[sel_re].real, const[sel_im].imag])
        return rows, rhs

    def blocks_from(self, x: np.ndarray) -> dict[str, np.ndarray]:
        out = {}
        for b in self.problem.blocks:
            o = self.offsets[b.name]
            vec = hermitian_basis(b.dim) @ x[o:o + b.dim * b.dim]
            out[b.name] = hermitize(vec.reshape(b.dim, b.dim))
        return out


# --------------------------------------------------------------------------
# backends


def _run_clarabel(comp: _Compiled, settings: SolverSettings, variant: dict):
    import clarabel

    cones = []
    if comp.n_eq:
        cones.append(clarabel.ZeroConeT(comp.n_eq))
    if comp.n_ineq:
        cones.append(clarabel.NonnegativeConeT(comp.n_ineq))
    cones.extend(clarabel.PSDTriangleConeT(s) for s in comp.psd_sizes)
    opts = clarabel.DefaultSettings()
    opts.verbose = settings.verbose
    opts.max_iter = settings.max_iter
    opts.tol_gap_abs = settings.solver_tol
    opts.tol_gap_rel = settings.solver_tol
    opts.tol_feas = settings.solver_tol
    opts.tol_infeas_abs = settings.solver_tol
    opts.tol_infeas_rel = settings.solver_tol
    for key, value in variant.items():
        setattr(opts, key, value)
    P = sp.csc_matrix((comp.n_var, comp.n_var))
    solver = clarabel.DefaultSolver(P, comp.q, comp.A, comp.b, cones, opts)
    res = solver.solve()
    status = str(res.status)
    x = np.asarray(res.x, dtype=float)
    if status == "Solved":
        return "solved", x, status
    if status == "AlmostSolved":
        return "almost", x, status
    if status in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        return "primal_infeasible", x, status
    if status in ("DualInfeasible", "AlmostDualInfeasible"):
        return "unbounded", x, status
    return "failed", x, status


def _run_scs(comp: _Compiled, settings: SolverSettings, variant: dict):
    import scs

    data = {"A": comp.A, "b": comp.b, "c": comp.q}
    cone = {"z": comp.n_eq, "l": comp.n_ineq, "s": list(comp.psd_sizes)}
    solver = scs.SCS(
        data,
        cone,
        eps_abs=settings.solver_tol,
        eps_rel=settings.solver_tol,
        max_iters=max(settings.max_iter, 100000),
        verbose=settings.verbose,
        **variant,
    )
    res = solver.solve()
    status = res["info"]["status"]
    x = np.asarray(res["x"], dtype=float)
    if status == "solved":
        return "solved", x, status
    if status == "solved_inaccurate":
        return "almost", x, status
    if status.startswith("infeasible"):
        return "primal_infeasible", x, status
    if status.startswith("unbounded"):
        return "unbounded", x, status
    return "failed", x, status


_BACKENDS = {"clarabel": _run_clarabel, "scs": _run_scs}

# Alternative backend settings tried in turn when an attempt stalls; the
# first entry is the plain configuration.
_VARIANTS = {
    "clarabel": ({}, {"equilibrate_enable": False}, {"max_step_fraction": 0.9}),
    "scs": ({},),
}


def evaluate_constraint(c: Constraint, blocks: Mapping[str, np.ndarray]) -> np.ndarray:
    """Value of the constraint expression (an ``m x m`` matrix) at ``blocks``."""
    acc = np.asarray(c.const, dtype=complex).reshape(-1).copy()
    for name, coeff in c.terms:
        acc += coeff @ np.asarray(blocks[name], dtype=complex).reshape(-1)
    return acc.reshape(c.dim, c.dim)


def max_violation(problem: SdpProblem, blocks: Mapping[str, np.ndarray], relaxed_only: bool = False) -> float:
    worst = 0.0
    for c in problem.constraints:
        if relaxed_only and not c.relax:
            continue
        worst = max(worst, float(np.max(np.abs(evaluate_constraint(c, blocks)), initial=0.0)))
    return worst


def objective_value(problem: SdpProblem, blocks: Mapping[str, np.ndarray]) -> float:
    if problem.objective is None:
        return 0.0
    total = problem.objective_const
    for name, f in problem.objective.items():
        total += float(np.real(np.trace(np.asarray(f) @ blocks[name])))
    return total


def _attempts(problem: SdpProblem, settings: SolverSettings, with_t: bool) -> Iterator[SdpSolution]:
    """Solve once per backend variant (only the first unless ``settings.retry``)."""
    start = time.perf_counter()
    try:
        comp = _Compiled(problem, with_t, settings.backend)
    except Exception as exc:
        log.exception("SDP compilation failure")
        yield SdpSolution(INDETERMINATE, diagnostic=f"compilation error: {exc!r}")
        return
    variants = _VARIANTS[settings.backend] if settings.retry else _VARIANTS[settings.backend][:1]
    for variant in variants:
        try:
            outcome, x, raw = _BACKENDS[settings.backend](comp, settings, variant)
        except Exception as exc:  # backend failures must not masquerade as answers
            log.exception("SDP backend failure")
            yield SdpSolution(INDETERMINATE, diagnostic=f"backend error: {exc!r}",
                              solve_seconds=time.perf_counter() - start)
            continue
        elapsed = time.perf_counter() - start
        diag = f"backend status {raw}" + (f" with {variant}" if variant else "")
        if outcome == "primal_infeasible":
            yield SdpSolution(INFEASIBLE, diagnostic=diag, solve_seconds=elapsed, converged=True)
            continue
        if outcome not in ("solved", "almost"):
            yield SdpSolution(INDETERMINATE, diagnostic=diag, solve_seconds=elapsed)
            continue
        blocks = comp.blocks_from(x)
        sol = SdpSolution(
            FEASIBLE,
            blocks=blocks,
            objective_value=objective_value(problem, blocks),
            slack=max_violation(problem, blocks),
            diagnostic=diag,
            solve_seconds=elapsed,
            converged=outcome == "solved",
        )
        if with_t:
            sol.t = float(x[-1])
        yield sol


def solve(problem: SdpProblem, settings: SolverSettings | None = None) -> SdpSolution:
    """Solve with every constraint exact.

    ``status`` is ``feasible`` when the backend converged (the objective, if
    any, is then optimal), ``infeasible`` when it certified primal
    infeasibility and ``indeterminate`` otherwise.  A run that stops at
    reduced accuracy is retried with other backend settings; if none fully
    converges, the reduced-accuracy answer is returned with its diagnostic.
    """
    fallback = None
    for sol in _attempts(problem, settings or SolverSettings(), with_t=False):
        if sol.converged:
            return sol
        if sol.status == FEASIBLE and fallback is None:
            fallback = sol
        elif fallback is None or fallback.status != FEASIBLE:
            fallback = sol
    return fallback


def decide(problem: SdpProblem, settings: DecisionSettings | None = None) -> FeasibilityDecision:
    settings = settings or DecisionSettings()
    return decide_feasibility(problem, settings.eps_feasible, settings.eps_infeasible, settings.solver)


def decide_feasibility(
    problem: SdpProblem,
    eps_feasible: float = DEFAULT_EPS_FEASIBLE,
    eps_infeasible: float = DEFAULT_EPS_INFEASIBLE,
    settings: SolverSettings | None = None,
) -> FeasibilityDecision:
    """Three-way feasibility verdict from the minimal uniform violation ``t*``.

    ``t*`` is the larger of the optimal ``t`` and the worst constraint
    violation replayed from the returned blocks.  ``t* <= eps_feasible`` is
    feasible, ``t* >= eps_infeasible`` infeasible, anything between is
    indeterminate.  If the exact (non-relaxable) constraints alone are
    infeasible the verdict is infeasible with ``t* = inf``.  Runs landing in
    the gap are retried with other backend settings and the smallest
    replayed ``t*`` is kept.
    """
    if problem.objective is not None:
        raise ValueError("decide_feasibility expects a problem without objective")
    if not eps_feasible < eps_infeasible:
        raise ValueError(f"need eps_feasible < eps_infeasible, got {eps_feasible} >= {eps_infeasible}")
    best: FeasibilityDecision | None = None
    for sol in _attempts(problem, settings or SolverSettings(), with_t=True):
        if sol.status == INFEASIBLE:
            dec = FeasibilityDecision(INFEASIBLE, float("inf"), sol)
        elif sol.status != FEASIBLE:
            dec = FeasibilityDecision(INDETERMINATE, float("nan"), sol)
        else:
            t = max(sol.t, sol.slack)
            if t <= eps_feasible:
                status = FEASIBLE
            elif t >= eps_infeasible:
                status = INFEASIBLE
            else:
                status = INDETERMINATE
            dec = FeasibilityDecision(status, t, sol)
        if dec.status != INDETERMINATE:
            return dec
        if best is None or (not np.isnan(dec.t) and not dec.t >= best.t):
            best = dec
    return best


# --------------------------------------------------------------------------
# JSON audit format


def _cm(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def problem_to_json(problem: SdpProblem) -> dict:
    return {
        "blocks": [{"name": b.name, "dim": b.dim} for b in problem.blocks],
        "constraints": [
            {
                "name": c.name,
                "dim": c.dim,
                "hermitian": c.hermitian,
                "relax": c.relax,
                "const": _cm(c.const),
                "terms": [{"block": n, "coeff": _cm(k)} for n, k in c.terms],
            }
            for c in problem.constraints
        ],
        "objective": None
        if problem.objective is None
        else {n: _cm(f) for n, f in problem.objective.items()},
        "objective_const": problem.objective_const,
    }


def problem_from_json(obj: dict) -> SdpProblem:
    def m(o):
        return np.asarray(o["re"], dtype=float) + 1j * np.asarray(o["im"], dtype=float)

    blocks = tuple(Block(b["name"], int(b["dim"])) for b in obj["blocks"])
    cons = tuple(
        Constraint(
            c["name"],
            int(c["dim"]),
            tuple((t["block"], m(t["coeff"])) for t in c["terms"]),
            m(c["const"]),
            bool(c["hermitian"]),
            bool(c["relax"]),
        )
        for c in obj["constraints"]
    )
    objective = None if obj.get("objective") is None else {k: m(v) for k, v in obj["objective"].items()}
    return SdpProblem(blocks, cons, objective, float(obj.get("objective_const", 0.0)))


def solution_to_json(sol: SdpSolution) -> dict:
    return {
        "status": sol.status,
        "objective_value": sol.objective_value,
        "slack": sol.slack,
        "t": sol.t,
        "diagnostic": sol.diagnostic,
        "blocks": {k: _cm(v) for k, v in sol.blocks.items()},
    }


def scalar_constraint(name: str, terms: Sequence[tuple[str, float]], const: float,
                      relax: bool = True) -> Constraint:
    """``sum(coef * x) + const == 0`` over 1x1 blocks."""
    return Constraint(
        name,
        1,
        tuple((b, np.array([[complex(v)]])) for b, v in terms),
        np.array([[complex(const)]]),
        hermitian=True,
        relax=relax,
    )
