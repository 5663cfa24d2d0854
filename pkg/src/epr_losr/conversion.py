"""LOSR convertibility between assemblages, decided by semidefinite feasibility.

A conversion is a convex mixture over deterministic classical processings
of every Alice (one comb per Alice) combined with a quantum operation on
Bob.  Bob's operation for hidden value ``l`` is represented by its Choi
matrix ``W_l`` on ``out ⊗ in`` with the map ``rho -> d * tr_in[W_l (I ⊗ rho^T)]``.
The side constraints ``W_l >= 0``, ``tr_out W_l = q_l I/d`` and
``sum_l q_l = 1`` make the mixture a valid LOSR operation.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import qcore, strategies
from .assemblages import Assemblage
from .sdp import (
    FEASIBLE,
    INDETERMINATE,
    INFEASIBLE,
    Block,
    Constraint,
    DecisionSettings,
    SdpProblem,
    coeff_choi,
    coeff_partial_trace_in,
    decide,
)

log = logging.getLogger(__name__)


def comb_tuples(src: Assemblage, dst: Assemblage) -> list[tuple[strategies.DetComb, ...]]:
    s, t = src.scenario, dst.scenario
    if s.n_alices != t.n_alices:
        raise ValueError(
            f"arity mismatch: source has {s.n_alices} Alices, target has {t.n_alices}"
        )
    per = [
        strategies.enumerate_combs((nx, na), (nxo, nao))
        for nx, na, nxo, nao in zip(s.n_inputs, s.n_outputs, t.n_inputs, t.n_outputs)
    ]
    return strategies.enumerate_comb_tuples(per)


def processed_sources(src: Assemblage, dst: Assemblage, combs) -> np.ndarray:
    """``tau[l, a', x']``: source elements routed through comb tuple ``l``.

    Shape ``(n_combs, n_a', n_x', d, d)``.
    """
    s, t = src.scenario, dst.scenario
    flat = src.elements.reshape(s.n_a * s.n_x, s.bob_dim, s.bob_dim)
    out = np.empty((len(combs), t.n_a, t.n_x, s.bob_dim, s.bob_dim), dtype=complex)
    cache: dict = {}
    for i, ct in enumerate(combs):
        # per-Alice transfers are shared across many tuples; cache the joint one by identity
        key = tuple(id(c) for c in ct)
        if key not in cache:
            cache[key] = strategies.joint_transfer(ct)
        out[i] = np.tensordot(cache[key], flat, axes=(1, 0)).reshape(t.n_a, t.n_x, s.bob_dim, s.bob_dim)
    return out


def _block_names(n: int) -> tuple[list[str], list[str]]:
    return [f"W{i}" for i in range(n)], [f"q{i}" for i in range(n)]


def _side_constraints(names, qnames, d_in, d_out) -> list[Constraint]:
    ptr = coeff_partial_trace_in(d_out, d_in)
    q_coeff = -(np.eye(d_in, dtype=complex) / d_in).reshape(d_in * d_in, 1)
    cons = [
        Constraint(f"marginal[{w}]", d_in, ((w, ptr), (q, q_coeff)), np.zeros((d_in, d_in)), relax=False)
        for w, q in zip(names, qnames)
    ]
    cons.append(
        Constraint("weights", 1, tuple((q, np.ones((1, 1), dtype=complex)) for q in qnames),
                   -np.ones((1, 1)), relax=False)
    )
    return cons


def build_conversion_sdp_multi(src: Assemblage, dst: Assemblage) -> SdpProblem:
    """Feasibility problem for converting ``src`` into ``dst`` (any equal number of Alices)."""
    combs = comb_tuples(src, dst)
    taus = processed_sources(src, dst, combs)
    d_in, d_out = src.scenario.bob_dim, dst.scenario.bob_dim
    t = dst.scenario
    names, qnames = _block_names(len(combs))
    blocks = [Block(n, d_out * d_in) for n in names] + [Block(q, 1) for q in qnames]
    cons = []
    for ai in range(t.n_a):
        for xi in range(t.n_x):
            terms = tuple(
                (names[l], coeff_choi(taus[l, ai, xi], d_in, d_out))
                for l in range(len(combs))
                if np.any(taus[l, ai, xi])
            )
            cons.append(Constraint(f"target[{ai},{xi}]", d_out, terms, -dst.elements[ai, xi]))
    cons.extend(_side_constraints(names, qnames, d_in, d_out))
    return SdpProblem(tuple(blocks), tuple(cons))


def build_conversion_sdp(src: Assemblage, dst: Assemblage) -> SdpProblem:
    if src.scenario.n_alices != 1 or dst.scenario.n_alices != 1:
        raise ValueError("build_conversion_sdp is for one Alice; use build_conversion_sdp_multi")
    return build_conversion_sdp_multi(src, dst)


@dataclass
class ConversionCertificate:
    comb_indices: list[int]
    comb_labels: list[str]
    choi_blocks: list[np.ndarray]
    weights: list[float]
    slack: float
    d_in: int
    d_out: int

    def to_json(self) -> dict:
        return {
            "d_in": self.d_in,
            "d_out": self.d_out,
            "slack": self.slack,
            "combs": [
                {"index": i, "comb": lab, "weight": w, "choi": qcore.matrix_to_json(m)}
                for i, lab, w, m in zip(self.comb_indices, self.comb_labels, self.weights, self.choi_blocks)
            ],
        }


@dataclass
class CertificateAudit:
    target_error: float
    min_eig: float
    marginal_error: float
    total_marginal_error: float

    def ok(self, tol: float = 1e-6) -> bool:
        return (self.target_error <= tol and self.min_eig >= -tol
                and self.marginal_error <= tol and self.total_marginal_error <= tol)


@dataclass
class ConversionResult:
    status: str
    t: float
    certificate: ConversionCertificate | None = None
    audit: CertificateAudit | None = None
    diagnostic: str = ""

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE


def reconstruct_target(src: Assemblage, dst_scenario, cert: ConversionCertificate) -> np.ndarray:
    """Apply a certificate to ``src``; returns the target elements array."""
    s = src.scenario
    flat = src.elements.reshape(s.n_a * s.n_x, s.bob_dim, s.bob_dim)
    out = np.zeros((dst_scenario.n_a, dst_scenario.n_x, cert.d_out, cert.d_out), dtype=complex)
    for label, w in zip(cert.comb_labels, cert.choi_blocks):
        combs = _parse_tuple(label, s, dst_scenario)
        tau = np.tensordot(strategies.joint_transfer(combs), flat, axes=(1, 0))
        tau = tau.reshape(dst_scenario.n_a, dst_scenario.n_x, s.bob_dim, s.bob_dim)
        for ai in range(dst_scenario.n_a):
            for xi in range(dst_scenario.n_x):
                out[ai, xi] += qcore.choi_apply(w, tau[ai, xi], cert.d_in, cert.d_out)
    return out


def _parse_tuple(label: str, s, t) -> tuple[strategies.DetComb, ...]:
    parts = label.split("|")
    return tuple(
        strategies.DetComb.from_canonical(p, nx, na, nxo, nao)
        for p, nx, na, nxo, nao in zip(parts, s.n_inputs, s.n_outputs, t.n_inputs, t.n_outputs)
    )


def audit_certificate(src: Assemblage, dst: Assemblage, cert: ConversionCertificate) -> CertificateAudit:
    target = reconstruct_target(src, dst.scenario, cert)
    d_in, d_out = cert.d_in, cert.d_out
    eye = np.eye(d_in) / d_in
    min_ev, marg_err = np.inf, 0.0
    total = np.zeros((d_in, d_in), dtype=complex)
    for w, q in zip(cert.choi_blocks, cert.weights):
        min_ev = min(min_ev, qcore.min_eig(w))
        m = qcore.partial_trace(w, [d_out, d_in], keep=[1])
        marg_err = max(marg_err, float(np.max(np.abs(m - q * eye))))
        total += m
    return CertificateAudit(
        target_error=float(np.max(np.abs(target - dst.elements))),
        min_eig=float(min_ev),
        marginal_error=marg_err,
        total_marginal_error=float(np.max(np.abs(total - eye))),
    )


def decide_conversion_multi(src: Assemblage, dst: Assemblage,
                            settings: DecisionSettings | None = None) -> ConversionResult:
    combs = comb_tuples(src, dst)
    problem = build_conversion_sdp_multi(src, dst)
    dec = decide(problem, settings)
    res = ConversionResult(dec.status, dec.t, diagnostic=dec.solution.diagnostic)
    if dec.feasible:
        blocks = dec.solution.blocks
        n = len(combs)
        cert = ConversionCertificate(
            comb_indices=list(range(n)),
            comb_labels=[strategies.canonical_tuple(c) for c in combs],
            choi_blocks=[blocks[f"W{i}"] for i in range(n)],
            weights=[float(blocks[f"q{i}"][0, 0].real) for i in range(n)],
            slack=dec.t,
            d_in=src.scenario.bob_dim,
            d_out=dst.scenario.bob_dim,
        )
        res.certificate = cert
        res.audit = audit_certificate(src, dst, cert)
    return res


def decide_conversion(src: Assemblage, dst: Assemblage,
                      settings: DecisionSettings | None = None) -> ConversionResult:
    if src.scenario.n_alices != 1 or dst.scenario.n_alices != 1:
        raise ValueError("decide_conversion is for one Alice; use decide_conversion_multi")
    return decide_conversion_multi(src, dst, settings)


# --------------------------------------------------------------------------
# pre-order graphs


@dataclass
class PreorderGraph:
    nodes: list[str]
    free: dict[str, bool]
    edges: list[tuple[str, str, float]] = field(default_factory=list)
    non_edges: list[tuple[str, str, float]] = field(default_factory=list)
    indeterminate: list[tuple[str, str, float]] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def has_edge(self, a: str, b: str) -> bool:
        return any(s == a and d == b for s, d, _ in self.edges)

    def edge_set(self) -> set[tuple[str, str]]:
        return {(s, d) for s, d, _ in self.edges}

    def to_json(self) -> dict:
        return {
            "nodes": [{"name": n, "free": self.free.get(n, False)} for n in self.nodes],
            "edges": [{"src": s, "dst": d, "slack": t} for s, d, t in self.edges],
            "indeterminate": [{"src": s, "dst": d, "slack": t} for s, d, t in self.indeterminate],
        }

    def to_dot(self) -> str:
        lines = ["digraph preorder {"]
        for n in self.nodes:
            style = ' style=filled fillcolor=grey' if self.free.get(n) else ""
            lines.append(f'  "{n}" [label="{n}"{style}];')
        for s, d, _ in self.edges:
            lines.append(f'  "{s}" -> "{d}";')
        for s, d, _ in self.indeterminate:
            lines.append(f'  "{s}" -> "{d}" [style=dashed];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _decide_pair(args):
    src, dst, settings, multi = args
    fn = decide_conversion_multi if multi else decide_conversion
    r = fn(src, dst, settings)
    return r.status, r.t


def _free_status(a: Assemblage, settings) -> bool:
    from .freeness import is_free

    model = "lhs" if a.scenario.n_alices == 1 else "losr"
    return is_free(a, model, settings).free


def preorder_graph(
    family: Sequence[tuple[str, Assemblage]],
    settings: DecisionSettings | None = None,
    workers: int = 1,
    fast: bool = False,
) -> PreorderGraph:
    """Decide every ordered pair of distinct family members.

    With ``fast`` a pair already implied by transitivity of recorded edges
    is not solved (sequential sweep).  Otherwise pairs are solved
    independently, in parallel when ``workers > 1``, and merged by pair index.
    """
    names = [n for n, _ in family]
    if len(set(names)) != len(names):
        raise ValueError("family member names must be unique")
    arity = {a.scenario.n_alices for _, a in family}
    if len(arity) > 1:
        raise ValueError("family members must share the number of Alices")
    multi = arity.pop() != 1 if family else False
    graph = PreorderGraph(names, {n: _free_status(a, settings) for n, a in family})
    pairs = [(i, j) for i in range(len(family)) for j in range(len(family)) if i != j]

    def record(i, j, status, t):
        entry = (names[i], names[j], t)
        if status == FEASIBLE:
            graph.edges.append(entry)
        elif status == INFEASIBLE:
            graph.non_edges.append(entry)
        else:
            graph.indeterminate.append(entry)

    if fast:
        reach = np.eye(len(family), dtype=bool)
        for i, j in pairs:
            if (reach[i] & reach[:, j]).any():
                graph.skipped.append((names[i], names[j]))
                continue
            status, t = _decide_pair((family[i][1], family[j][1], settings, multi))
            record(i, j, status, t)
            if status == FEASIBLE:
                # close under composition with the new edge
                reach = reach | np.outer(reach[:, i], reach[j])
        return graph

    jobs = [(family[i][1], family[j][1], settings, multi) for i, j in pairs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_decide_pair, jobs))
    else:
        results = [_decide_pair(job) for job in jobs]
    for (i, j), (status, t) in zip(pairs, results):
        record(i, j, status, t)
    return graph


def graph_to_json_text(graph: PreorderGraph) -> str:
    return json.dumps(graph.to_json(), indent=2)
