"""Membership tests for the classical (free) sets of assemblages.

Every test asks whether the assemblage decomposes as
``sigma[a|x] = sum_l D_l[a, x] * hidden_l`` with PSD hidden states whose
traces sum to one, where ``D_l`` ranges over the deterministic strategies
of the model:

* ``lhs``     one Alice, deterministic responses ``a = r(x)``
* ``losr``    several Alices, independent responses per Alice
* ``general`` several Alices, arbitrary joint functions ``a-tuple = F(x-tuple)``
* ``tolhs``   two Alices, one decomposition with one-way signalling in each
              direction, both of which must reproduce the assemblage
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import strategies
from .assemblages import Assemblage, Scenario
from .sdp import (
    Block,
    Constraint,
    DecisionSettings,
    FeasibilityDecision,
    SdpProblem,
    coeff_trace,
    decide,
)

MODELS = ("lhs", "losr", "general", "tolhs")


@dataclass
class FreenessResult:
    model: str
    status: str
    t: float
    # one list of (strategy index, hidden state) pairs per decomposition
    certificate: list[list[tuple[int, np.ndarray]]] = field(default_factory=list)
    tables: list[list[np.ndarray]] = field(default_factory=list)
    diagnostic: str = ""

    @property
    def free(self) -> bool:
        return self.status == "feasible"

    def reconstruct(self, which: int = 0) -> np.ndarray:
        """Elements array rebuilt from the certificate of one decomposition."""
        pairs = self.certificate[which]
        tables = self.tables[which]
        d = pairs[0][1].shape[0]
        n_a, n_x = tables[0].shape
        out = np.zeros((n_a, n_x, d, d), dtype=complex)
        for idx, h in pairs:
            out += tables[idx][:, :, None, None] * h
        return out


def response_tables(a: Assemblage, model: str) -> list[list[np.ndarray]]:
    """Deterministic ``D[a_index, x_index]`` tables, one list per decomposition."""
    sc = a.scenario
    if model == "lhs":
        if sc.n_alices != 1:
            raise ValueError("the lhs model is for a single Alice; use losr, general or tolhs")
        return [[r.table() for r in strategies.enumerate_responses(sc.n_inputs[0], sc.n_outputs[0])]]
    if model == "losr":
        per = [strategies.enumerate_responses(nx, na) for nx, na in zip(sc.n_inputs, sc.n_outputs)]
        return [[strategies.product_table(combo) for combo in itertools.product(*per)]]
    if model == "general":
        return [[r.table() for r in strategies.enumerate_responses(sc.n_x, sc.n_a)]]
    if model == "tolhs":
        if sc.n_alices != 2:
            raise ValueError("the time-ordered model is implemented for two Alices")
        (nx1, nx2), (na1, na2) = sc.n_inputs, sc.n_outputs
        return [
            [s.table() for s in strategies.enumerate_signalling(nx1, na1, nx2, na2, direction)]
            for direction in (strategies.A1_TO_A2, strategies.A2_TO_A1)
        ]
    raise ValueError(f"unknown model {model!r}; choose from {MODELS}")


def build_decomposition_sdp(a: Assemblage, table_sets: Sequence[Sequence[np.ndarray]]) -> SdpProblem:
    """Feasibility problem: each table set must reproduce ``a`` on its own blocks."""
    sc = a.scenario
    d = sc.bob_dim
    eye = np.eye(d * d, dtype=complex)
    blocks, cons = [], []
    for s, tables in enumerate(table_sets):
        names = [f"h{s}_{i}" for i in range(len(tables))]
        blocks.extend(Block(n, d) for n in names)
        for ai in range(sc.n_a):
            for xi in range(sc.n_x):
                terms = tuple(
                    (n, t[ai, xi] * eye) for n, t in zip(names, tables) if t[ai, xi] != 0
                )
                cons.append(Constraint(f"match{s}[{ai},{xi}]", d, terms, -a.elements[ai, xi]))
        tr = coeff_trace(d)
        cons.append(Constraint(f"norm{s}", 1, tuple((n, tr) for n in names), -np.ones((1, 1))))
    return SdpProblem(tuple(blocks), tuple(cons))


def is_free(a: Assemblage, model: str, settings: DecisionSettings | None = None) -> FreenessResult:
    table_sets = response_tables(a, model)
    problem = build_decomposition_sdp(a, table_sets)
    dec: FeasibilityDecision = decide(problem, settings)
    res = FreenessResult(model, dec.status, dec.t, diagnostic=dec.solution.diagnostic)
    if dec.feasible:
        for s, tables in enumerate(table_sets):
            res.certificate.append(
                [(i, dec.solution.blocks[f"h{s}_{i}"]) for i in range(len(tables))]
            )
            res.tables.append(list(tables))
    return res


def is_free_bipartite(a: Assemblage, settings: DecisionSettings | None = None) -> FreenessResult:
    return is_free(a, "lhs", settings)


def is_losr_free_multi(a: Assemblage, settings: DecisionSettings | None = None) -> FreenessResult:
    return is_free(a, "losr", settings)


def is_general_lhs_multi(a: Assemblage, settings: DecisionSettings | None = None) -> FreenessResult:
    return is_free(a, "general", settings)


def is_tolhs_multi(a: Assemblage, settings: DecisionSettings | None = None) -> FreenessResult:
    return is_free(a, "tolhs", settings)


def lhs_assemblage(a_scenario, tables: Sequence[np.ndarray], weights: Sequence[float],
                   states: Sequence[np.ndarray]) -> Assemblage:
    """Build ``sum_l w_l D_l[a, x] rho_l`` for explicit hidden states."""
    d = a_scenario.bob_dim
    out = np.zeros((a_scenario.n_a, a_scenario.n_x, d, d), dtype=complex)
    for t, w, rho in zip(tables, weights, states):
        out += w * np.asarray(t)[:, :, None, None] * np.asarray(rho)
    return Assemblage(a_scenario, out)


def pr_box_assemblage(bob_state: np.ndarray | None = None) -> Assemblage:
    """Two binary Alices sharing PR-box correlations, Bob holding a fixed state."""
    rho = np.eye(2) / 2 if bob_state is None else np.asarray(bob_state, dtype=complex)
    d = rho.shape[0]
    sc = Scenario((2, 2), (2, 2), d)
    out = np.zeros((4, 4, d, d), dtype=complex)
    for a1 in range(2):
        for a2 in range(2):
            for x1 in range(2):
                for x2 in range(2):
                    if a1 ^ a2 == x1 & x2:
                        out[a1 * 2 + a2, x1 * 2 + x2] = 0.5 * rho
    return Assemblage(sc, out)
