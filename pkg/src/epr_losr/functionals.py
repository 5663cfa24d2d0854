"""Tilted Bell expressions and the steering functionals built from them.

A functional is ``S[sigma] = Re Tr sum_{a,x} F[a,x] sigma[a|x]`` with
Hermitian operators ``F`` acting on Bob's space.  The bipartite family
fixes Bob's observables of the tilted CHSH expression; the multipartite
family does the same for the GHZ-type expression with ``N - 1`` Alices.

Input convention of the bundled assemblage families: input 0 measures
sigma_z and input 1 measures sigma_x.  The multipartite expression puts its
full correlator on the sigma_x setting of every Alice, so here that term
sits on the all-ones input tuple.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import qcore, strategies
from .assemblages import Assemblage, Scenario
from .qcore import SX, SZ

_PI4 = math.pi / 4


def _check_angle(x: float, name: str = "eta") -> None:
    if not 0 < x <= _PI4 + 1e-15:
        raise ValueError(f"{name} must lie in (0, pi/4], got {x}")


@dataclass(frozen=True, eq=False)
class EprFunctional:
    scenario: Scenario
    operators: np.ndarray = field(repr=False)  # [a_index, x_index, d, d]
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        sc = self.scenario
        ops = np.array(self.operators, dtype=complex)
        if ops.shape != (sc.n_a, sc.n_x, sc.bob_dim, sc.bob_dim):
            raise ValueError(f"operator array has shape {ops.shape}")
        herm = np.max(np.abs(ops - np.conj(np.swapaxes(ops, -1, -2))))
        if herm > 1e-12:
            raise ValueError(f"functional operators are not Hermitian (deviation {herm:.2e})")
        ops.setflags(write=False)
        object.__setattr__(self, "operators", ops)

    def operator(self, a, x) -> np.ndarray:
        return self.operators[self.scenario.a_index(a), self.scenario.x_index(x)]


def evaluate_complex(f: EprFunctional, a: Assemblage) -> complex:
    if f.scenario != a.scenario:
        raise ValueError("functional and assemblage scenarios differ")
    # Tr(F sigma) = sum_ij F_ij sigma_ji
    return complex(np.einsum("axij,axji->", f.operators, a.elements))


def evaluate(f: EprFunctional, a: Assemblage) -> float:
    return evaluate_complex(f, a).real


# --------------------------------------------------------------------------
# bipartite


def tilted_bell_params(theta: float) -> tuple[float, float]:
    """``(alpha, mu)`` for which the tilted expression is maximised by ``|theta>``."""
    _check_angle(theta, "theta")
    if math.isclose(theta, _PI4, rel_tol=0, abs_tol=1e-15):
        alpha = 0.0
    else:
        alpha = 2 / math.sqrt(1 + 2 * math.tan(2 * theta) ** 2)
    mu = math.atan(math.sin(2 * theta))
    return alpha, mu


def epr_functional_bipartite(eta: float) -> EprFunctional:
    alpha, mu = tilted_bell_params(eta)
    b0 = math.cos(mu) * SZ + math.sin(mu) * SX
    b1 = math.cos(mu) * SZ - math.sin(mu) * SX
    first = alpha * np.eye(2) + b0 + b1
    second = b0 - b1
    ops = np.array([[first, second], [-first, -second]])
    return EprFunctional(Scenario.bipartite(2, 2, 2), ops, {"eta": eta, "alpha": alpha, "mu": mu})


def quantum_max_bipartite(eta: float) -> float:
    _check_angle(eta)
    c, s = math.cos(2 * eta), math.sin(2 * eta)
    # 1 / (1 + 2 tan^2) written without the tangent so eta = pi/4 is regular
    return 2 * math.sqrt(2) * math.sqrt(1 + c * c / (c * c + 2 * s * s))


def tilted_bell_value(alpha: float, correlations: dict) -> float:
    """``alpha<A0> + <A0B0> + <A0B1> + <A1B0> - <A1B1>``.

    ``correlations`` maps ``"A0", "A0B0", "A0B1", "A1B0", "A1B1"`` to expectations.
    """
    c = correlations
    return alpha * c["A0"] + c["A0B0"] + c["A0B1"] + c["A1B0"] - c["A1B1"]


def classical_bound(alpha: float) -> float:
    return 2 + alpha


def tilted_bell_quantum_max(alpha: float) -> float:
    return math.sqrt(8 + 2 * alpha * alpha)


# --------------------------------------------------------------------------
# multipartite


def multi_params(eta: float) -> tuple[float, float]:
    """``(mu, scale)``: first-quadrant ``mu`` with ``2 sin^2 mu = sin^2 2 eta``
    and ``scale = 1 / sqrt(1 + cos^2 2 eta)``."""
    _check_angle(eta)
    mu = math.asin(math.sin(2 * eta) / math.sqrt(2))
    c = math.cos(2 * eta)
    return mu, 1 / math.sqrt(1 + c * c)


def epr_functional_multi(n_parties: int, eta: float) -> EprFunctional:
    if int(n_parties) != n_parties or n_parties < 2:
        raise ValueError("n_parties must be an integer >= 2")
    k = n_parties - 1
    mu, scale = multi_params(eta)
    b0 = math.cos(mu) * SZ + math.sin(mu) * SX
    b1 = -math.cos(mu) * SZ + math.sin(mu) * SX
    sc = Scenario((2,) * k, (2,) * k, 2)
    ops = np.zeros((sc.n_a, sc.n_x, 2, 2), dtype=complex)
    ones = (1,) * k
    marginal = k * math.cos(2 * eta) * scale * (b0 - b1)
    for ai, a in enumerate(sc.a_tuples()):
        ops[ai, sc.x_index(ones)] += k * (-1) ** sum(a) * (b0 + b1) + marginal
        for i in range(k):
            x = list(ones)
            x[i] = 0
            ops[ai, sc.x_index(x)] += (-1) ** a[i] * scale * (b0 - b1)
    return EprFunctional(sc, ops, {"eta": eta, "mu": mu, "n_parties": n_parties})


def quantum_max_multi(n_parties: int, eta: float) -> float:
    _check_angle(eta)
    if n_parties < 2:
        raise ValueError("n_parties must be >= 2")
    return 2 * math.sqrt(2) * (n_parties - 1)


def multi_classical_bound_candidates(n_parties: int, alpha: float) -> tuple[float, float]:
    """Two readings of the classical bound of the multipartite expression.

    Kept for reference only; neither is used as a test oracle.
    """
    c = math.cos(2 * alpha)
    k = n_parties - 1
    return k * (1 - c) / math.sqrt(1 - c), k * (1 - c) / math.sqrt(1 - c * c)


# --------------------------------------------------------------------------
# classical bound by enumeration


def lhs_bound(f: EprFunctional) -> float:
    """Largest value of ``f`` over free assemblages.

    The free set is the convex hull of ``D[a,x] rho`` for deterministic
    (per-Alice independent) responses and states ``rho``; the maximum over
    ``rho`` is the top eigenvalue of ``sum_{a,x} D[a,x] F[a,x]``.
    """
    sc = f.scenario
    per = [strategies.enumerate_responses(nx, na) for nx, na in zip(sc.n_inputs, sc.n_outputs)]
    best = -math.inf
    for combo in itertools.product(*per):
        table = strategies.product_table(combo)
        op = np.einsum("ax,axij->ij", table, f.operators)
        best = max(best, float(np.linalg.eigvalsh(qcore.hermitize(op))[-1]))
    return best
