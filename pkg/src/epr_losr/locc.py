"""One-way LOCC maps from Bob to Alice acting on bipartite assemblages.

Bob applies an instrument with outcomes ``w`` and tells Alice ``w``; Alice
then picks her input and relabels her output with classical policies that
may depend on ``w``.  Instruments need not be complete: if they are not,
the map succeeds with probability ``q`` and the output is renormalised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import qcore
from .assemblages import Assemblage, Scenario

_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class OneWayLoccMap:
    """``kraus[w]`` lists Kraus operators of instrument branch ``w``.

    ``input_policy[w, x_out, x]`` is ``p(x | x_out, w)`` and
    ``output_policy[w, x_out, a, a_out]`` is ``p(a_out | a, x_out, w)``.
    """

    kraus: tuple[tuple[np.ndarray, ...], ...]
    input_policy: np.ndarray = field(repr=False)
    output_policy: np.ndarray = field(repr=False)

    def __post_init__(self):
        kraus = tuple(tuple(qcore.as_cmatrix(k) for k in branch) for branch in self.kraus)
        if not kraus or any(not b for b in kraus):
            raise ValueError("every instrument branch needs at least one Kraus operator")
        d_in = kraus[0][0].shape[1]
        if any(k.shape[1] != d_in for b in kraus for k in b):
            raise ValueError("Kraus operators disagree on the input dimension")
        n_w = len(kraus)
        ip = np.asarray(self.input_policy, dtype=float)
        op = np.asarray(self.output_policy, dtype=float)
        if ip.ndim != 3 or ip.shape[0] != n_w:
            raise ValueError("input_policy must have shape (branches, x_out, x)")
        if op.ndim != 4 or op.shape[:2] != (n_w, ip.shape[1]):
            raise ValueError("output_policy must have shape (branches, x_out, a, a_out)")
        for name, pol in (("input", ip), ("output", op)):
            if np.any(pol < -_TOL) or np.max(np.abs(pol.sum(axis=-1) - 1)) > _TOL:
                raise ValueError(f"{name} policy is not a conditional distribution")
        total = sum(qcore.dagger(k) @ k for b in kraus for k in b)
        if qcore.min_eig(np.eye(d_in) - total) < -_TOL:
            raise ValueError("instrument is trace-increasing")
        object.__setattr__(self, "kraus", kraus)
        object.__setattr__(self, "input_policy", ip)
        object.__setattr__(self, "output_policy", op)

    @property
    def dim_in(self) -> int:
        return self.kraus[0][0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0][0].shape[0]

    @property
    def deterministic(self) -> bool:
        total = sum(qcore.dagger(k) @ k for b in self.kraus for k in b)
        return bool(np.max(np.abs(total - np.eye(self.dim_in))) <= _TOL)

    def branch(self, w: int, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ qcore.dagger(k) for k in self.kraus[w])


def identity_map(n_inputs: int, n_outputs: int, dim: int) -> OneWayLoccMap:
    ip = np.eye(n_inputs)[None]
    op = np.broadcast_to(np.eye(n_outputs), (n_inputs, n_outputs, n_outputs))[None]
    return OneWayLoccMap(((np.eye(dim),),), ip, op)


def apply_1wlocc(m: OneWayLoccMap, a: Assemblage) -> tuple[Assemblage, float]:
    """Return the post-selected output assemblage and the success probability."""
    sc = a.scenario
    if sc.n_alices != 1:
        raise ValueError("one-way LOCC maps act on bipartite assemblages")
    if m.dim_in != sc.bob_dim:
        raise ValueError(f"map acts on dimension {m.dim_in}, assemblage has {sc.bob_dim}")
    n_w, n_xo, n_x = m.input_policy.shape
    _, _, n_a, n_ao = m.output_policy.shape
    if n_x != sc.n_inputs[0] or n_a != sc.n_outputs[0]:
        raise ValueError("policies do not match the assemblage's input/output cardinalities")
    # the success probability is x-independent because Bob's marginal is
    rho_b = a.bob_marginal(0)
    q = float(sum(np.trace(m.branch(w, rho_b)).real for w in range(n_w)))
    if q <= _TOL:
        raise ValueError("the map succeeds with zero probability on this assemblage")
    d = m.dim_out
    out = np.zeros((n_ao, n_xo, d, d), dtype=complex)
    for w in range(n_w):
        mapped = np.array([[m.branch(w, a.elements[ai, xi]) for xi in range(n_x)] for ai in range(n_a)])
        # sum_{a,x} p(x|x',w) p(a'|a,x',w) E_w(sigma[a|x])
        out += np.einsum("ox,oab,axij->boij", m.input_policy[w], m.output_policy[w], mapped)
    return Assemblage(Scenario.bipartite(n_xo, n_ao, d), out / q), q


def _check_theta(theta: float) -> None:
    if not 0 < theta <= math.pi / 4 + 1e-15:
        raise ValueError(f"theta must lie in (0, pi/4], got {theta}")


def appendixF_stochastic(theta: float) -> OneWayLoccMap:
    """Single filter ``cos(theta)|0><0| + sin(theta)|1><1|`` with trivial policies.

    Turns the maximally entangled assemblage into the ``theta`` member with
    probability 1/2.
    """
    _check_theta(theta)
    m0 = np.diag([math.cos(theta), math.sin(theta)]).astype(complex)
    return OneWayLoccMap(((m0,),), np.eye(2)[None], np.broadcast_to(np.eye(2), (2, 2, 2))[None])


def appendixF_deterministic(theta: float) -> OneWayLoccMap:
    """Complete two-outcome version of :func:`appendixF_stochastic`.

    The second outcome applies ``sin(theta)|1><0| + cos(theta)|0><1|``; Alice
    keeps her input and flips her output for input 0 when it occurs.
    """
    _check_theta(theta)
    c, s = math.cos(theta), math.sin(theta)
    m0 = np.array([[c, 0], [0, s]], dtype=complex)
    m1 = np.array([[0, c], [s, 0]], dtype=complex)
    ip = np.stack([np.eye(2), np.eye(2)])
    op = np.zeros((2, 2, 2, 2))
    for w in range(2):
        for xo in range(2):
            for aa in range(2):
                op[w, xo, aa, aa ^ (xo * w) ^ w] = 1.0
    return OneWayLoccMap(((m0,), (m1,)), ip, op)


def kraus_completeness(m: OneWayLoccMap) -> np.ndarray:
    """``sum_w sum_k K^dagger K`` (equal to the identity iff deterministic)."""
    return sum(qcore.dagger(k) @ k for b in m.kraus for k in b)


__all__: Sequence[str] = [
    "OneWayLoccMap",
    "apply_1wlocc",
    "appendixF_deterministic",
    "appendixF_stochastic",
    "identity_map",
    "kraus_completeness",
]
