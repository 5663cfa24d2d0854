"""Assemblages: collections of unnormalised conditional states of Bob.

Outcome and input tuples are flattened to mixed-radix integers with
Alice 1 as the most significant digit, which is the order produced by
``itertools.product`` over the per-Alice ranges.  Elements live in a
read-only array indexed ``[a_index, x_index, :, :]``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import qcore
from .qcore import DEFAULT_TOL, DimensionError


@dataclass(frozen=True)
class Scenario:
    n_inputs: tuple[int, ...]
    n_outputs: tuple[int, ...]
    bob_dim: int

    def __post_init__(self):
        object.__setattr__(self, "n_inputs", tuple(int(v) for v in self.n_inputs))
        object.__setattr__(self, "n_outputs", tuple(int(v) for v in self.n_outputs))
        if len(self.n_inputs) != len(self.n_outputs) or not self.n_inputs:
            raise ValueError("need matching, nonempty per-Alice input and output cardinalities")
        if min(self.n_inputs) < 1 or min(self.n_outputs) < 1:
            raise ValueError("cardinalities must be >= 1")
        if int(self.bob_dim) < 1:
            raise ValueError("bob_dim must be >= 1")

    @classmethod
    def bipartite(cls, n_inputs: int, n_outputs: int, bob_dim: int) -> "Scenario":
        return cls((n_inputs,), (n_outputs,), bob_dim)

    @property
    def n_alices(self) -> int:
        return len(self.n_inputs)

    @property
    def n_a(self) -> int:
        return math.prod(self.n_outputs)

    @property
    def n_x(self) -> int:
        return math.prod(self.n_inputs)

    def a_tuples(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(n) for n in self.n_outputs)))

    def x_tuples(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(n) for n in self.n_inputs)))

    def a_index(self, a: Sequence[int] | int) -> int:
        return _mixed_radix(a, self.n_outputs)

    def x_index(self, x: Sequence[int] | int) -> int:
        return _mixed_radix(x, self.n_inputs)

    def to_json(self) -> dict:
        return {
            "n_alices": self.n_alices,
            "n_inputs": list(self.n_inputs),
            "n_outputs": list(self.n_outputs),
            "bob_dim": self.bob_dim,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Scenario":
        try:
            sc = cls(tuple(obj["n_inputs"]), tuple(obj["n_outputs"]), int(obj["bob_dim"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"scenario: malformed field ({exc})") from None
        if "n_alices" in obj and int(obj["n_alices"]) != sc.n_alices:
            raise ValueError("scenario: n_alices disagrees with the cardinality lists")
        return sc


def _mixed_radix(digits, radices) -> int:
    if isinstance(digits, (int, np.integer)):
        if not 0 <= digits < math.prod(radices):
            raise IndexError(f"index {digits} out of range")
        return int(digits)
    digits = tuple(digits)
    if len(digits) != len(radices):
        raise IndexError(f"tuple {digits} has wrong length for radices {radices}")
    idx = 0
    for d, r in zip(digits, radices):
        if not 0 <= d < r:
            raise IndexError(f"digit {d} out of range {r}")
        idx = idx * r + int(d)
    return idx


@dataclass(frozen=True, eq=False)
class Assemblage:
    scenario: Scenario
    elements: np.ndarray = field(repr=False)

    def __post_init__(self):
        sc = self.scenario
        arr = np.array(self.elements, dtype=complex)
        expected = (sc.n_a, sc.n_x, sc.bob_dim, sc.bob_dim)
        if arr.shape != expected:
            raise DimensionError(f"elements have shape {arr.shape}, expected {expected}")
        arr.setflags(write=False)
        object.__setattr__(self, "elements", arr)

    def element(self, a, x) -> np.ndarray:
        return self.elements[self.scenario.a_index(a), self.scenario.x_index(x)]

    def bob_marginal(self, x) -> np.ndarray:
        return self.elements[:, self.scenario.x_index(x)].sum(axis=0)

    def max_diff(self, other: "Assemblage") -> float:
        if other.scenario != self.scenario:
            return float("inf")
        return float(np.max(np.abs(self.elements - other.elements)))

    def allclose(self, other: "Assemblage", tol: float = 1e-9) -> bool:
        return self.max_diff(other) <= tol

    def to_json(self) -> dict:
        sc = self.scenario
        return {
            "scenario": sc.to_json(),
            "elements": [
                {"a": list(a), "x": list(x), "matrix": qcore.matrix_to_json(self.element(a, x))}
                for a in sc.a_tuples()
                for x in sc.x_tuples()
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Assemblage":
        if not isinstance(obj, dict) or "scenario" not in obj or "elements" not in obj:
            raise ValueError("assemblage JSON needs 'scenario' and 'elements'")
        sc = Scenario.from_json(obj["scenario"])
        arr = np.zeros((sc.n_a, sc.n_x, sc.bob_dim, sc.bob_dim), dtype=complex)
        seen = set()
        for i, el in enumerate(obj["elements"]):
            try:
                ai, xi = sc.a_index(tuple(el["a"])), sc.x_index(tuple(el["x"]))
                m = qcore.matrix_from_json(el["matrix"])
            except (KeyError, TypeError, IndexError, ValueError) as exc:
                raise ValueError(f"elements[{i}]: {exc}") from None
            if m.shape != (sc.bob_dim, sc.bob_dim):
                raise ValueError(f"elements[{i}]: matrix shape {m.shape} != bob_dim {sc.bob_dim}")
            if (ai, xi) in seen:
                raise ValueError(f"elements[{i}]: duplicate entry for a={el['a']} x={el['x']}")
            seen.add((ai, xi))
            arr[ai, xi] = m
        if len(seen) != sc.n_a * sc.n_x:
            raise ValueError(f"assemblage JSON lists {len(seen)} of {sc.n_a * sc.n_x} elements")
        return cls(sc, arr)


@dataclass(frozen=True, eq=False)
class Povm:
    effects: tuple[np.ndarray, ...]

    def __post_init__(self):
        effects = tuple(qcore.as_cmatrix(e) for e in self.effects)
        if not effects:
            raise ValueError("POVM needs at least one effect")
        dim = effects[0].shape[0]
        for e in effects:
            if e.shape != (dim, dim):
                raise DimensionError("POVM effects must be square and equal-sized")
            if not qcore.is_psd(e, DEFAULT_TOL):
                raise ValueError("POVM effect is not PSD")
        if np.max(np.abs(sum(effects) - np.eye(dim))) > DEFAULT_TOL:
            raise ValueError("POVM effects do not sum to the identity")
        object.__setattr__(self, "effects", effects)

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    @classmethod
    def from_basis(cls, vectors: Sequence[Sequence[complex]]) -> "Povm":
        return cls(tuple(qcore.projector(v) for v in vectors))


def pauli_zx_povms() -> list[Povm]:
    """Input 0 measures in the sigma_z basis, input 1 in the sigma_x basis."""
    s = 1 / math.sqrt(2)
    return [
        Povm.from_basis([[1, 0], [0, 1]]),
        Povm.from_basis([[s, s], [s, -s]]),
    ]


def _check_state(rho: np.ndarray, dim: int) -> np.ndarray:
    rho = qcore.as_cmatrix(rho)
    if rho.shape != (dim, dim):
        raise DimensionError(f"state has shape {rho.shape}, expected {(dim, dim)}")
    if not qcore.is_psd(rho, DEFAULT_TOL):
        raise ValueError("state is not PSD")
    if abs(np.trace(rho) - 1) > DEFAULT_TOL:
        raise ValueError("state does not have unit trace")
    return rho


def realize_multipartite(rho, povms_per_alice: Sequence[Sequence[Povm]], bob_dim: int) -> Assemblage:
    """Assemblage from measuring each Alice's share of ``rho`` (Alices first, Bob last)."""
    if not povms_per_alice or any(not p for p in povms_per_alice):
        raise ValueError("every Alice needs at least one POVM")
    alice_dims = []
    for povms in povms_per_alice:
        dims = {p.dim for p in povms}
        if len(dims) != 1:
            raise DimensionError("one Alice's POVMs act on different dimensions")
        alice_dims.append(dims.pop())
    dims = alice_dims + [bob_dim]
    rho = _check_state(rho, math.prod(dims))
    sc = Scenario(
        tuple(len(p) for p in povms_per_alice),
        tuple(len(p[0].effects) for p in povms_per_alice),
        bob_dim,
    )
    for povms in povms_per_alice:
        if len({len(p.effects) for p in povms}) != 1:
            raise ValueError("all POVMs of one Alice must have the same number of outcomes")
    k = len(povms_per_alice)
    arr = np.zeros((sc.n_a, sc.n_x, bob_dim, bob_dim), dtype=complex)
    eye_b = np.eye(bob_dim)
    for ai, a in enumerate(sc.a_tuples()):
        for xi, x in enumerate(sc.x_tuples()):
            op = qcore.tensor(*(povms_per_alice[i][x[i]].effects[a[i]] for i in range(k)), eye_b)
            arr[ai, xi] = qcore.partial_trace(op @ rho, dims, keep=[k])
    return Assemblage(sc, arr)


def realize_bipartite(rho, alice_povms: Sequence[Povm], bob_dim: int) -> Assemblage:
    return realize_multipartite(rho, [alice_povms], bob_dim)


def _check_theta(theta: float) -> None:
    if not 0 < theta <= math.pi / 4 + 1e-15:
        raise ValueError(f"theta must lie in (0, pi/4], got {theta}")


def ghz_vector(n_parties: int, theta: float) -> np.ndarray:
    v = np.zeros(2 ** n_parties, dtype=complex)
    v[0] = math.cos(theta)
    v[-1] = math.sin(theta)
    return v


def family_S(theta: float, p: float) -> Assemblage:
    """Partially entangled two-qubit assemblage mixed with white noise.

    Elements are ``p * sigma_theta[a|x] + (1 - p) * I/4``.
    """
    _check_theta(theta)
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    pure = realize_bipartite(qcore.projector(ghz_vector(2, theta)), pauli_zx_povms(), 2)
    return Assemblage(pure.scenario, p * pure.elements + (1 - p) * np.eye(2) / 4)


def family_GHZ(n_parties: int, theta: float) -> Assemblage:
    """GHZ-type state measured by ``n_parties - 1`` Alices in the z/x bases."""
    if int(n_parties) != n_parties or n_parties < 2:
        raise ValueError(f"n_parties must be an integer >= 2, got {n_parties}")
    _check_theta(theta)
    rho = qcore.projector(ghz_vector(n_parties, theta))
    return realize_multipartite(rho, [pauli_zx_povms()] * (n_parties - 1), 2)


def mix(first: Assemblage, second: Assemblage, weight: float) -> Assemblage:
    """``weight * first + (1 - weight) * second``."""
    if first.scenario != second.scenario:
        raise ValueError("cannot mix assemblages of different scenarios")
    return Assemblage(first.scenario, weight * first.elements + (1 - weight) * second.elements)


def random_quantum_assemblage(scenario: Scenario, rng: np.random.Generator) -> Assemblage:
    """Random pure state measured with random projective measurements.

    Each Alice holds a system of dimension equal to her outcome count.
    """
    dims = list(scenario.n_outputs) + [scenario.bob_dim]
    total = math.prod(dims)
    v = rng.normal(size=total) + 1j * rng.normal(size=total)
    v /= np.linalg.norm(v)
    povms = []
    for n_x, n_a in zip(scenario.n_inputs, scenario.n_outputs):
        per = []
        for _ in range(n_x):
            z = rng.normal(size=(n_a, n_a)) + 1j * rng.normal(size=(n_a, n_a))
            q, _ = np.linalg.qr(z)
            per.append(Povm.from_basis(q.T))
        povms.append(per)
    return realize_multipartite(qcore.projector(v), povms, scenario.bob_dim)


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str
    deviation: float


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def summary(self) -> str:
        if self.ok:
            return "valid"
        return "\n".join(f"{v.kind}: {v.detail} (deviation {v.deviation:.3e})" for v in self.violations)


def validate(a: Assemblage, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Report every violated assemblage invariant with its size."""
    sc = a.scenario
    report = ValidationReport()
    els = a.elements
    for ai, at in enumerate(sc.a_tuples()):
        for xi, xt in enumerate(sc.x_tuples()):
            m = els[ai, xi]
            herm = float(np.max(np.abs(m - qcore.dagger(m))))
            if herm > tol:
                report.violations.append(Violation("hermiticity", f"a={at} x={xt}", herm))
            ev = qcore.min_eig(m)
            if ev < -tol:
                report.violations.append(Violation("positivity", f"a={at} x={xt}", -ev))
    traces = np.real(np.einsum("axii->x", els))
    for xi, xt in enumerate(sc.x_tuples()):
        dev = abs(traces[xi] - 1.0)
        if dev > tol:
            report.violations.append(Violation("normalization", f"x={xt}", float(dev)))
    marg = els.sum(axis=0)
    dev = float(np.max(np.abs(marg - marg[0])))
    if dev > tol:
        report.violations.append(Violation("no-signalling", "Bob's reduced state depends on x", dev))
    # per-Alice consistency: summing out Alice i's outcome removes dependence on x_i
    shape = tuple(sc.n_outputs) + tuple(sc.n_inputs) + (sc.bob_dim, sc.bob_dim)
    t = els.reshape(shape)
    k = sc.n_alices
    if k > 1:
        for i in range(k):
            summed = t.sum(axis=i)
            xaxis = k - 1 + i
            ref = np.take(summed, [0], axis=xaxis)
            dev = float(np.max(np.abs(summed - ref)))
            if dev > tol:
                report.violations.append(
                    Violation("no-signalling", f"marginal of other Alices depends on x of Alice {i + 1}", dev)
                )
    return report
