"""Independent reference computations for the test-suite.

These deliberately avoid the package's SDP layer: every optimisation is
written directly in cvxpy with complex Hermitian variables and solved by
SCS, so agreement with the package checks the real embedding, the sparse
compiler and the Clarabel backend at once.  Running this file rewrites
``tests/data/frozen.json``; the tests only read that file.

    python3 tests/oracles.py
"""

from __future__ import annotations

import itertools
import json
import math
from pathlib import Path

import cvxpy as cp
import numpy as np

FROZEN = Path(__file__).with_name("data") / "frozen.json"

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)


def family_s_elements(theta: float, p: float) -> np.ndarray:
    """Explicit loop construction, independent of the package's partial trace."""
    psi = np.zeros(4, dtype=complex)
    psi[0], psi[3] = math.cos(theta), math.sin(theta)
    s = 1 / math.sqrt(2)
    bases = [np.eye(2), np.array([[s, s], [s, -s]])]
    out = np.zeros((2, 2, 2, 2), dtype=complex)
    for x in range(2):
        for a in range(2):
            v = bases[x][a]
            # Bob's unnormalised state: (<v| ⊗ I)|psi>
            bob = np.array([sum(np.conj(v[i]) * psi[2 * i + j] for i in range(2)) for j in range(2)])
            out[a, x] = p * np.outer(bob, np.conj(bob)) + (1 - p) * np.eye(2) / 4
    return out


def responses():
    return list(itertools.product(range(2), repeat=2))


def lhs_free_t(sig: np.ndarray) -> float:
    hs = [cp.Variable((2, 2), hermitian=True) for _ in responses()]
    t = cp.Variable()
    cons = [h >> 0 for h in hs]
    for a in range(2):
        for x in range(2):
            expr = sum(h for h, r in zip(hs, responses()) if r[x] == a) - sig[a, x]
            cons += [cp.abs(cp.real(expr)) <= t, cp.abs(cp.imag(expr)) <= t]
    norm = cp.real(sum(cp.trace(h) for h in hs)) - 1
    prob = cp.Problem(cp.Minimize(t), cons + [cp.abs(norm) <= t])
    prob.solve(solver=cp.SCS, eps=1e-9, max_iters=200000)
    return float(prob.value)


def weight(sig: np.ndarray) -> float:
    hs = [cp.Variable((2, 2), hermitian=True) for _ in responses()]
    cons = [h >> 0 for h in hs]
    for a in range(2):
        for x in range(2):
            cons.append(sig[a, x] - sum(h for h, r in zip(hs, responses()) if r[x] == a) >> 0)
    prob = cp.Problem(cp.Maximize(cp.real(sum(cp.trace(h) for h in hs))), cons)
    prob.solve(solver=cp.SCS, eps=1e-9, max_iters=200000)
    return 1 - float(prob.value)


def robustness(sig: np.ndarray) -> float:
    hs = [cp.Variable((2, 2), hermitian=True) for _ in responses()]
    cons = [h >> 0 for h in hs]
    for a in range(2):
        for x in range(2):
            cons.append(sum(h for h, r in zip(hs, responses()) if r[x] == a) - sig[a, x] >> 0)
    prob = cp.Problem(cp.Minimize(cp.real(sum(cp.trace(h) for h in hs))), cons)
    prob.solve(solver=cp.SCS, eps=1e-9, max_iters=200000)
    return float(prob.value) - 1


def combs():
    # (g, f) with g: x' -> x and f: (a, x') -> a', f flattened a*2 + x'
    return [(g, f) for g in itertools.product(range(2), repeat=2)
            for f in itertools.product(range(2), repeat=4)]


def _apply_choi(w, sigma):
    # 2 * tr_in[W (I ⊗ sigma^T)]
    return 2 * cp.partial_trace(w @ np.kron(np.eye(2), sigma.T), [2, 2], axis=1)


def _taus(src):
    out = []
    for g, f in combs():
        tau = np.zeros((2, 2, 2, 2), dtype=complex)
        for xo in range(2):
            for a in range(2):
                tau[f[a * 2 + xo], xo] += src[a, g[xo]]
        out.append(tau)
    return out


def conversion_t(src: np.ndarray, dst: np.ndarray) -> float:
    taus = _taus(src)
    ws = [cp.Variable((4, 4), hermitian=True) for _ in taus]
    qs = cp.Variable(len(taus), nonneg=True)
    t = cp.Variable()
    cons = [w >> 0 for w in ws]
    cons += [cp.partial_trace(w, [2, 2], axis=0) == qs[i] * np.eye(2) / 2 for i, w in enumerate(ws)]
    cons.append(cp.sum(qs) == 1)
    for a in range(2):
        for x in range(2):
            expr = sum(_apply_choi(w, tau[a, x]) for w, tau in zip(ws, taus) if np.any(tau[a, x]))
            diff = expr - dst[a, x]
            cons += [cp.abs(cp.real(diff)) <= t, cp.abs(cp.imag(diff)) <= t]
    prob = cp.Problem(cp.Minimize(t), cons)
    prob.solve(solver=cp.SCS, eps=1e-9, max_iters=400000)
    return float(prob.value)


def bipartite_operators(eta: float) -> np.ndarray:
    if abs(eta - math.pi / 4) < 1e-15:
        alpha = 0.0
    else:
        alpha = 2 / math.sqrt(1 + 2 * math.tan(2 * eta) ** 2)
    mu = math.atan(math.sin(2 * eta))
    b0 = math.cos(mu) * SZ + math.sin(mu) * SX
    b1 = math.cos(mu) * SZ - math.sin(mu) * SX
    f = np.zeros((2, 2, 2, 2), dtype=complex)
    for a in range(2):
        f[a, 0] = (-1) ** a * (alpha * np.eye(2) + b0 + b1)
        f[a, 1] = (-1) ** a * (b0 - b1)
    return f


def yield_value(src: np.ndarray, eta: float) -> float:
    f = bipartite_operators(eta)
    taus = _taus(src)
    ws = [cp.Variable((4, 4), hermitian=True) for _ in taus]
    qs = cp.Variable(len(taus), nonneg=True)
    cons = [w >> 0 for w in ws]
    cons += [cp.partial_trace(w, [2, 2], axis=0) == qs[i] * np.eye(2) / 2 for i, w in enumerate(ws)]
    cons.append(cp.sum(qs) == 1)
    obj = 0
    for a in range(2):
        for x in range(2):
            out = sum(_apply_choi(w, tau[a, x]) for w, tau in zip(ws, taus) if np.any(tau[a, x]))
            obj = obj + cp.real(cp.trace(f[a, x] @ out))
    prob = cp.Problem(cp.Maximize(obj), cons)
    prob.solve(solver=cp.SCS, eps=1e-9, max_iters=400000)
    return float(prob.value)


def no_signalling_max(eta: float) -> float:
    """Maximum of the bipartite functional over all no-signalling assemblages.

    For a qubit Bob every no-signalling assemblage has a quantum realisation,
    so this is the quantum maximum.
    """
    f = bipartite_operators(eta)
    sig = [[cp.Variable((2, 2), hermitian=True) for _ in range(2)] for _ in range(2)]
    cons = [s >> 0 for row in sig for s in row]
    cons.append(sig[0][0] + sig[1][0] == sig[0][1] + sig[1][1])
    cons.append(cp.real(cp.trace(sig[0][0] + sig[1][0])) == 1)
    obj = sum(cp.real(cp.trace(f[a, x] @ sig[a][x])) for a in range(2) for x in range(2))
    prob = cp.Problem(cp.Maximize(obj), cons)
    prob.solve(solver=cp.SCS, eps=1e-10, max_iters=200000)
    return float(prob.value)


GRID = [("pi/12", math.pi / 12), ("pi/6", math.pi / 6), ("pi/4", math.pi / 4)]
PS = [0.8, 0.9, 1.0]
CONVERSION_PAIRS = [
    (("pi/4", 1.0), ("pi/6", 0.8)),
    (("pi/12", 1.0), ("pi/4", 0.9)),
    (("pi/4", 1.0), ("pi/6", 1.0)),
    (("pi/6", 0.9), ("pi/4", 0.8)),
]


def freeze() -> dict:
    theta = dict(GRID)
    data = {"weight": {}, "robustness": {}, "lhs_t": {}, "yield_pi4": {}, "conversion_t": {}, "ns_max": {}}
    for label, th in GRID:
        for p in PS:
            key = f"{label};{p:g}"
            sig = family_s_elements(th, p)
            data["weight"][key] = weight(sig)
            data["robustness"][key] = robustness(sig)
            data["lhs_t"][key] = lhs_free_t(sig)
            data["yield_pi4"][key] = yield_value(sig, math.pi / 4)
    for (ls, ps), (ld, pd) in CONVERSION_PAIRS:
        key = f"{ls};{ps:g}->{ld};{pd:g}"
        data["conversion_t"][key] = conversion_t(family_s_elements(theta[ls], ps),
                                                 family_s_elements(theta[ld], pd))
    for label, th in GRID:
        data["ns_max"][label] = no_signalling_max(th)
    return data


if __name__ == "__main__":
    FROZEN.parent.mkdir(exist_ok=True)
    FROZEN.write_text(json.dumps(freeze(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {FROZEN}")
