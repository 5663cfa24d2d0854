"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` complex arrays, row-major, 0-based.  Every
predicate takes an explicit tolerance; the package-wide default is
``DEFAULT_TOL = 1e-9``.
"""

from __future__ import annotations

from functools import reduce
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-9

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


class DimensionError(ValueError):
    pass


def as_cmatrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def is_hermitian(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return bool(np.max(np.abs(m - dagger(m)), initial=0.0) <= tol)


def hermitize(m: np.ndarray) -> np.ndarray:
    """Return ``(M + M^dagger) / 2``."""
    m = np.asarray(m, dtype=complex)
    return 0.5 * (m + dagger(m))


def min_eig(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(hermitize(m))[0])


def is_psd(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    return is_hermitian(m, tol) and min_eig(m) >= -tol


def tensor(*ms: np.ndarray) -> np.ndarray:
    """Kronecker product of the arguments, left to right."""
    if not ms:
        raise ValueError("tensor() needs at least one matrix")
    return reduce(np.kron, (np.asarray(m, dtype=complex) for m in ms))


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(vec: Sequence[complex]) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    return np.outer(v, np.conj(v))


def partial_trace(m: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    ``dims`` lists subsystem dimensions in tensor order.  Kept subsystems stay
    in their original relative order.
    """
    m = as_cmatrix(m)
    dims = [int(d) for d in dims]
    keep = sorted(set(int(k) for k in keep))
    total = int(np.prod(dims))
    if m.shape != (total, total):
        raise DimensionError(f"dims {dims} do not match matrix shape {m.shape}")
    if not keep:
        raise ValueError("keep must be nonempty; use np.trace for the full trace")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise ValueError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    t = m.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # trace pairs from the highest axis down so earlier axis numbers stay valid
    for count, i in enumerate(sorted(traced, reverse=True)):
        cur_n = n - count
        t = np.trace(t, axis1=i, axis2=i + cur_n)
    kd = int(np.prod([dims[k] for k in keep]))
    return t.reshape(kd, kd)


def transpose_entrywise(m: np.ndarray) -> np.ndarray:
    m = as_cmatrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"transpose_entrywise needs a square matrix, got {m.shape}")
    return m.T.copy()


def real_embed(h: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Map Hermitian ``h`` to the real symmetric ``[[Re h, -Im h], [Im h, Re h]]``.

    The embedding is PSD iff ``h`` is, and each eigenvalue of ``h`` appears
    twice in it.
    """
    h = as_cmatrix(h)
    if not is_hermitian(h, tol):
        raise ValueError("real_embed expects a Hermitian matrix")
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def real_unembed(s: np.ndarray) -> np.ndarray:
    """Inverse of :func:`real_embed`, averaging the redundant copies."""
    s = np.asarray(s, dtype=float)
    n = s.shape[0] // 2
    re = 0.5 * (s[:n, :n] + s[n:, n:])
    im = 0.5 * (s[n:, :n] - s[:n, n:])
    return hermitize(re + 1j * im)


def choi_apply(w: np.ndarray, sigma: np.ndarray, dim_in: int, dim_out: int) -> np.ndarray:
    """Apply the map with Choi matrix ``w`` (ordering out ⊗ in) to ``sigma``.

    Implements ``d * tr_in[ w (I_out ⊗ sigma^T) ]`` with ``d = dim_in``.
    """
    w4 = np.asarray(w, dtype=complex).reshape(dim_out, dim_in, dim_out, dim_in)
    return dim_in * np.einsum("ikjl,kl->ij", w4, np.asarray(sigma, dtype=complex))


def channel_choi(kraus: Sequence[np.ndarray], dim_in: int) -> np.ndarray:
    """Normalized Choi matrix (out ⊗ in) of the map with the given Kraus operators.

    Normalized so that ``choi_apply`` reproduces the map.
    """
    dim_out = np.asarray(kraus[0]).shape[0]
    w = np.zeros((dim_out * dim_in, dim_out * dim_in), dtype=complex)
    for k in kraus:
        # |K>> = sum_j K|j> ⊗ |j>, i.e. the row-major flattening of K
        v = np.asarray(k, dtype=complex).reshape(-1)
        w += np.outer(v, np.conj(v))
    return w / dim_in


def matrix_to_json(m: np.ndarray) -> dict:
    m = as_cmatrix(m)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"matrix object needs 're' and 'im' arrays: {exc}") from None
    if re.shape != im.shape or re.ndim != 2:
        raise ValueError(f"matrix 're'/'im' shapes disagree or are not 2-d: {re.shape} vs {im.shape}")
    return re + 1j * im
