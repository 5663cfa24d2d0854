"""Deterministic classical strategies indexing the hidden variable in every SDP.

All enumerations are lexicographic over their lookup tables and therefore
reproducible; a strategy is referred to by its position in the list.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

A1_TO_A2 = "A1->A2"
A2_TO_A1 = "A2->A1"


@dataclass(frozen=True)
class DetComb:
    """Input relabelling ``g: X' -> X`` and output map ``f: A x X' -> A'``.

    ``f`` is stored flattened with index ``a * |X'| + x'``.
    """

    n_x: int
    n_a: int
    n_x_out: int
    n_a_out: int
    g: tuple[int, ...]
    f: tuple[int, ...]

    def __post_init__(self):
        if len(self.g) != self.n_x_out or any(not 0 <= v < self.n_x for v in self.g):
            raise ValueError(f"input map {self.g} is not a total map into range({self.n_x})")
        if len(self.f) != self.n_a * self.n_x_out or any(not 0 <= v < self.n_a_out for v in self.f):
            raise ValueError(f"output map {self.f} is not a total map into range({self.n_a_out})")

    def input_for(self, x_out: int) -> int:
        return self.g[x_out]

    def output_for(self, a: int, x_out: int) -> int:
        return self.f[a * self.n_x_out + x_out]

    def transfer(self) -> np.ndarray:
        """0/1 array ``T[a', x', a, x] = [f(a,x') = a'] [g(x') = x]``."""
        t = np.zeros((self.n_a_out, self.n_x_out, self.n_a, self.n_x))
        for xo in range(self.n_x_out):
            x = self.g[xo]
            for a in range(self.n_a):
                t[self.output_for(a, xo), xo, a, x] = 1.0
        return t

    def apply(self, p: np.ndarray) -> np.ndarray:
        """Post-process a conditional distribution ``p[a, x]`` into ``p'[a', x']``."""
        return np.einsum("ijkl,kl->ij", self.transfer(), np.asarray(p, dtype=float))

    def canonical(self) -> str:
        return f"g:[{','.join(map(str, self.g))}];f:[{','.join(map(str, self.f))}]"

    @classmethod
    def from_canonical(cls, text: str, n_x: int, n_a: int, n_x_out: int, n_a_out: int) -> "DetComb":
        try:
            g_part, f_part = text.split(";")
            g = _parse_table(g_part, "g")
            f = _parse_table(f_part, "f")
        except ValueError as exc:
            raise ValueError(f"malformed comb encoding {text!r}: {exc}") from None
        return cls(n_x, n_a, n_x_out, n_a_out, g, f)


def _parse_table(part: str, tag: str) -> tuple[int, ...]:
    head, _, body = part.partition(":")
    if head.strip() != tag or not body.startswith("[") or not body.endswith("]"):
        raise ValueError(f"expected '{tag}:[..]'")
    inner = body[1:-1].strip()
    return tuple(int(v) for v in inner.split(",")) if inner else ()


def enumerate_combs(scenario_in: tuple[int, int], scenario_out: tuple[int, int]) -> list[DetComb]:
    """All deterministic combs from ``(|X|, |A|)`` to ``(|X'|, |A'|)``.

    There are ``|X|**|X'| * |A'|**(|A| |X'|)`` of them, ordered with the
    input map as the major key.
    """
    n_x, n_a = scenario_in
    n_xo, n_ao = scenario_out
    if min(n_x, n_a, n_xo, n_ao) < 1:
        raise ValueError("cardinalities must be >= 1")
    return [
        DetComb(n_x, n_a, n_xo, n_ao, g, f)
        for g in itertools.product(range(n_x), repeat=n_xo)
        for f in itertools.product(range(n_ao), repeat=n_a * n_xo)
    ]


def joint_transfer(combs: Sequence[DetComb]) -> np.ndarray:
    """Transfer matrix of independent per-Alice combs on flattened indices.

    Rows index ``(a'-tuple, x'-tuple)`` and columns ``(a-tuple, x-tuple)``,
    each flattened as ``a_index * n_x + x_index`` with mixed-radix tuples.
    """
    k = len(combs)
    ts = [c.transfer() for c in combs]
    # per-Alice axes (a', x', a, x) -> joint (a'_1..a'_k, x'_1..x'_k, a_1..a_k, x_1..x_k)
    letters = iter("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
    ax = [[next(letters) for _ in range(4)] for _ in range(k)]
    lhs = ",".join("".join(a) for a in ax)
    rhs = "".join(a[0] for a in ax) + "".join(a[1] for a in ax) + "".join(a[2] for a in ax) + "".join(a[3] for a in ax)
    joint = np.einsum(f"{lhs}->{rhs}", *ts)
    rows = math.prod(c.n_a_out * c.n_x_out for c in combs)
    return joint.reshape(rows, -1)


def enumerate_comb_tuples(per_alice: Sequence[list[DetComb]]) -> list[tuple[DetComb, ...]]:
    return list(itertools.product(*per_alice))


def canonical_tuple(combs: Sequence[DetComb]) -> str:
    return "|".join(c.canonical() for c in combs)


@dataclass(frozen=True)
class DetResponse:
    """Deterministic response ``a = r(x)``."""

    n_a: int
    r: tuple[int, ...]

    def __post_init__(self):
        if any(not 0 <= v < self.n_a for v in self.r):
            raise ValueError(f"response {self.r} out of range({self.n_a})")

    @property
    def n_x(self) -> int:
        return len(self.r)

    def table(self) -> np.ndarray:
        d = np.zeros((self.n_a, self.n_x))
        d[list(self.r), range(self.n_x)] = 1.0
        return d


def enumerate_responses(n_x: int, n_a: int) -> list[DetResponse]:
    if n_x < 1 or n_a < 1:
        raise ValueError("cardinalities must be >= 1")
    return [DetResponse(n_a, r) for r in itertools.product(range(n_a), repeat=n_x)]


def product_table(responses: Sequence[DetResponse]) -> np.ndarray:
    """``D[a_index, x_index]`` for independent per-Alice responses."""
    return reduce(np.kron, (r.table() for r in responses))


@dataclass(frozen=True)
class DetSignalling:
    """Two-Alice deterministic strategy with one-way signalling.

    For ``A1->A2``: ``a1 = first[x1]`` and ``a2 = second[x1 * |X2| + x2]``.
    For ``A2->A1`` the roles swap: ``a2 = first[x2]`` and
    ``a1 = second[x2 * |X1| + x1]``.
    """

    direction: str
    n_x1: int
    n_a1: int
    n_x2: int
    n_a2: int
    first: tuple[int, ...]
    second: tuple[int, ...]

    def __post_init__(self):
        if self.direction == A1_TO_A2:
            ok = (len(self.first) == self.n_x1 and all(0 <= v < self.n_a1 for v in self.first)
                  and len(self.second) == self.n_x1 * self.n_x2 and all(0 <= v < self.n_a2 for v in self.second))
        elif self.direction == A2_TO_A1:
            ok = (len(self.first) == self.n_x2 and all(0 <= v < self.n_a2 for v in self.first)
                  and len(self.second) == self.n_x1 * self.n_x2 and all(0 <= v < self.n_a1 for v in self.second))
        else:
            raise ValueError(f"unknown direction {self.direction!r}")
        if not ok:
            raise ValueError("signalling tables are not total or out of range")

    def outputs(self, x1: int, x2: int) -> tuple[int, int]:
        if self.direction == A1_TO_A2:
            return self.first[x1], self.second[x1 * self.n_x2 + x2]
        return self.second[x2 * self.n_x1 + x1], self.first[x2]

    def table(self) -> np.ndarray:
        d = np.zeros((self.n_a1 * self.n_a2, self.n_x1 * self.n_x2))
        for x1 in range(self.n_x1):
            for x2 in range(self.n_x2):
                a1, a2 = self.outputs(x1, x2)
                d[a1 * self.n_a2 + a2, x1 * self.n_x2 + x2] = 1.0
        return d


def enumerate_signalling(n_x1: int, n_a1: int, n_x2: int, n_a2: int, direction: str) -> list[DetSignalling]:
    if direction == A1_TO_A2:
        firsts = itertools.product(range(n_a1), repeat=n_x1)
        seconds = list(itertools.product(range(n_a2), repeat=n_x1 * n_x2))
    elif direction == A2_TO_A1:
        firsts = itertools.product(range(n_a2), repeat=n_x2)
        seconds = list(itertools.product(range(n_a1), repeat=n_x1 * n_x2))
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return [
        DetSignalling(direction, n_x1, n_a1, n_x2, n_a2, f, s)
        for f in firsts
        for s in seconds
    ]
