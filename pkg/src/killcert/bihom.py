"""Polynomials on R^N x R^N homogeneous of degree 2 in X and degree 2 in P.

A polynomial is stored as its monomial coefficients: entry [(i,j), (k,l)]
with i <= j and k <= l is the coefficient of X_i X_j P_k P_l.  Every
polynomial function has exactly one such table, so identity testing is a
coefficient comparison, no sampling involved.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from .linalg import MatR
from .scalars import rat_str


def _pairs(N: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(N) for j in range(i, N)]


class Bihom22:
    __slots__ = ("dim", "coeffs")

    def __init__(self, dim: int, coeffs: np.ndarray | None = None):
        npairs = dim * (dim + 1) // 2
        if coeffs is None:
            coeffs = np.full((npairs, npairs), Fraction(0), dtype=object)
        if coeffs.shape != (npairs, npairs):
            raise ValueError("coefficient table has the wrong shape")
        self.dim = dim
        self.coeffs = coeffs

    @classmethod
    def zero(cls, dim: int) -> "Bihom22":
        return cls(dim)

    @classmethod
    def from_skew_pairs(cls, pairs: Sequence[tuple[MatR, MatR]], dim: int | None = None) -> "Bihom22":
        """Coefficient table of (X, P) -> sum <M X, P><M' X, P>."""
        if dim is None:
            if not pairs:
                raise ValueError("dim is required for an empty pair list")
            dim = pairs[0][0].rows
        N = dim
        for M, Mp in pairs:
            for A in (M, Mp):
                if (A.rows, A.cols) != (N, N):
                    raise ValueError(f"expected {N}x{N} matrices, got {A.rows}x{A.cols}")
        if not pairs:
            return cls(N)
        # clear denominators once, then work with integers
        den = 1
        for M, Mp in pairs:
            for A in (M, Mp):
                for r in A.data:
                    for v in r:
                        den = math.lcm(den, v.denominator)
        m = _int_stack([M for M, _ in pairs], den)
        mp = _int_stack([Mp for _, Mp in pairs], den)
        bound = int(np.abs(m).max()) * int(np.abs(mp).max()) * 4 * len(pairs) if m.dtype != object else None
        if bound is None or bound >= 2 ** 62:
            m, mp = m.astype(object), mp.astype(object)
        # T[a, b, c, d] = sum_p M_p[c, a] * M'_p[d, b]
        T = np.einsum("pca,pdb->abcd", m, mp)
        U = T + T.transpose(1, 0, 2, 3) + T.transpose(0, 1, 3, 2) + T.transpose(1, 0, 3, 2)
        pr = _pairs(N)
        ii = np.array([p[0] for p in pr])
        jj = np.array([p[1] for p in pr])
        table = U[ii[:, None], jj[:, None], ii[None, :], jj[None, :]]
        mult = np.where(ii == jj, 2, 1)
        div = np.multiply.outer(mult, mult) * den * den
        coeffs = np.full(table.shape, Fraction(0), dtype=object)
        for a, b in zip(*np.nonzero(table)):
            coeffs[a, b] = Fraction(int(table[a, b]), int(div[a, b]))
        return cls(N, coeffs)

    def __add__(self, other: "Bihom22") -> "Bihom22":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return Bihom22(self.dim, self.coeffs + other.coeffs)

    def __sub__(self, other: "Bihom22") -> "Bihom22":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return Bihom22(self.dim, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "Bihom22":
        return Bihom22(self.dim, self.coeffs * Fraction(scalar))

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, Bihom22):
            return NotImplemented
        return self.dim == other.dim and bool(np.all(self.coeffs == other.coeffs))

    def is_zero(self) -> bool:
        return not any(c != 0 for c in self.coeffs.flat)

    def eval(self, X: Sequence, P: Sequence) -> Fraction:
        X = [Fraction(v) for v in X]
        P = [Fraction(v) for v in P]
        pr = _pairs(self.dim)
        xq = [X[i] * X[j] for i, j in pr]
        pq = [P[k] * P[l] for k, l in pr]
        total = Fraction(0)
        for a, xa in enumerate(xq):
            if not xa:
                continue
            row = self.coeffs[a]
            for b, pb in enumerate(pq):
                c = row[b]
                if c and pb:
                    total += c * xa * pb
        return total

    def nonzero_terms(self) -> int:
        return sum(1 for c in self.coeffs.flat if c != 0)

    def to_json(self) -> str:
        pr = _pairs(self.dim)
        terms = [
            [list(pr[a]), list(pr[b]), rat_str(self.coeffs[a, b])]
            for a, b in zip(*np.nonzero(self.coeffs != 0))
        ]
        return json.dumps({"dim": self.dim, "terms": terms})


def _int_stack(mats: Sequence[MatR], den: int) -> np.ndarray:
    vals = [[[int(v * den) for v in r] for r in M.data] for M in mats]
    big = max(abs(v) for M in vals for r in M for v in r)
    return np.array(vals, dtype=np.int64 if big < 2 ** 31 else object)
