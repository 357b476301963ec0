"""The Albert algebra H3(O) and quadratic Killing tensors on the Cayley plane.

Elements are stored as 27 exact coordinates (r1, r2, r3, x1[0:8], x2[0:8],
x3[0:8]) of the Hermitian matrix

    [[r1,  x3*, x2*],
     [x3,  r2,  x1 ],
     [x2,  x1*, r3 ]].

Bulk evaluations (tangent spaces, Killing momenta, K_A values at thousands
of sample points) go through the coefficient tensor of the symmetric
trilinear form, which is itself assembled from the inclusion-exclusion
polarisation of det3 and cached.
"""

from __future__ import annotations

import functools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .linalg import MatR, kernel_basis, rref_exact
from .scalars import ONE, ZERO, Oct, oct_conj, oct_mul, parse_rat, rat, rat_str

DIM = 27


class MembershipFailed(AssertionError):
    pass


class UnexpectedDimension(AssertionError):
    pass


@dataclass(frozen=True)
class H3O:
    r1: Fraction
    r2: Fraction
    r3: Fraction
    x1: Oct = ZERO
    x2: Oct = ZERO
    x3: Oct = ZERO

    def __post_init__(self):
        for name in ("r1", "r2", "r3"):
            object.__setattr__(self, name, rat(getattr(self, name)))

    # coordinates ------------------------------------------------------------
    def coords(self) -> tuple[Fraction, ...]:
        return (self.r1, self.r2, self.r3) + self.x1.coords + self.x2.coords + self.x3.coords

    @classmethod
    def from_coords(cls, c: Sequence) -> "H3O":
        c = [rat(v) for v in c]
        if len(c) != DIM:
            raise ValueError("H3O needs 27 coordinates")
        return cls(c[0], c[1], c[2], Oct(c[3:11]), Oct(c[11:19]), Oct(c[19:27]))

    @classmethod
    def basis(cls, k: int) -> "H3O":
        return cls.from_coords([1 if t == k else 0 for t in range(DIM)])

    @classmethod
    def zero(cls) -> "H3O":
        return cls(0, 0, 0)

    def matrix(self) -> list[list[Oct]]:
        return [
            [Oct.real(self.r1), oct_conj(self.x3), oct_conj(self.x2)],
            [self.x3, Oct.real(self.r2), self.x1],
            [self.x2, oct_conj(self.x1), Oct.real(self.r3)],
        ]

    def __add__(self, o: "H3O") -> "H3O":
        return H3O.from_coords([a + b for a, b in zip(self.coords(), o.coords())])

    def __sub__(self, o: "H3O") -> "H3O":
        return H3O.from_coords([a - b for a, b in zip(self.coords(), o.coords())])

    def __mul__(self, s) -> "H3O":
        s = rat(s)
        return H3O.from_coords([s * a for a in self.coords()])

    __rmul__ = __mul__

    def to_json(self) -> list[str]:
        return [rat_str(v) for v in self.coords()]

    @classmethod
    def from_json(cls, data) -> "H3O":
        return cls.from_coords([parse_rat(s) for s in data])


E = H3O(1, 0, 0)


def T_vec(y: Oct, z: Oct) -> H3O:
    """T(y, z): y in the (2,1) slot (x3), z in the (3,1) slot (x2)."""
    return H3O(0, 0, 0, ZERO, z, y)


# -- algebra ---------------------------------------------------------------------

def _matmul(A, B):
    return [[functools.reduce(lambda s, t: s + t, (oct_mul(A[i][j], B[j][k]) for j in range(3)))
             for k in range(3)] for i in range(3)]


def jordan(A: H3O, B: H3O) -> H3O:
    """A o B = (AB + BA) / 2 computed from the octonion matrix products."""
    MA, MB = A.matrix(), B.matrix()
    P, Q = _matmul(MA, MB), _matmul(MB, MA)
    S = [[P[i][k] + Q[i][k] for k in range(3)] for i in range(3)]
    for i in range(3):
        if any(S[i][i].coords[1:]):
            raise AssertionError("diagonal of AB + BA is not real")
    half = Fraction(1, 2)
    return H3O(S[0][0].re * half, S[1][1].re * half, S[2][2].re * half,
               S[1][2] * half, S[2][0] * half, S[1][0] * half)


def trace3(A: H3O) -> Fraction:
    return A.r1 + A.r2 + A.r3


def inner3(A: H3O, B: H3O) -> Fraction:
    """Tr(A o B) = sum r_i r_i' + 2 sum <x_i, x_i'>."""
    s = A.r1 * B.r1 + A.r2 * B.r2 + A.r3 * B.r3
    for x, y in ((A.x1, B.x1), (A.x2, B.x2), (A.x3, B.x3)):
        s += 2 * sum((a * b for a, b in zip(x.coords, y.coords)), Fraction(0))
    return s


# weights of the coordinate Gram matrix of inner3
GRAM = (1, 1, 1) + (2,) * 24


def det3(A: H3O) -> Fraction:
    """r1 r2 r3 + 2 Re(x1 x2 x3*) - r1|x1|^2 - r2|x2|^2 - r3|x3|^2.

    The cubic term is the real part of the cyclic product of off-diagonal
    entries M[0][1] M[1][2] M[2][0] = x3* x1 x2 of the matrix layout above;
    Re is cyclic, so this equals Re(x1 x2 x3*).  Writing Re(x1 x2 x3)
    instead only agrees when x3 is real, and then rank-one projectors
    v v*^t fail the defining equations of OP^2.
    """
    return (A.r1 * A.r2 * A.r3
            + 2 * oct_mul(oct_mul(A.x1, A.x2), oct_conj(A.x3)).re
            - A.r1 * A.x1.norm2() - A.r2 * A.x2.norm2() - A.r3 * A.x3.norm2())


def phi3(A: H3O, B: H3O, C: H3O) -> Fraction:
    """Full polarisation of det3 by inclusion-exclusion."""
    return (det3(A + B + C) - det3(A + B) - det3(A + C) - det3(B + C)
            + det3(A) + det3(B) + det3(C)) / 6


@functools.lru_cache(maxsize=1)
def phi3_tensor() -> np.ndarray:
    """6 * Phi3(e_a, e_b, e_c) over the coordinate basis, as an int64 array.

    Built once from phi3 on basis triples (a <= b <= c) and symmetrised.
    """
    T = np.zeros((DIM, DIM, DIM), dtype=np.int64)
    basis = [H3O.basis(k) for k in range(DIM)]
    for a in range(DIM):
        for b in range(a, DIM):
            for c in range(b, DIM):
                v = phi3(basis[a], basis[b], basis[c]) * 6
                if v:
                    assert v.denominator == 1
                    for i, j, k in {(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)}:
                        T[i, j, k] = int(v)
    return T


def int_vector(v: Sequence[Fraction]) -> tuple[list[int], int]:
    den = math.lcm(*(x.denominator for x in v))
    return [int(x * den) for x in v], den


def phi3_form(B: Sequence[Fraction], C: Sequence[Fraction]) -> list[Fraction]:
    """g with Phi3(A, B, C) = sum_k A_k g_k, for coordinate vectors B, C."""
    bi, bd = int_vector(B)
    ci, cd = int_vector(C)
    T = phi3_tensor()
    if max(map(abs, bi)) * max(map(abs, ci)) < 2 ** 50:
        g = np.einsum("kjl,j,l->k", T, np.array(bi, dtype=np.int64), np.array(ci, dtype=np.int64))
        g = [int(x) for x in g]
    else:
        To = T.astype(object)
        g = list(np.einsum("kjl,j,l->k", To, np.array(bi, dtype=object), np.array(ci, dtype=object)))
    den = 6 * bd * cd
    return [Fraction(int(x), den) for x in g]


def phi3_fast(A, B, C) -> Fraction:
    a = A.coords() if isinstance(A, H3O) else A
    b = B.coords() if isinstance(B, H3O) else B
    c = C.coords() if isinstance(C, H3O) else C
    return sum((x * y for x, y in zip(a, phi3_form(b, c)) if x), Fraction(0))


def phi3_bilinear_matrix(X: Sequence[Fraction]) -> MatR:
    """Matrix [Phi3(e_k, e_j, X)]_{k,j}."""
    xi, xd = int_vector(X)
    T = phi3_tensor()
    H = np.einsum("kjl,l->kj", T.astype(object), np.array(xi, dtype=object))
    den = 6 * xd
    return MatR([[Fraction(int(v), den) for v in row] for row in H], cols=DIM)


# -- points and tangent vectors of OP^2 -----------------------------------------------

@dataclass(frozen=True)
class OP2Point:
    X: H3O
    chart_witness: tuple[Oct, Oct] | None = None

    def membership_residuals(self) -> list[Fraction]:
        c = self.X.coords()
        return [trace3(self.X) - 1] + phi3_form(c, c)

    def check(self) -> None:
        if any(self.membership_residuals()):
            raise MembershipFailed("point violates Tr X = 1 or Phi3(A, X, X) = 0")


@dataclass(frozen=True)
class TangentVec:
    at: OP2Point
    T: H3O

    def residuals(self) -> list[Fraction]:
        return [trace3(self.T)] + phi3_form(self.T.coords(), self.at.X.coords())

    def check(self) -> None:
        if any(self.residuals()):
            raise MembershipFailed("vector is not tangent at its base point")


def op2_chart(a: Oct, b: Oct) -> OP2Point:
    """The rank-one projector onto v = (a, b, 1), i.e. v v*^t / (1 + |a|^2 + |b|^2)."""
    v = (a, b, ONE)
    scale = Fraction(1) / (1 + a.norm2() + b.norm2())
    # entry (i, j) of v v*^t is v_i v_j*
    x3 = oct_mul(v[1], oct_conj(v[0])) * scale
    x2 = oct_mul(v[2], oct_conj(v[0])) * scale
    x1 = oct_mul(v[1], oct_conj(v[2])) * scale
    X = H3O(a.norm2() * scale, b.norm2() * scale, scale, x1, x2, x3)
    pt = OP2Point(X, (a, b))
    try:
        pt.check()
    except MembershipFailed as exc:
        raise MembershipFailed(f"chart point ({a}, {b}) is not on OP^2") from exc
    return pt


BASEPOINT = OP2Point(E)


def tangent_basis(X: OP2Point) -> list[TangentVec]:
    """Exact basis of {T : Tr T = 0, Phi3(e_k, T, X) = 0 for all k}."""
    H = phi3_bilinear_matrix(X.X.coords())
    rows = [[Fraction(int(k < 3)) for k in range(DIM)]] + H.data
    K = kernel_basis(MatR(rows, cols=DIM))
    if len(K) != 16:
        raise UnexpectedDimension(f"tangent space has dimension {len(K)}, expected 16")
    out = [TangentVec(X, H3O.from_coords(v)) for v in K]
    for t in out:
        t.check()
    return out


def random_oct(rng: random.Random, bound: int = 1, max_den: int = 1, density: float = 1.0) -> Oct:
    out = []
    for _ in range(8):
        if rng.random() > density:
            out.append(Fraction(0))
            continue
        d = rng.randint(1, max_den)
        out.append(Fraction(rng.randint(-bound * d, bound * d), d))
    return Oct(out)


# -- derivations (the Lie algebra of F4) -----------------------------------------------

@functools.lru_cache(maxsize=1)
def jordan_left_matrices() -> tuple[MatR, ...]:
    """L_A for each basis element A: column j holds the coordinates of A o e_j."""
    basis = [H3O.basis(k) for k in range(DIM)]
    mats = []
    for A in basis:
        cols = [jordan(A, B).coords() for B in basis]
        mats.append(MatR.from_columns(cols))
    return tuple(mats)


@functools.lru_cache(maxsize=1)
def _left_stack() -> tuple[np.ndarray, int]:
    """Jordan left multiplications scaled to integers: (den * L_i stacked, den)."""
    L = jordan_left_matrices()
    den = math.lcm(*(v.denominator for M in L for r in M.data for v in r))
    return np.array([[[int(v * den) for v in r] for r in M.data] for M in L], dtype=object), den


@dataclass(frozen=True)
class Derivation:
    D: MatR

    def apply(self, A: H3O) -> H3O:
        return H3O.from_coords(self.D @ A.coords())

    def leibniz_ok(self) -> bool:
        """D(e_i o e_j) = D(e_i) o e_j + e_i o D(e_j) for all basis pairs.

        Checked in the equivalent matrix form [D, L_i] = L_{D e_i}, with
        everything scaled to integers.
        """
        Ls, lden = _left_stack()
        Dd = math.lcm(*(v.denominator for r in self.D.data for v in r))
        Di = np.array([[int(v * Dd) for v in r] for r in self.D.data], dtype=object)
        lhs = np.einsum("ab,ibc->iac", Di, Ls) - np.einsum("iab,bc->iac", Ls, Di)
        rhs = np.einsum("ki,kac->iac", Di, Ls)
        return bool(np.all(lhs == rhs))

    def trace_free(self) -> bool:
        return all(trace3(H3O.from_coords(self.D.col(j))) == 0 for j in range(DIM))

    def skew(self) -> bool:
        G = MatR([[GRAM[i] if i == j else 0 for j in range(DIM)] for i in range(DIM)], cols=DIM)
        M = G @ self.D
        return (M + M.T).is_zero()


@functools.lru_cache(maxsize=1)
def commutator_span():
    """Exact RREF of the 351 x 729 matrix of commutators [L_a, L_b], a < b."""
    L = jordan_left_matrices()
    rows = []
    for a in range(DIM):
        for b in range(a + 1, DIM):
            C = L[a] @ L[b] - L[b] @ L[a]
            rows.append([v for r in C.data for v in r])
    return rref_exact(MatR(rows, cols=DIM * DIM))


def derivation_basis() -> list[Derivation]:
    R, rank, _ = commutator_span()
    if rank != 52:
        raise UnexpectedDimension(f"commutator span has dimension {rank}, expected 52")
    out = []
    for i in range(rank):
        flat = R.data[i]
        out.append(Derivation(MatR([flat[r * DIM:(r + 1) * DIM] for r in range(DIM)], cols=DIM)))
    return out


# -- the tensors K_A ------------------------------------------------------------------

def traceless_basis() -> list[H3O]:
    """(1,-1,0), (0,1,-1) on the diagonal, then the 24 octonion coordinates."""
    out = [H3O(1, -1, 0), H3O(0, 1, -1)]
    out.extend(H3O.basis(k) for k in range(3, DIM))
    return out


def k_a(A: H3O, xi: TangentVec, eta: TangentVec) -> Fraction:
    if trace3(A) != 0:
        raise ValueError("K_A needs a traceless A")
    if xi.at != eta.at:
        raise ValueError("tangent vectors at different points")
    return phi3_fast(xi.T, eta.T, A)


def base_geodesic(c, s) -> tuple[OP2Point, TangentVec]:
    """gamma and d gamma / d(param) at (cos, sin) = (c, s), exact."""
    c, s = rat(c), rat(s)
    if c * c + s * s != 1:
        raise ValueError("need c^2 + s^2 = 1")
    X = H3O(c * c, s * s, 0, ZERO, ZERO, Oct.real(c * s))
    V = H3O(-2 * c * s, 2 * c * s, 0, ZERO, ZERO, Oct.real(c * c - s * s))
    pt = OP2Point(X)
    pt.check()
    tv = TangentVec(pt, V)
    tv.check()
    return pt, tv


PYTHAGOREAN = ((Fraction(1), Fraction(0)), (Fraction(3, 5), Fraction(4, 5)), (Fraction(5, 13), Fraction(12, 13)))
