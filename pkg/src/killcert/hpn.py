"""Quadratic Killing tensors on quaternionic projective space HP^n.

R^{4n+4} is split into n+1 quaternion blocks with basis (1, i, j, k) each.
The complex structures J1, J2 act blockwise by right multiplication by i
and j; J3 is defined as J1 J2, which is blockwise right multiplication by
-k (right multiplication reverses products, so R(i)R(j) = R(ji) = -R(k)).
With this choice J3 = J1 J2 and [J_a, J_b] = 2 eps J_c hold on the nose.

Functions on the horizontal bundle of the Hopf fibration S^{4n+3} -> HP^n
are handled through exact evaluation at rational horizontal samples (X, P),
P orthogonal to X, J1 X, J2 X, J3 X.  All pulled-back functions are
bihomogeneous of degree (2, 2) in (X, P), so X need not be a unit vector.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import linalg
from .bihom import Bihom22
from .linalg import MatR, commutator
from .scalars import Oct, oct_conj, quat_lr_matrices

QUAT_LABELS = ("1", "i", "j", "k")


class HorizontalityError(ValueError):
    pass


class UndersampledRank(RuntimeError):
    """Adding more samples changed a rank that should have stabilised."""


def _block_diag(block: MatR, count: int) -> MatR:
    N = 4 * count
    out = [[Fraction(0)] * N for _ in range(N)]
    for s in range(count):
        for r in range(4):
            for c in range(4):
                out[4 * s + r][4 * s + c] = block.data[r][c]
    return MatR(out, cols=N)


@dataclass(frozen=True)
class QuatStructure:
    n: int
    J1: MatR
    J2: MatR
    J3: MatR

    @property
    def dim(self) -> int:
        return 4 * self.n + 4

    @property
    def J(self) -> tuple[MatR, MatR, MatR]:
        return (self.J1, self.J2, self.J3)

    def check(self) -> None:
        I = MatR.identity(self.dim)
        J = self.J
        for a in range(3):
            assert J[a] @ J[a] == -I, "J_a^2 != -I"
            assert J[a].T == -J[a], "J_a not skew"
            for b in range(a + 1, 3):
                assert J[a] @ J[b] == -(J[b] @ J[a]), "J's do not anticommute"
        assert self.J3 == self.J1 @ self.J2
        for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            assert commutator(J[a], J[b]) == 2 * J[c]


def build_quat_structure(n: int) -> QuatStructure:
    if n < 1:
        raise ValueError("n >= 1 required")
    _, Ri = quat_lr_matrices(Oct.quat(0, 1))
    _, Rj = quat_lr_matrices(Oct.quat(0, 0, 1))
    J1 = _block_diag(Ri, n + 1)
    J2 = _block_diag(Rj, n + 1)
    qs = QuatStructure(n, J1, J2, J1 @ J2)
    qs.check()
    return qs


# -- the module V_{n+1} and its basis -------------------------------------------

@dataclass(frozen=True, order=True)
class VBasisIndex:
    """Diag(i) when j == 0, otherwise Off(i, j, u); indices are 1-based."""

    i: int
    j: int = 0
    u: int = 0

    @property
    def is_diag(self) -> bool:
        return self.j == 0

    def label(self) -> str:
        if self.is_diag:
            return f"S_{self.i}"
        return f"S_{self.i}{self.j}({QUAT_LABELS[self.u]})"


def Diag(i: int) -> VBasisIndex:
    return VBasisIndex(i)


def Off(i: int, j: int, u) -> VBasisIndex:
    if isinstance(u, str):
        u = QUAT_LABELS.index(u)
    return VBasisIndex(i, j, u)


def v_basis_indices(n: int) -> list[VBasisIndex]:
    """Fixed order: S_1..S_{n+1}, then S_ij(u) for i<j lexicographic, u in 1,i,j,k."""
    idx = [Diag(i) for i in range(1, n + 2)]
    for i, j in itertools.combinations(range(1, n + 2), 2):
        idx.extend(Off(i, j, u) for u in range(4))
    return idx


def dim_v(n: int) -> int:
    return n * (2 * n + 3) + 1


def basis_element(idx: VBasisIndex, n: int) -> MatR:
    N = 4 * n + 4
    if not (1 <= idx.i <= n + 1) or (not idx.is_diag and not (idx.i < idx.j <= n + 1)) or not (0 <= idx.u < 4):
        raise ValueError(f"invalid basis index {idx} for n={n}")
    out = [[Fraction(0)] * N for _ in range(N)]
    if idx.is_diag:
        b = 4 * (idx.i - 1)
        for r in range(4):
            out[b + r][b + r] = Fraction(1)
        return MatR(out, cols=N)
    u = Oct.unit(idx.u)
    L, _ = quat_lr_matrices(u)
    Lc, _ = quat_lr_matrices(oct_conj(u))
    bi, bj = 4 * (idx.i - 1), 4 * (idx.j - 1)
    for r in range(4):
        for c in range(4):
            out[bi + r][bj + c] = L.data[r][c]
            out[bj + r][bi + c] = Lc.data[r][c]
    return MatR(out, cols=N)


def v_basis(n: int) -> list[MatR]:
    return [basis_element(i, n) for i in v_basis_indices(n)]


def in_v(S: MatR, qs: QuatStructure) -> bool:
    return S.is_symmetric() and all(commutator(S, J).is_zero() for J in qs.J)


def sym2_pairs(count: int) -> list[tuple[int, int]]:
    """Basis of Sym^2 of a count-dimensional space: pairs a <= b, lexicographic."""
    return [(a, b) for a in range(count) for b in range(a, count)]


# -- T_S, its polarisation and the Lie derivative -----------------------------------

def ts_poly(S: MatR, qs: QuatStructure) -> Bihom22:
    """(X, P) -> sum_a <S J_a X, P>^2 as a (2,2) polynomial."""
    if not in_v(S, qs):
        raise ValueError("S is not a symmetric operator commuting with J1, J2, J3")
    return Bihom22.from_skew_pairs([(S @ J, S @ J) for J in qs.J])


def ts_tensor(S: MatR, qs: QuatStructure, X, Y, P, Q) -> Fraction:
    """Full (0,4) tensor: 1/2 sum_a (<S J_a X, P><S J_a Y, Q> + <S J_a X, Q><S J_a Y, P>)."""
    total = Fraction(0)
    for J in qs.J:
        M = S @ J
        mx, my = M @ X, M @ Y
        total += _vdot(mx, P) * _vdot(my, Q) + _vdot(mx, Q) * _vdot(my, P)
    return total / 2


def lie_derivative_poly(S: MatR, beta: int, qs: QuatStructure) -> Bihom22:
    """(L_v T_S)(X,X,P,P) for the linear field v(X) = J_beta X.

    For a constant tensor and v(x) = A x the Lie derivative is
    sum_i T(.., A Y_i, ..); on (X,X,P,P) with A^T = -A this gives
    2 sum_a <(S J_a A - A S J_a) X, P> <S J_a X, P>.  When S commutes with
    A this is 2 sum_a <S [J_a, A] X, P> <S J_a X, P>.
    """
    A = qs.J[beta - 1]
    pairs = []
    for J in qs.J:
        SJ = S @ J
        pairs.append((2 * (SJ @ A - A @ SJ), SJ))
    return Bihom22.from_skew_pairs(pairs)


def lie_derivative_expansion(S: MatR, beta: int, qs: QuatStructure) -> Bihom22:
    """The expansion 2 sum_a <S [J_a, J_beta] X, P><S J_a X, P>."""
    A = qs.J[beta - 1]
    return Bihom22.from_skew_pairs([(2 * (S @ commutator(J, A)), S @ J) for J in qs.J])


# -- samples -------------------------------------------------------------------

@dataclass(frozen=True)
class HorizontalSample:
    X: tuple[Fraction, ...]
    P: tuple[Fraction, ...]

    def check(self, qs: QuatStructure) -> None:
        if not any(self.X):
            raise HorizontalityError("X = 0")
        for M in (None,) + qs.J:
            v = self.X if M is None else M @ self.X
            if _vdot(v, self.P) != 0:
                raise HorizontalityError("P is not horizontal at X")

    def primitive(self) -> "HorizontalSample":
        return HorizontalSample(_primitive(self.X), _primitive(self.P))


def _primitive(v: Sequence[Fraction]) -> tuple[Fraction, ...]:
    den = math.lcm(*(x.denominator for x in v))
    ints = [int(x * den) for x in v]
    g = math.gcd(*ints) or 1
    return tuple(Fraction(x // g) for x in ints)


def _vdot(u, v) -> Fraction:
    return sum((a * b for a, b in zip(u, v) if a and b), Fraction(0))


def sample_horizontal(n: int, seed, qs: QuatStructure | None = None, *, bound: int = 10,
                      max_den: int = 16, max_tries: int = 100) -> HorizontalSample:
    """Exact horizontal pair (X, P).

    X has entries k/d with |k/d| <= bound and d <= max_den; P comes from
    exact Gram-Schmidt of a random vector against the orthogonal family
    X, J1 X, J2 X, J3 X (all of the same length).
    """
    qs = qs or build_quat_structure(n)
    rng = random.Random(seed)
    N = 4 * n + 4

    def draw():
        out = []
        for _ in range(N):
            d = rng.randint(1, max_den)
            out.append(Fraction(rng.randint(-bound * d, bound * d), d))
        return out

    for _ in range(max_tries):
        X = draw()
        if not any(X):
            continue
        frame = [X] + [J @ X for J in qs.J]
        nx = _vdot(X, X)
        R = draw()
        P = list(R)
        for v in frame:
            c = _vdot(R, v) / nx
            P = [p - c * x for p, x in zip(P, v)]
        if any(P):
            s = HorizontalSample(tuple(X), tuple(P))
            s.check(qs)
            return s
    raise RuntimeError("could not draw a horizontal sample")


# -- the map Phi and evaluation matrices ------------------------------------------

class PhiEvaluator:
    """Precomputed S_A J_a products for fast evaluation of Phi at samples."""

    def __init__(self, n: int, qs: QuatStructure | None = None):
        self.n = n
        self.qs = qs or build_quat_structure(n)
        self.indices = v_basis_indices(n)
        self.basis = [basis_element(i, n) for i in self.indices]
        self.pairs = sym2_pairs(len(self.basis))
        # integer matrices S_A J_a stacked as (3 * dimV, N, N), row A*3 + a
        self._SJ = _stack([S @ J for S in self.basis for J in self.qs.J])

    def momenta(self, sample: HorizontalSample) -> list[list[Fraction]]:
        """m[A][a] = <S_A J_a X, P>."""
        flat = stacked_pairing(self._SJ, sample.X, sample.P)
        return [flat[3 * A:3 * A + 3] for A in range(len(self.basis))]

    def pair_values(self, sample: HorizontalSample) -> list[Fraction]:
        m = self.momenta(sample)
        return [sum((m[a][k] * m[b][k] for k in range(3)), Fraction(0)) for a, b in self.pairs]


def _stack(mats: Sequence[MatR]) -> np.ndarray:
    """Stack integer matrices as an int64 array (raises if an entry is not integral)."""
    arr = np.empty((len(mats), mats[0].rows, mats[0].cols), dtype=np.int64)
    for k, M in enumerate(mats):
        for i, row in enumerate(M.data):
            for j, v in enumerate(row):
                if v.denominator != 1:
                    raise ValueError("integer matrices expected")
                arr[k, i, j] = v.numerator
    return arr


def stacked_pairing(stack: np.ndarray, X: Sequence[Fraction], P: Sequence[Fraction]) -> list[Fraction]:
    """[<M_k X, P> for each integer matrix M_k in the stack], exact.

    X and P are cleared of denominators first; small integer vectors take an
    int64 fast path, anything larger goes through Python integers.
    """
    dx = math.lcm(*(v.denominator for v in X))
    dp = math.lcm(*(v.denominator for v in P))
    xi = [int(v * dx) for v in X]
    pi = [int(v * dp) for v in P]
    big = max(map(abs, xi + [0])) * max(map(abs, pi + [0])) * stack.shape[1] ** 2
    if big < 2 ** 50:
        vals = np.einsum("kij,i,j->k", stack, np.array(pi, dtype=np.int64), np.array(xi, dtype=np.int64))
        vals = [int(v) for v in vals]
    else:
        K, N, _ = stack.shape
        SX = stack.reshape(K * N, N).astype(object).dot(np.array(xi, dtype=object)).reshape(K, N)
        vals = [int(v) for v in SX.dot(np.array(pi, dtype=object))]
    scale = dx * dp
    return [Fraction(v, scale) for v in vals]


def phi_row(Q: "QuadFormV", sample: HorizontalSample, ev: PhiEvaluator | None = None) -> Fraction:
    """Phi(Q) at a horizontal sample: sum_{A,B} Q_AB sum_a <S_A J_a X,P><S_B J_a X,P>."""
    ev = ev or PhiEvaluator(Q.n)
    sample.check(ev.qs)
    m = ev.momenta(sample)
    total = Fraction(0)
    size = len(m)
    for A in range(size):
        for B in range(size):
            q = Q.q[A][B]
            if q:
                total += q * sum((m[A][k] * m[B][k] for k in range(3)), Fraction(0))
    return total


@dataclass
class QuadFormV:
    """Symmetric matrix of a quadratic form on V_{n+1} w.r.t. the basis order."""

    n: int
    q: list[list[Fraction]]

    def __post_init__(self):
        size = dim_v(self.n)
        if len(self.q) != size or any(len(r) != size for r in self.q):
            raise ValueError("QuadFormV has wrong size")
        for a in range(size):
            for b in range(a):
                if self.q[a][b] != self.q[b][a]:
                    raise ValueError("QuadFormV must be symmetric")

    @classmethod
    def zero(cls, n: int) -> "QuadFormV":
        size = dim_v(n)
        return cls(n, [[Fraction(0)] * size for _ in range(size)])

    @classmethod
    def product(cls, n: int, s: Sequence, t: Sequence) -> "QuadFormV":
        """Symmetric product s . t of two vectors given in basis coordinates."""
        size = dim_v(n)
        s = [Fraction(v) for v in s]
        t = [Fraction(v) for v in t]
        q = [[(s[a] * t[b] + s[b] * t[a]) / 2 for b in range(size)] for a in range(size)]
        return cls(n, q)

    def sym2_coords(self) -> list[Fraction]:
        """Coordinates w.r.t. the pair basis: q_AA on (A,A), 2 q_AB on (A,B), A<B."""
        return [self.q[a][b] * (1 if a == b else 2) for a, b in sym2_pairs(len(self.q))]

    @classmethod
    def from_sym2_coords(cls, n: int, coords: Sequence[Fraction]) -> "QuadFormV":
        size = dim_v(n)
        q = [[Fraction(0)] * size for _ in range(size)]
        for (a, b), c in zip(sym2_pairs(size), coords):
            if a == b:
                q[a][a] = Fraction(c)
            else:
                q[a][b] = q[b][a] = Fraction(c) / 2
        return cls(n, q)


def trace_coords(n: int) -> list[Fraction]:
    """Coordinates of the identity (the element dual to Tr) in the basis."""
    return [Fraction(1) if idx.is_diag else Fraction(0) for idx in v_basis_indices(n)]


def trace_multiples(n: int) -> list[list[Fraction]]:
    """Sym^2 coordinates of Tr . S_B for every basis element S_B."""
    tr = trace_coords(n)
    size = dim_v(n)
    out = []
    for B in range(size):
        e = [Fraction(int(k == B)) for k in range(size)]
        out.append(QuadFormV.product(n, tr, e).sym2_coords())
    return out


def coeff_system(n: int) -> MatR:
    """Linear conditions on Sym^2 coordinates saying Q is divisible by Tr.

    Unknowns are the pair coordinates.  With Q written as
    sum b_pq S_p S_q + sum c_{p,iju} S_ij(u) S_p + sum mu S_ij(u) S_kl(v)
    the conditions are: all mu vanish, c_{p,iju} is independent of p, and
    b_pq + b_rs = b_ps + b_rq (b symmetric, b_pq = half the (p,q) pair
    coordinate for p != q).
    """
    idx = v_basis_indices(n)
    size = len(idx)
    pairs = sym2_pairs(size)
    pos = {pq: k for k, pq in enumerate(pairs)}
    ncoord = len(pairs)
    diag = [k for k, i in enumerate(idx) if i.is_diag]
    off = [k for k, i in enumerate(idx) if not i.is_diag]
    rows = []

    def unit(k, val=1):
        r = [Fraction(0)] * ncoord
        r[k] = Fraction(val)
        return r

    for a in off:
        for b in off:
            if a <= b:
                rows.append(unit(pos[(a, b)]))
    for o in off:
        for p, q in itertools.combinations(diag, 2):
            r = [Fraction(0)] * ncoord
            r[pos[(min(p, o), max(p, o))]] += 1
            r[pos[(min(q, o), max(q, o))]] -= 1
            rows.append(r)

    def b_entry(p, q):
        # b_pq as a linear form in the coordinates
        k = pos[(min(p, q), max(p, q))]
        return k, Fraction(1) if p == q else Fraction(1, 2)

    for p, q, r_, s in itertools.product(diag, repeat=4):
        row = [Fraction(0)] * ncoord
        for (x, y), sign in (((p, q), 1), ((r_, s), 1), ((p, s), -1), ((r_, q), -1)):
            k, w = b_entry(x, y)
            row[k] += sign * w
        if any(row):
            rows.append(row)
    return MatR(rows, cols=ncoord)


def phi_poly(Q: QuadFormV, qs: QuatStructure | None = None) -> Bihom22:
    """Phi(Q) as a (2,2) polynomial: sum Q_AB sum_a <S_A J_a X, P><S_B J_a X, P>."""
    qs = qs or build_quat_structure(Q.n)
    basis = v_basis(Q.n)
    pairs = []
    for A, row in enumerate(Q.q):
        for B, q in enumerate(row):
            if q:
                for J in qs.J:
                    pairs.append((q * (basis[A] @ J), basis[B] @ J))
    return Bihom22.from_skew_pairs(pairs, dim=qs.dim)


# -- the isometry algebra sp(n+1) and geodesics on the sphere ----------------------

def primitive_matrix(M: MatR) -> MatR:
    """Positive rational multiple of M with coprime integer entries."""
    flat = [v for r in M.data for v in r]
    den = math.lcm(*(v.denominator for v in flat))
    g = math.gcd(*(int(v * den) for v in flat))
    return M * Fraction(den, g) if g else M


def isometry_algebra_basis(n: int, qs: QuatStructure | None = None) -> list[MatR]:
    """Basis of sp(n+1): skew matrices commuting with J1, J2, J3.

    Unknowns are the strict upper triangle (so M + M^T = 0 by
    construction); the commutator conditions are solved exactly.  Elements
    are scaled to primitive integer matrices.
    """
    qs = qs or build_quat_structure(n)
    N = qs.dim
    upper = [(i, j) for i in range(N) for j in range(i + 1, N)]

    def skew(v):
        M = [[Fraction(0)] * N for _ in range(N)]
        for (i, j), x in zip(upper, v):
            M[i][j] = x
            M[j][i] = -x
        return MatR(M, cols=N)

    cols = []
    for k in range(len(upper)):
        M = skew([int(t == k) for t in range(len(upper))])
        cols.append([x for J in qs.J for r in commutator(M, J).data for x in r])
    K = linalg.kernel_basis(MatR.from_columns(cols))
    out = [primitive_matrix(skew(v)) for v in K]
    expected = (n + 1) * (2 * n + 3)
    if len(out) != expected:
        raise RuntimeError(f"sp({n + 1}) came out {len(out)}-dimensional, expected {expected}")
    for M in out:
        if not ((M + M.T).is_zero() and all(commutator(M, J).is_zero() for J in qs.J)):
            raise RuntimeError("isometry algebra element fails its defining equations")
    return out


def random_orthogonal_pair(N: int, rng: random.Random, bound: int = 5, max_den: int = 4):
    """Rational X != 0 and P != 0 with <X, P> = 0."""
    def draw():
        out = []
        for _ in range(N):
            d = rng.randint(1, max_den)
            out.append(Fraction(rng.randint(-bound * d, bound * d), d))
        return out

    while True:
        X, R = draw(), draw()
        nx = _vdot(X, X)
        if not nx:
            continue
        c = _vdot(R, X) / nx
        P = [r - c * x for r, x in zip(R, X)]
        if any(P):
            return X, P


def geodesic_constancy_sphere(S: MatR, qs: QuatStructure, trials: int, seed, *,
                              params=None, check_membership: bool = True) -> dict:
    """T_S(gamma', gamma', ...) along gamma = cX + sP at Pythagorean (c, s).

    Evaluates sum_a <S J_a gamma, gamma'>^2 with gamma' = -sX + cP exactly
    and compares the values on each geodesic with each other and with
    sum_a <S J_a X, P>^2.  Pass check_membership=False to run negative
    controls with S outside V.
    """
    if check_membership and not in_v(S, qs):
        raise ValueError("S is not in V")
    params = params or [(Fraction(1), Fraction(0)), (Fraction(3, 5), Fraction(4, 5)),
                        (Fraction(5, 13), Fraction(12, 13))]
    stack = _stack([S @ J for J in qs.J])
    rng = random.Random(seed)
    agree = 0
    formula = 0
    for _ in range(trials):
        X, P = random_orthogonal_pair(qs.dim, rng)
        target = sum(v * v for v in stacked_pairing(stack, X, P))
        vals = []
        for c, s in params:
            g = [c * x + s * p for x, p in zip(X, P)]
            gd = [-s * x + c * p for x, p in zip(X, P)]
            vals.append(sum(v * v for v in stacked_pairing(stack, g, gd)))
        agree += len(set(vals)) == 1
        formula += vals[0] == target
    return {"trials": trials, "constant": agree, "matches_formula": formula,
            "ok": agree == trials and formula == trials}
