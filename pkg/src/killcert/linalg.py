"""Exact rational linear algebra with a modular prescreen.

Modular arithmetic only ever *finds* things (ranks, pivots, candidate
solutions, witnesses).  Anything that ends up in a certificate is checked
again with exact integer/rational arithmetic in this module's verifiers.

Rank facts have a direction: a rank computed modulo a prime is a lower
bound for the rank over Q (a nonzero minor mod p is a nonzero minor over Z),
and an upper bound needs exact kernel vectors.  The helpers below keep those
two sides apart.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import flint
import numpy as np

from .scalars import parse_rat, rat, rat_str

log = logging.getLogger(__name__)

# four 62-bit primes (largest below 2**62)
DEFAULT_PRIMES = (
    4611686018427387847,
    4611686018427387817,
    4611686018427387787,
    4611686018427387761,
)
# 31-bit primes for the numpy cross-check path (products fit in int64)
CHECK_PRIMES = (2147483647, 2147483629, 2147483587)


class BadPrime(ValueError):
    """A denominator vanishes modulo the chosen prime."""


class ReconstructionFailed(RuntimeError):
    """No candidate survived exact verification with the primes available."""


class MatR:
    """Dense exact rational matrix, row-major, entries are Fractions."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, data: Sequence[Sequence], cols: int | None = None):
        rows = [[rat(v) for v in r] for r in data]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        for r in rows:
            if len(r) != cols:
                raise ValueError("ragged matrix")
        self.rows = len(rows)
        self.cols = cols
        self.data = rows

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "MatR":
        return cls([[0] * cols for _ in range(rows)], cols=cols)

    @classmethod
    def identity(cls, n: int) -> "MatR":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)], cols=n)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], rows: int | None = None) -> "MatR":
        if not columns:
            return cls.zeros(rows or 0, 0)
        return cls([list(r) for r in zip(*columns)], cols=len(columns))

    @classmethod
    def block(cls, blocks: Sequence[Sequence["MatR"]]) -> "MatR":
        out = []
        for brow in blocks:
            for i in range(brow[0].rows):
                out.append([v for b in brow for v in b.data[i]])
        return cls(out)

    def __repr__(self):
        return f"MatR({self.rows}x{self.cols})"

    def __getitem__(self, ij):
        i, j = ij
        return self.data[i][j]

    def row(self, i: int) -> list[Fraction]:
        return list(self.data[i])

    def col(self, j: int) -> list[Fraction]:
        return [r[j] for r in self.data]

    @property
    def T(self) -> "MatR":
        return MatR([list(c) for c in zip(*self.data)] if self.rows else [], cols=self.rows)

    def __eq__(self, other):
        if not isinstance(other, MatR):
            return NotImplemented
        return (self.rows, self.cols) == (other.rows, other.cols) and self.data == other.data

    def __add__(self, other: "MatR") -> "MatR":
        self._same_shape(other)
        return MatR([[a + b for a, b in zip(r, s)] for r, s in zip(self.data, other.data)], cols=self.cols)

    def __sub__(self, other: "MatR") -> "MatR":
        self._same_shape(other)
        return MatR([[a - b for a, b in zip(r, s)] for r, s in zip(self.data, other.data)], cols=self.cols)

    def __neg__(self) -> "MatR":
        return MatR([[-a for a in r] for r in self.data], cols=self.cols)

    def __mul__(self, scalar) -> "MatR":
        s = rat(scalar)
        return MatR([[s * a for a in r] for r in self.data], cols=self.cols)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, MatR):
            if self.cols != other.rows:
                raise ValueError(f"shape mismatch {self.rows}x{self.cols} @ {other.rows}x{other.cols}")
            ocols = list(zip(*other.data))
            return MatR(
                [[_dot(r, c) for c in ocols] for r in self.data], cols=other.cols
            )
        vec = list(other)
        if len(vec) != self.cols:
            raise ValueError("vector length mismatch")
        return [_dot(r, vec) for r in self.data]

    def _same_shape(self, other):
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")

    def trace(self) -> Fraction:
        return sum((self.data[i][i] for i in range(min(self.rows, self.cols))), Fraction(0))

    def is_zero(self) -> bool:
        return not any(v for r in self.data for v in r)

    def is_symmetric(self) -> bool:
        return self.rows == self.cols and all(
            self.data[i][j] == self.data[j][i] for i in range(self.rows) for j in range(i)
        )

    def to_json(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "entries": [rat_str(v) for r in self.data for v in r],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MatR":
        rows, cols = obj["rows"], obj["cols"]
        flat = [parse_rat(s) for s in obj["entries"]]
        if len(flat) != rows * cols:
            raise ValueError("entry count does not match shape")
        return cls([flat[i * cols:(i + 1) * cols] for i in range(rows)], cols=cols)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_json()).encode()).hexdigest()


def commutator(a: MatR, b: MatR) -> MatR:
    return a @ b - b @ a


def _dot(u, v) -> Fraction:
    s = Fraction(0)
    for a, b in zip(u, v):
        if a and b:
            s += a * b
    return s


# -- exact elimination --------------------------------------------------------

def integer_rows(rows: Sequence[Sequence]) -> list[list[int]]:
    """Scale each row by the lcm of its denominators.

    Row scaling by nonzero constants changes neither rank, row space nor
    right kernel.
    """
    out = []
    for r in rows:
        fr = [rat(v) for v in r]
        den = 1
        for v in fr:
            den = math.lcm(den, v.denominator)
        out.append([int(v * den) for v in fr])
    return out


def rref_exact(M: MatR):
    """Reduced row echelon form over Q by fraction-free Gauss-Jordan.

    Works on integer rows; every intermediate entry is a minor of the input,
    so the division by the previous pivot is exact.  Pivot choice: first
    nonzero entry scanning rows downwards in the current column.
    Returns (R, rank, pivot_cols).
    """
    A = integer_rows(M.data)
    nrows, ncols = M.rows, M.cols
    pivots: list[int] = []
    prev = 1
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if A[i][c] != 0), None)
        if piv is None:
            continue
        if piv != r:
            A[r], A[piv] = A[piv], A[r]
        prow = A[r]
        p = prow[c]
        for i in range(nrows):
            if i == r:
                continue
            row = A[i]
            a = row[c]
            if a == 0:
                if p != prev:
                    A[i] = [(p * x) // prev for x in row]
                continue
            A[i] = [(p * x - a * y) // prev for x, y in zip(row, prow)]
        prev = p
        pivots.append(c)
        r += 1
    rank = len(pivots)
    R = []
    for i in range(rank):
        p = A[i][pivots[i]]
        R.append([Fraction(x, p) for x in A[i]])
    for _ in range(rank, nrows):
        R.append([Fraction(0)] * ncols)
    return MatR(R, cols=ncols), rank, pivots


def rref_naive(M: MatR):
    """Textbook Fraction Gauss-Jordan; kept as an independent oracle for tests."""
    A = [list(r) for r in M.data]
    pivots = []
    r = 0
    for c in range(M.cols):
        piv = next((i for i in range(r, M.rows) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        p = A[r][c]
        A[r] = [x / p for x in A[r]]
        for i in range(M.rows):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == M.rows:
            break
    return MatR(A, cols=M.cols), len(pivots), pivots


def _kernel_from_rref(R: MatR, pivots: list[int]) -> list[list[Fraction]]:
    pivset = set(pivots)
    basis = []
    for f in range(R.cols):
        if f in pivset:
            continue
        v = [Fraction(0)] * R.cols
        v[f] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -R.data[i][f]
        basis.append(v)
    return basis


def verify_kernel_vector(M: MatR, v: Sequence[Fraction]) -> bool:
    return all(_dot(r, v) == 0 for r in M.data)


def kills(rows: Sequence[Sequence[int]], vectors: Sequence[Sequence]) -> bool:
    """Exact test that every vector lies in the right kernel of an integer matrix."""
    if not vectors:
        return True
    if not rows:
        return True
    V = np.array(integer_rows([list(v) for v in vectors]), dtype=object).T
    M = np.array([list(r) for r in rows], dtype=object)
    return not np.any(M.dot(V))


def pivot_minor(rows: Sequence[Sequence[int]], p: int) -> tuple[list[int], list[int]]:
    """Rows R and columns C with rows[R][:, C] nonsingular mod p, |R| = rank mod p."""
    R = independent_rows(rows, p) if rows else []
    C = modular_rref([rows[i] for i in R], p)[1] if R else []
    return R, C


def check_minor(rows: Sequence[Sequence[int]], R: Sequence[int], C: Sequence[int],
                primes: Sequence[int] = CHECK_PRIMES) -> bool:
    """Re-check a recorded nonsingular minor on the numpy path.

    A minor that is nonsingular mod any prime has nonzero determinant, so
    rank >= len(R) over Q.  Falls back to the default primes only if the
    minor happens to be singular modulo every check prime.
    """
    if len(R) != len(C):
        return False
    if not R:
        return True
    sub = [[rows[i][j] for j in C] for i in R]
    for q in primes:
        if numpy_rank_mod(sub, q) == len(R):
            return True
    return any(mod_matrix(sub, q).rank() == len(R) for q in DEFAULT_PRIMES)


# -- modular layer --------------------------------------------------------------

def _reduce(x: Fraction, p: int) -> int:
    d = x.denominator % p
    if d == 0:
        raise BadPrime(f"denominator {x.denominator} vanishes mod {p}")
    return (x.numerator % p) * pow(d, -1, p) % p


def mod_matrix(M: MatR | Sequence[Sequence], p: int) -> flint.nmod_mat:
    data = M.data if isinstance(M, MatR) else M
    nrows = len(data)
    ncols = len(data[0]) if nrows else (M.cols if isinstance(M, MatR) else 0)
    flat = []
    for r in data:
        for v in r:
            if isinstance(v, int):
                flat.append(v % p)
            else:
                flat.append(_reduce(v, p))
    return flint.nmod_mat(nrows, ncols, flat, p)


def modular_rank(M: MatR, p: int) -> int:
    """Rank of M mod p; a lower bound for the rank over Q.  Raises BadPrime."""
    if M.rows == 0 or M.cols == 0:
        return 0
    return mod_matrix(M, p).rank()


def modular_rref(M: MatR | Sequence[Sequence], p: int):
    """(rref as list of int rows, pivot columns) of M mod p."""
    A = mod_matrix(M, p)
    R, rank = A.rref()
    rows = [[int(R[i, j]) for j in range(R.ncols())] for i in range(rank)]
    pivots = []
    for row in rows:
        pivots.append(next(j for j, v in enumerate(row) if v))
    return rows, pivots


def independent_rows(M: MatR | Sequence[Sequence], p: int) -> list[int]:
    """Indices of a maximal set of rows independent mod p (greedy in row order)."""
    data = M.data if isinstance(M, MatR) else M
    if not data:
        return []
    T = list(zip(*data))
    _, piv = modular_rref(T, p)
    return piv


def numpy_rank_mod(rows: Sequence[Sequence[int]], p: int) -> int:
    """Independent modular rank (numpy int64, p < 2**31).

    A different code path from the flint-based prescreen; used when
    re-verifying recorded rank lower bounds.
    """
    if p >= 2 ** 31:
        raise ValueError("numpy path needs p < 2**31")
    A = np.array([[int(v) % p for v in r] for r in rows], dtype=np.int64)
    if A.size == 0:
        return 0
    m, n = A.shape
    rank = 0
    for c in range(n):
        if rank == m:
            break
        nz = np.nonzero(A[rank:, c])[0]
        if nz.size == 0:
            continue
        piv = rank + int(nz[0])
        if piv != rank:
            A[[rank, piv]] = A[[piv, rank]]
        inv = pow(int(A[rank, c]), -1, p)
        A[rank, c:] = (A[rank, c:] * inv) % p
        below = A[rank + 1:, c].copy()
        mask = below != 0
        if mask.any():
            idx = np.nonzero(mask)[0] + rank + 1
            A[idx, c:] = (A[idx, c:] - np.outer(below[mask], A[rank, c:]) % p) % p
        rank += 1
    return rank


def crt(residues: Sequence[int], primes: Sequence[int]) -> tuple[int, int]:
    x, m = 0, 1
    for r, p in zip(residues, primes):
        t = ((r - x) * pow(m, -1, p)) % p
        x += m * t
        m *= p
    return x % m, m


def rational_reconstruct(a: int, m: int) -> Fraction | None:
    """Find n/d = a mod m with |n|, d <= sqrt(m/2); None if none exists."""
    a %= m
    bound = math.isqrt(m // 2)
    r0, r1 = m, a
    s0, s1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if s1 == 0 or abs(s1) > bound:
        return None
    if math.gcd(r1, abs(s1)) != 1:
        return None
    return Fraction(r1, s1)


def _reconstruct_vectors(residue_sets, primes) -> list[list[Fraction]] | None:
    """CRT + rational reconstruction of a list of vectors given per prime."""
    out = []
    for vec_idx in range(len(residue_sets[0])):
        vec = []
        for k in range(len(residue_sets[0][vec_idx])):
            a, m = crt([rs[vec_idx][k] for rs in residue_sets], primes)
            q = rational_reconstruct(a, m)
            if q is None:
                return None
            vec.append(q)
        out.append(vec)
    return out


# -- kernels, solves, witnesses -------------------------------------------------

@dataclass
class RankReport:
    matrix_id: str
    modular_ranks: list[tuple[int, int]]
    exact_rank: int | None = None
    method: str = "modular_only"

    def to_json(self) -> dict:
        return {
            "matrix_id": self.matrix_id,
            "modular_ranks": [[str(p), r] for p, r in self.modular_ranks],
            "exact_rank": self.exact_rank,
            "method": self.method,
        }


@dataclass
class FarkasWitness:
    """w with w^T G = 0 and w^T f = target_value != 0, both exact."""

    w: list[Fraction]
    target_value: Fraction

    def verify(self, G: MatR, f: Sequence[Fraction]) -> bool:
        return verify_witness(G, f, self.w, self.target_value)

    def to_json(self) -> dict:
        return {"w": [rat_str(v) for v in self.w], "target_value": rat_str(self.target_value)}

    @classmethod
    def from_json(cls, obj: dict) -> "FarkasWitness":
        return cls([parse_rat(s) for s in obj["w"]], parse_rat(obj["target_value"]))


def verify_witness(G: MatR, f, w, target_value) -> bool:
    if len(w) != G.rows or len(f) != G.rows:
        return False
    if target_value == 0 or _dot(w, f) != target_value:
        return False
    return annihilates(w, G)


def annihilates(w: Sequence[Fraction], G: MatR) -> bool:
    """Exact check of w^T G = 0, done on integer-scaled data."""
    support = [i for i, v in enumerate(w) if v]
    if not support:
        return True
    den = 1
    for i in support:
        den = math.lcm(den, w[i].denominator)
    wi = {i: int(w[i] * den) for i in support}
    rows = {}
    for i in support:
        rden = 1
        for v in G.data[i]:
            rden = math.lcm(rden, v.denominator)
        rows[i] = (rden, [int(v * rden) for v in G.data[i]])
    L = 1
    for i in support:
        L = math.lcm(L, rows[i][0])
    # w^T G * L * den as integers
    acc = [0] * G.cols
    for i in support:
        rden, ir = rows[i]
        coef = wi[i] * (L // rden)
        for j, v in enumerate(ir):
            if v:
                acc[j] += coef * v
    return not any(acc)


def kernel_basis(M: MatR, primes: Sequence[int] = DEFAULT_PRIMES, exact_limit: int = 60_000):
    """Basis of the right kernel of M, every vector checked exactly.

    Small matrices go through rref_exact.  Larger ones use the modular
    route: RREF mod several primes, CRT + rational reconstruction of the
    RREF kernel basis, exact verification M v = 0, and the count
    cols - rank_mod(M) (an upper bound on the kernel dimension) to show the
    list is complete.
    """
    if M.cols == 0:
        return []
    if M.rows == 0:
        return [[Fraction(int(i == j)) for j in range(M.cols)] for i in range(M.cols)]
    if M.rows * M.cols <= exact_limit:
        R, _, piv = rref_exact(M)
        return _kernel_from_rref(R, piv)
    return modular_kernel_basis(M, primes)


def modular_kernel_basis(M: MatR | Sequence[Sequence[int]], primes: Sequence[int] = DEFAULT_PRIMES,
                         max_primes: int = 64, cols: int | None = None):
    """Kernel via RREF mod p + CRT; M may be a MatR or a list of integer rows."""
    if isinstance(M, MatR):
        ncols = M.cols
        int_rows = integer_rows(M.data)
    else:
        int_rows = [list(r) for r in M]
        ncols = cols if cols is not None else len(int_rows[0])
    used: list[int] = []
    residue_sets = []
    pivots_ref = None
    pool = list(primes)
    extra = DEFAULT_PRIMES[-1]
    while len(used) < max_primes:
        if not pool:
            extra = _prev_prime(extra)
            pool.append(extra)
        p = pool.pop(0)
        try:
            rows, piv = modular_rref(int_rows, p)
        except BadPrime:
            continue
        if pivots_ref is None or len(piv) > len(pivots_ref):
            pivots_ref, used, residue_sets = piv, [], []
        if piv != pivots_ref:
            continue
        pivset = set(piv)
        vecs = []
        for fcol in range(ncols):
            if fcol in pivset:
                continue
            v = [0] * ncols
            v[fcol] = 1
            for i, pc in enumerate(piv):
                v[pc] = (-rows[i][fcol]) % p
            vecs.append(v)
        used.append(p)
        residue_sets.append(vecs)
        cand = _reconstruct_vectors(residue_sets, used)
        if cand is not None and kills(int_rows, cand):
            return cand
    raise ReconstructionFailed(f"kernel not reconstructed with {len(used)} primes")


def _prev_prime(p: int) -> int:
    q = p - 2
    while not flint.fmpz(q).is_prime():
        q -= 2
    return q


def hadamard_bits(A: Sequence[Sequence[int]]) -> int:
    """log2 of the Hadamard bound on |det A| (rows of A), rounded up."""
    total = 0.0
    for r in A:
        nrm = sum(v * v for v in r)
        if nrm:
            total += 0.5 * math.log2(nrm)
    return int(math.ceil(total)) + 1


def exact_solve(A: Sequence[Sequence[int]], B: Sequence[Sequence[int]],
                primes: Sequence[int] = DEFAULT_PRIMES) -> tuple[list[list[int]], int]:
    """Solve A Y = B for square nonsingular integer A; returns (Ynum, den).

    Y = Ynum / den exactly.  If the Hadamard bound says the configured
    primes can carry the answer, the candidate comes from modular solves +
    CRT + rational reconstruction; otherwise from FLINT's exact integer
    solver.  Either way A Ynum = den B is checked before returning.
    """
    n = len(A)
    m = len(B[0]) if B else 0
    if n == 0 or m == 0:
        return [[0] * m for _ in range(n)], 1
    need = 2 * (hadamard_bits(A) + max(1, max(abs(v) for r in B for v in r).bit_length()) + n.bit_length()) + 2
    capacity = sum(p.bit_length() - 1 for p in primes)
    Ynum = den = None
    if need <= capacity:
        res = []
        used = []
        for p in primes:
            try:
                Y = flint.nmod_mat(n, n, [v % p for r in A for v in r], p).solve(
                    flint.nmod_mat(n, m, [v % p for r in B for v in r], p))
            except ZeroDivisionError:
                continue
            used.append(p)
            res.append([[int(Y[i, j]) for j in range(m)] for i in range(n)])
        if used:
            fr = _reconstruct_vectors(res, used)
            if fr is not None:
                den = 1
                for row in fr:
                    for v in row:
                        den = math.lcm(den, v.denominator)
                Ynum = [[int(v * den) for v in row] for row in fr]
    if Ynum is None:
        Yq = flint.fmpz_mat(A).solve(flint.fmpz_mat(B))
        num, d = Yq.numer_denom()
        den = int(d)
        Ynum = [[int(num[i, j]) for j in range(m)] for i in range(n)]
    if not _check_solve(A, B, Ynum, den):
        raise ReconstructionFailed("solution candidate failed exact verification")
    return Ynum, den


def _check_solve(A, B, Ynum, den) -> bool:
    Ao = np.array(A, dtype=object)
    Yo = np.array(Ynum, dtype=object)
    lhs = Ao.dot(Yo)
    rhs = np.array(B, dtype=object) * den
    return bool(np.all(lhs == rhs))


def _split(G: MatR | Sequence[Sequence], f):
    data = G.data if isinstance(G, MatR) else G
    return [list(r) + [fv] for r, fv in zip(data, f)]


def witness_structure(Grows: Sequence[Sequence[int]], Frows: Sequence[Sequence[int]], p: int):
    """Modular bookkeeping behind a batch of Farkas witnesses.

    Returns (Rstar, R0, T, C): Rstar is a maximal set of rows of [G F]
    independent mod p, R0 within it a maximal independent set for G,
    T = Rstar minus R0 and C a set of columns with G[R0, C] invertible mod p.
    """
    aug = [list(g) + list(f) for g, f in zip(Grows, Frows)]
    Rstar = independent_rows(aug, p) if aug else []
    sub = [Grows[i] for i in Rstar]
    local = independent_rows(sub, p) if sub and sub[0] else []
    R0 = [Rstar[i] for i in local]
    R0set = set(R0)
    T = [i for i in Rstar if i not in R0set]
    C = modular_rref([Grows[i] for i in R0], p)[1] if R0 else []
    return Rstar, R0, T, C


def farkas_witnesses(Grows: Sequence[Sequence[int]], Frows: Sequence[Sequence[int]],
                     primes: Sequence[int] = DEFAULT_PRIMES):
    """Integer vectors w with w^T G = 0 whose pairing with F has full rank.

    G and F are given as integer row lists over the same samples.  One
    witness per row t in T (see witness_structure): w_t is supported on
    R0 + {t}, w_t[t] = den and w_t[R0] = -Y[:, t] with
    G[R0, C]^T Y = G[T, C]^T.  Candidates are NOT trusted: callers run
    verify_witness_batch.
    """
    p = primes[0]
    Rstar, R0, T, C = witness_structure(Grows, Frows, p)
    if not T:
        return [], {"Rstar": Rstar, "R0": R0, "T": T, "C": C}
    A = [[Grows[i][c] for i in R0] for c in C]
    B = [[Grows[t][c] for t in T] for c in C]
    Ynum, den = exact_solve(A, B, primes)
    witnesses = []
    for k, t in enumerate(T):
        w = {t: den}
        for i, r in enumerate(R0):
            if Ynum[i][k]:
                w[r] = -Ynum[i][k]
        g = 0
        for v in w.values():
            g = math.gcd(g, v)
        witnesses.append({i: v // g for i, v in sorted(w.items())})
    return witnesses, {"Rstar": Rstar, "R0": R0, "T": T, "C": C}


def apply_witnesses(witnesses: Sequence[dict], rows: Sequence[Sequence[int]]) -> list[list[int]]:
    """[sum_i w[i] * rows[i][j]] for each sparse integer witness; exact."""
    out = []
    for w in witnesses:
        idx = list(w)
        M = np.array([rows[i] for i in idx], dtype=object)
        vec = np.array([w[i] for i in idx], dtype=object)
        out.append([int(v) for v in vec.dot(M)] if idx else [0] * (len(rows[0]) if rows else 0))
    return out


def verify_witness_batch(witnesses: Sequence[dict], Grows, Frows):
    """Exact check of w^T G = 0 for every witness; returns (ok, pairing rows, bad indices)."""
    bad = []
    GW = apply_witnesses(witnesses, Grows)
    for k, r in enumerate(GW):
        if any(r):
            bad.append(k)
    FW = apply_witnesses(witnesses, Frows)
    return not bad, FW, bad


def solve_or_witness(G: MatR, f: Sequence, primes: Sequence[int] = DEFAULT_PRIMES):
    """Either exact c with G c = f, or a FarkasWitness for f not in colspan(G).

    The branch is decided modulo the first usable prime; candidates come
    from exact_solve on an invertible square subsystem (CRT + rational
    reconstruction when the primes suffice) and are always verified
    exactly before they are returned.
    """
    f = [rat(v) for v in f]
    if len(f) != G.rows:
        raise ValueError("G.rows must equal len(f)")
    if G.cols == 0 or G.rows == 0:
        if any(f):
            i = next(k for k, v in enumerate(f) if v)
            w = [Fraction(int(k == i)) for k in range(G.rows)]
            return FarkasWitness(w, f[i])
        return [Fraction(0)] * G.cols
    aug = integer_rows(_split(G, f))
    Gi = [r[:-1] for r in aug]
    fi = [[r[-1]] for r in aug]
    for p in primes:
        try:
            Rstar, R0, T, C = witness_structure(Gi, fi, p)
            break
        except BadPrime:
            continue
    else:
        raise ReconstructionFailed("no usable prime")
    if T:
        ws, _ = farkas_witnesses(Gi, fi, (p,) + tuple(q for q in primes if q != p))
        w_int = ws[0]
        # integer_rows scaled row i by its denominator lcm; fold that into w
        w = [Fraction(0)] * G.rows
        for i, v in w_int.items():
            w[i] = Fraction(v * _row_scale(G.data[i] + [f[i]]))
        tv = _dot(w, f)
        if tv == 0 or not annihilates(w, G):
            raise ReconstructionFailed("witness candidate failed exact verification")
        return FarkasWitness(w, tv)
    if not R0:
        c = [Fraction(0)] * G.cols
    else:
        A = [[Gi[i][c] for c in C] for i in R0]
        B = [fi[i] for i in R0]
        Ynum, den = exact_solve(A, B, primes)
        c = [Fraction(0)] * G.cols
        for k, col in enumerate(C):
            c[col] = Fraction(Ynum[k][0], den)
    if G @ c != f:
        raise ReconstructionFailed("solution candidate failed exact verification")
    return c


def _row_scale(row: Sequence[Fraction]) -> int:
    den = 1
    for v in row:
        den = math.lcm(den, rat(v).denominator)
    return den


def pairing_matrix(W: Sequence[Sequence[Fraction]], F: MatR) -> MatR:
    """[w_i^T f_j] for witnesses w_i and the columns f_j of F."""
    if not W:
        return MatR.zeros(0, F.cols)
    cols = [F.col(j) for j in range(F.cols)]
    return MatR([[_dot(w, c) for c in cols] for w in W], cols=F.cols)


def exact_rank(M: MatR, primes: Sequence[int] = DEFAULT_PRIMES) -> int:
    """Exact rank over Q.

    A modular rank equal to min(rows, cols) settles it (lower bound meets
    the trivial upper bound); otherwise fall back to rref_exact.
    """
    if M.rows == 0 or M.cols == 0:
        return 0
    full = min(M.rows, M.cols)
    for p in primes:
        try:
            if modular_rank(M, p) == full:
                return full
            break
        except BadPrime:
            continue
    return rref_exact(M)[1]


def pairing_rank(W: Sequence[Sequence[Fraction]], F: MatR) -> int:
    """Exact rank of the witness/candidate pairing matrix."""
    if not W or F.cols == 0:
        return 0
    return exact_rank(pairing_matrix(W, F))
