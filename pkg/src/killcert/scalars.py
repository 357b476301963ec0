"""Exact rationals and the octonion algebra (quaternions sit inside as e0..e3).

The octonion table is built once by Cayley-Dickson doubling of the
quaternions with the rule (a, b)(c, d) = (ac - d*b, da + bc*), where an
octonion x = (a, b) has coordinates (a0, a1, a2, a3, b0, b1, b2, b3).
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from typing import Iterable, Sequence

Rat = Fraction


def rat(x) -> Fraction:
    """Coerce ints, Fractions and "p/q" strings to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return parse_rat(x)
    if isinstance(x, float):
        raise TypeError("floats are not exact; pass a Fraction or 'p/q' string")
    return Fraction(x)


def rat_str(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_rat(s: str) -> Fraction:
    s = s.strip()
    if "/" in s:
        p, q = s.split("/")
        return Fraction(int(p), int(q))
    return Fraction(int(s))


# -- quaternions -------------------------------------------------------------

def _qmul(a, b):
    a0, a1, a2, a3 = a
    b0, b1, b2, b3 = b
    return (
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
        a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
        a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
    )


def _qconj(a):
    return (a[0], -a[1], -a[2], -a[3])


def _qsub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _qadd(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _cd_mul(x, y):
    a, b = x[:4], x[4:]
    c, d = y[:4], y[4:]
    first = _qsub(_qmul(a, c), _qmul(_qconj(d), b))
    second = _qadd(_qmul(d, a), _qmul(b, _qconj(c)))
    return first + second


def _build_table():
    # table[i][j] = (sign, k) with e_i e_j = sign * e_k
    table = []
    for i in range(8):
        row = []
        for j in range(8):
            ei = tuple(1 if t == i else 0 for t in range(8))
            ej = tuple(1 if t == j else 0 for t in range(8))
            prod = _cd_mul(ei, ej)
            nz = [(k, v) for k, v in enumerate(prod) if v != 0]
            assert len(nz) == 1 and abs(nz[0][1]) == 1
            row.append((nz[0][1], nz[0][0]))
        table.append(tuple(row))
    return tuple(table)


MUL_TABLE = _build_table()

# (i, j, k, sign) triples, flattened for the inner product loop
_MUL_TERMS = tuple(
    (i, j, MUL_TABLE[i][j][1], MUL_TABLE[i][j][0]) for i in range(8) for j in range(8)
)


def table_hash() -> str:
    """sha256 of the multiplication table, recorded in every report."""
    payload = json.dumps([[list(e) for e in row] for row in MUL_TABLE])
    return hashlib.sha256(payload.encode()).hexdigest()


class Oct:
    """Octonion with 8 exact rational coordinates over (e0=1, e1=i, ..., e7)."""

    __slots__ = ("coords",)

    def __init__(self, coords: Iterable = (0,) * 8):
        c = tuple(rat(v) for v in coords)
        if len(c) != 8:
            raise ValueError("an octonion has 8 coordinates")
        object.__setattr__(self, "coords", c)

    def __setattr__(self, name, value):
        raise AttributeError("Oct is immutable")

    @classmethod
    def unit(cls, k: int) -> "Oct":
        return cls(tuple(1 if t == k else 0 for t in range(8)))

    @classmethod
    def real(cls, r) -> "Oct":
        return cls((r,) + (0,) * 7)

    @classmethod
    def quat(cls, q0, q1=0, q2=0, q3=0) -> "Oct":
        return cls((q0, q1, q2, q3, 0, 0, 0, 0))

    def __repr__(self):
        return "Oct(%s)" % ", ".join(str(c) for c in self.coords)

    def __eq__(self, other):
        if isinstance(other, Oct):
            return self.coords == other.coords
        if isinstance(other, (int, Fraction)):
            return self.coords == Oct.real(other).coords
        return NotImplemented

    def __hash__(self):
        return hash(self.coords)

    def __add__(self, other: "Oct") -> "Oct":
        return Oct(a + b for a, b in zip(self.coords, other.coords))

    def __sub__(self, other: "Oct") -> "Oct":
        return Oct(a - b for a, b in zip(self.coords, other.coords))

    def __neg__(self) -> "Oct":
        return Oct(-a for a in self.coords)

    def __mul__(self, other):
        if isinstance(other, Oct):
            return oct_mul(self, other)
        r = rat(other)
        return Oct(a * r for a in self.coords)

    def __rmul__(self, other):
        r = rat(other)
        return Oct(r * a for a in self.coords)

    def conj(self) -> "Oct":
        return oct_conj(self)

    def norm2(self) -> Fraction:
        return sum(c * c for c in self.coords)

    @property
    def re(self) -> Fraction:
        return self.coords[0]

    def is_zero(self) -> bool:
        return not any(self.coords)

    def is_quaternion(self) -> bool:
        return not any(self.coords[4:])

    def to_json(self) -> list[str]:
        return [rat_str(c) for c in self.coords]

    @classmethod
    def from_json(cls, data: Sequence[str]) -> "Oct":
        return cls(parse_rat(s) for s in data)


ZERO = Oct()
ONE = Oct.real(1)


def oct_mul(x: Oct, y: Oct) -> Oct:
    a, b = x.coords, y.coords
    out = [Fraction(0)] * 8
    for i, j, k, sign in _MUL_TERMS:
        ai, bj = a[i], b[j]
        if ai and bj:
            if sign > 0:
                out[k] += ai * bj
            else:
                out[k] -= ai * bj
    return Oct(out)


def oct_conj(x: Oct) -> Oct:
    c = x.coords
    return Oct((c[0],) + tuple(-v for v in c[1:]))


def oct_inner(x: Oct, y: Oct) -> Fraction:
    """<x, y> = 1/2 (x y* + y x*); the real part is the coordinate dot product."""
    s = oct_mul(x, oct_conj(y)) + oct_mul(y, oct_conj(x))
    # imaginary part cancels identically
    assert not any(s.coords[1:])
    return s.coords[0] / 2


def associator(x: Oct, y: Oct, z: Oct) -> Oct:
    """(xy)z - x(yz)."""
    return oct_mul(oct_mul(x, y), z) - oct_mul(x, oct_mul(y, z))


QUAT_UNITS = ("1", "i", "j", "k")


def quat_lr_matrices(u: Oct):
    """MatR pair (L(u), R(u)) of v -> uv and v -> vu on span(1, i, j, k).

    Column c is the image of the c-th basis quaternion.
    """
    from .linalg import MatR

    if not u.is_quaternion():
        raise ValueError("quat_lr_matrices needs a quaternion (zero e4..e7 part)")
    L = [[Fraction(0)] * 4 for _ in range(4)]
    R = [[Fraction(0)] * 4 for _ in range(4)]
    for c in range(4):
        e = Oct.unit(c)
        lu = oct_mul(u, e).coords
        ru = oct_mul(e, u).coords
        for r in range(4):
            L[r][c] = lu[r]
            R[r][c] = ru[r]
    return MatR(L, cols=4), MatR(R, cols=4)
