"""Exact arithmetic over a prime field GF(q) and 3-vectors over it.

Elements are immutable ``GFElement`` values carrying their modulus. The
bulk code paths in :mod:`xalign.ff_align` work on plain integers for speed;
the ``*_int`` helpers here are the shared integer kernels.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from .errors import (
    GFZeroDivisionError,
    InvalidOperandsError,
    SingularMatrixError,
)

DIM = 3


@lru_cache(maxsize=None)
def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


_CHECKED: set[int] = set()


def check_modulus(q: int) -> int:
    if q in _CHECKED and type(q) is int:
        return q
    if not isinstance(q, int) or isinstance(q, bool):
        raise InvalidOperandsError(f"modulus must be an int, got {q!r}")
    if q < 3 or not is_prime(q):
        raise InvalidOperandsError(f"modulus must be a prime >= 3, got {q}")
    _CHECKED.add(q)
    return q


@lru_cache(maxsize=64)
def inverse_table(q: int) -> tuple[int, ...]:
    """Multiplicative inverses of 0..q-1 (entry 0 is a placeholder 0)."""
    return (0,) + tuple(pow(a, -1, q) for a in range(1, q))


def inv_int(a: int, q: int) -> int:
    a %= q
    if a == 0:
        raise GFZeroDivisionError(f"0 has no inverse in GF({q})")
    if q < 1 << 16:
        return inverse_table(q)[a]
    return pow(a, -1, q)


@dataclass(frozen=True, slots=True)
class GFElement:
    value: int
    q: int

    def __post_init__(self) -> None:
        check_modulus(self.q)
        if not 0 <= self.value < self.q:
            raise InvalidOperandsError(
                f"value {self.value} outside [0, {self.q})"
            )

    def _other(self, other: "GFElement") -> "GFElement":
        if not isinstance(other, GFElement):
            return NotImplemented
        if other.q != self.q:
            raise InvalidOperandsError(
                f"modulus mismatch: GF({self.q}) vs GF({other.q})"
            )
        return other

    def __add__(self, other: "GFElement") -> "GFElement":
        return gf_add(self, other)

    def __sub__(self, other: "GFElement") -> "GFElement":
        o = self._other(other)
        return GFElement((self.value - o.value) % self.q, self.q)

    def __neg__(self) -> "GFElement":
        return GFElement((-self.value) % self.q, self.q)

    def __mul__(self, other: "GFElement") -> "GFElement":
        return gf_mul(self, other)

    def __truediv__(self, other: "GFElement") -> "GFElement":
        return gf_mul(self, gf_inv(self._other(other)))

    def inv(self) -> "GFElement":
        return gf_inv(self)

    def __bool__(self) -> bool:
        return self.value != 0

    def __int__(self) -> int:
        return self.value


@lru_cache(maxsize=64)
def element_table(q: int) -> tuple[GFElement, ...]:
    """Shared ``GFElement`` instances for 0..q-1 (elements are immutable)."""
    check_modulus(q)
    return tuple(GFElement(v, q) for v in range(q))

    def __repr__(self) -> str:
        return f"{self.value} (mod {self.q})"


class GF:
    """Factory for the elements of GF(q), q prime."""

    def __init__(self, q: int):
        self.q = check_modulus(q)

    def __call__(self, value: int) -> GFElement:
        return GFElement(int(value) % self.q, self.q)

    @property
    def zero(self) -> GFElement:
        return GFElement(0, self.q)

    @property
    def one(self) -> GFElement:
        return GFElement(1, self.q)

    def elements(self) -> list[GFElement]:
        return [GFElement(v, self.q) for v in range(self.q)]

    def nonzero(self) -> list[GFElement]:
        return [GFElement(v, self.q) for v in range(1, self.q)]

    def vector(self, values: Iterable[int]) -> "GFVector":
        return GFVector(tuple(self(v) for v in values))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, GF) and other.q == self.q

    def __hash__(self) -> int:
        return hash(("GF", self.q))

    def __repr__(self) -> str:
        return f"GF({self.q})"


@dataclass(frozen=True, slots=True)
class GFVector:
    entries: tuple[GFElement, ...]

    def __post_init__(self) -> None:
        if len(self.entries) != DIM:
            raise InvalidOperandsError(
                f"GF vectors have length {DIM}, got {len(self.entries)}"
            )
        qs = {e.q for e in self.entries}
        if len(qs) != 1:
            raise InvalidOperandsError(f"entries mix moduli {sorted(qs)}")

    @property
    def q(self) -> int:
        return self.entries[0].q

    @property
    def values(self) -> tuple[int, ...]:
        return tuple(e.value for e in self.entries)

    def is_zero(self) -> bool:
        return all(e.value == 0 for e in self.entries)

    def __getitem__(self, i: int) -> GFElement:
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return DIM

    def __add__(self, other: "GFVector") -> "GFVector":
        _same_q(self.q, other.q)
        return GFVector(tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __repr__(self) -> str:
        return f"GFVector({self.values}, q={self.q})"


def _same_q(q1: int, q2: int) -> None:
    if q1 != q2:
        raise InvalidOperandsError(f"modulus mismatch: GF({q1}) vs GF({q2})")


def gf_add(a: GFElement, b: GFElement) -> GFElement:
    _same_q(a.q, b.q)
    return GFElement((a.value + b.value) % a.q, a.q)


def gf_mul(a: GFElement, b: GFElement) -> GFElement:
    _same_q(a.q, b.q)
    return GFElement((a.value * b.value) % a.q, a.q)


def gf_inv(a: GFElement) -> GFElement:
    return GFElement(inv_int(a.value, a.q), a.q)


def scalar_product(c: GFElement, v: GFVector) -> GFVector:
    """Entrywise ``c * v_i``."""
    _same_q(c.q, v.q)
    return GFVector(tuple(gf_mul(c, e) for e in v.entries))


def same_direction_int(v1: Sequence[int], v2: Sequence[int], q: int) -> Optional[int]:
    """Integer kernel of :func:`same_direction`; inputs must be nonzero."""
    c = None
    for a, b in zip(v1, v2):
        a %= q
        b %= q
        if b == 0:
            if a != 0:
                return None
            continue
        if a == 0:
            return None
        r = a * inv_int(b, q) % q
        if c is None:
            c = r
        elif r != c:
            return None
    return c


def same_direction(v1: GFVector, v2: GFVector) -> Optional[GFElement]:
    """Return the nonzero ``c`` with ``v1 = c * v2``, or ``None``.

    The scalar is unique when it exists because ``v2`` has a nonzero entry.
    """
    _same_q(v1.q, v2.q)
    if v1.is_zero() or v2.is_zero():
        raise InvalidOperandsError("same_direction is undefined for the zero vector")
    c = same_direction_int(v1.values, v2.values, v1.q)
    return None if c is None else GFElement(c, v1.q)


def matvec_int(A: Sequence[Sequence[int]], x: Sequence[int], q: int) -> tuple[int, ...]:
    return tuple(sum(a * b for a, b in zip(row, x)) % q for row in A)


def solve_3x3_int(
    A: Sequence[Sequence[int]], y: Sequence[int], q: int
) -> tuple[int, int, int]:
    """Gauss-Jordan elimination mod q. Raises SingularMatrixError."""
    m = [[A[i][j] % q for j in range(DIM)] + [y[i] % q] for i in range(DIM)]
    for col in range(DIM):
        piv = next((r for r in range(col, DIM) if m[r][col]), None)
        if piv is None:
            raise SingularMatrixError(f"matrix is singular over GF({q})")
        m[col], m[piv] = m[piv], m[col]
        inv = inv_int(m[col][col], q)
        m[col] = [v * inv % q for v in m[col]]
        for r in range(DIM):
            if r != col and m[r][col]:
                f = m[r][col]
                m[r] = [(vr - f * vc) % q for vr, vc in zip(m[r], m[col])]
    return (m[0][DIM], m[1][DIM], m[2][DIM])


def det_3x3_int(A: Sequence[Sequence[int]], q: int) -> int:
    (a, b, c), (d, e, f), (g, h, i) = A
    return (a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)) % q


def matvec(A: Sequence[Sequence[GFElement]], x: GFVector) -> GFVector:
    q = x.q
    for row in A:
        for e in row:
            _same_q(e.q, q)
    vals = matvec_int([[e.value for e in row] for row in A], x.values, q)
    return GFVector(tuple(GFElement(v, q) for v in vals))


def solve_3x3(A: Sequence[Sequence[GFElement]], y: GFVector) -> GFVector:
    """Solve ``A x = y`` exactly over GF(q)."""
    q = y.q
    if len(A) != DIM or any(len(row) != DIM for row in A):
        raise InvalidOperandsError("solve_3x3 needs a 3x3 matrix")
    for row in A:
        for e in row:
            _same_q(e.q, q)
    x = solve_3x3_int([[e.value for e in row] for row in A], y.values, q)
    return GFVector(tuple(GFElement(v, q) for v in x))
