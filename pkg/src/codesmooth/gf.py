"""Packed vectors and matrices over GF(2), with a byte-per-symbol fallback for small prime q.

Binary vectors are Python ints used as bitsets: bit ``j`` holds coordinate ``j``.
This is also the index convention of every dense array in the package, so a
binary vector's payload *is* its index into a length-2**n probability table.
For q > 2 a vector is a ``bytes`` object, one symbol per byte, and its dense
index is ``sum(v[j] * q**j)``.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import Union

import numpy as np

from codesmooth.errors import DomainError

Payload = Union[int, bytes]

SMALL_PRIMES = (2, 3, 5, 7, 11, 13)


def check_field(q: int) -> None:
    if q not in SMALL_PRIMES:
        raise DomainError(f"field order must be a small prime, got {q}")


def popcount(x: int) -> int:
    return x.bit_count()


@dataclass(frozen=True)
class PackedVector:
    """An element of F_q^n."""

    n: int
    data: Payload
    q: int = 2

    def __post_init__(self):
        check_field(self.q)
        if self.q == 2:
            if not isinstance(self.data, int) or self.data < 0 or self.data >> self.n:
                raise DomainError("binary payload must be a non-negative int below 2**n")
        else:
            if not isinstance(self.data, bytes) or len(self.data) != self.n:
                raise DomainError("q-ary payload must be bytes of length n")
            if any(s >= self.q for s in self.data):
                raise DomainError("symbol out of range for field")

    @classmethod
    def from_symbols(cls, symbols: Iterable[int], q: int = 2) -> PackedVector:
        syms = [int(s) % q for s in symbols]
        if q == 2:
            return cls(len(syms), sum(1 << j for j, s in enumerate(syms) if s), 2)
        return cls(len(syms), bytes(syms), q)

    @classmethod
    def from_string(cls, text: str, q: int = 2) -> PackedVector:
        """Parse ``"0110"`` (coordinate 0 first)."""
        return cls.from_symbols((int(c) for c in text.strip()), q)

    @classmethod
    def from_index(cls, n: int, index: int, q: int = 2) -> PackedVector:
        if q == 2:
            return cls(n, index, 2)
        syms = []
        for _ in range(n):
            index, s = divmod(index, q)
            syms.append(s)
        return cls(n, bytes(syms), q)

    @classmethod
    def zeros(cls, n: int, q: int = 2) -> PackedVector:
        return cls(n, 0 if q == 2 else bytes(n), q)

    @classmethod
    def ones(cls, n: int, q: int = 2) -> PackedVector:
        return cls.from_symbols([1] * n, q)

    def symbols(self) -> tuple[int, ...]:
        if self.q == 2:
            return tuple((self.data >> j) & 1 for j in range(self.n))
        return tuple(self.data)

    @property
    def weight(self) -> int:
        if self.q == 2:
            return popcount(self.data)
        return sum(1 for s in self.data if s)

    def index(self) -> int:
        if self.q == 2:
            return self.data
        return sum(s * self.q**j for j, s in enumerate(self.data))

    def __add__(self, other: PackedVector) -> PackedVector:
        _check_compatible(self, other)
        if self.q == 2:
            return PackedVector(self.n, self.data ^ other.data, 2)
        return PackedVector(
            self.n, bytes((a + b) % self.q for a, b in zip(self.data, other.data)), self.q
        )

    def dot(self, other: PackedVector) -> int:
        _check_compatible(self, other)
        if self.q == 2:
            return popcount(self.data & other.data) & 1
        return sum(a * b for a, b in zip(self.data, other.data)) % self.q

    def __str__(self) -> str:
        return "".join(str(s) for s in self.symbols())


def _check_compatible(u: PackedVector, v: PackedVector) -> None:
    if u.n != v.n or u.q != v.q:
        raise DomainError("vectors differ in length or field")


# -- row reduction on raw payloads -------------------------------------------------


def rref_binary(rows: Sequence[int], n: int) -> tuple[list[int], list[int]]:
    """Reduced row echelon form of binary rows; pivots scan coordinate 0 first.

    Returns the nonzero reduced rows (one per pivot, in pivot order) and the pivot columns.
    """
    work = [r for r in rows if r]
    pivots: list[int] = []
    top = 0
    for col in range(n):
        bit = 1 << col
        for i in range(top, len(work)):
            if work[i] & bit:
                work[top], work[i] = work[i], work[top]
                break
        else:
            continue
        prow = work[top]
        for i in range(len(work)):
            if i != top and work[i] & bit:
                work[i] ^= prow
        pivots.append(col)
        top += 1
        if top == len(work):
            break
    return work[:top], pivots


def rref_qary(rows: Sequence[Sequence[int]], n: int, q: int) -> tuple[list[list[int]], list[int]]:
    work = [[int(s) % q for s in r] for r in rows if any(r)]
    pivots: list[int] = []
    top = 0
    for col in range(n):
        for i in range(top, len(work)):
            if work[i][col]:
                work[top], work[i] = work[i], work[top]
                break
        else:
            continue
        inv = pow(work[top][col], q - 2, q)
        work[top] = [(s * inv) % q for s in work[top]]
        prow = work[top]
        for i in range(len(work)):
            c = work[i][col]
            if i != top and c:
                work[i] = [(a - c * b) % q for a, b in zip(work[i], prow)]
        pivots.append(col)
        top += 1
        if top == len(work):
            break
    return work[:top], pivots


def rank_of_rows(rows: Sequence[Payload], n: int, q: int = 2) -> int:
    if q == 2:
        return len(rref_binary(list(rows), n)[1])
    return len(rref_qary([list(r) for r in rows], n, q)[1])


def rank_of_set(vectors: Sequence[PackedVector]) -> int:
    """GF(q) rank of a list of equal-length vectors."""
    if not vectors:
        return 0
    n, q = vectors[0].n, vectors[0].q
    for v in vectors:
        if v.n != n or v.q != q:
            raise DomainError("vectors differ in length or field")
    return rank_of_rows([v.data for v in vectors], n, q)


@dataclass(frozen=True)
class PackedMatrix:
    """A k x n matrix over F_q stored as packed rows."""

    rows: tuple[Payload, ...]
    n: int
    q: int = 2

    @property
    def k(self) -> int:
        return len(self.rows)

    @classmethod
    def from_vectors(cls, vectors: Sequence[PackedVector], n: int | None = None) -> PackedMatrix:
        if not vectors:
            if n is None:
                raise DomainError("empty matrix needs an explicit column count")
            return cls((), n, 2)
        q = vectors[0].q
        return cls(tuple(v.data for v in vectors), vectors[0].n, q)

    @classmethod
    def from_array(cls, array, q: int = 2) -> PackedMatrix:
        a = np.asarray(array, dtype=np.int64) % q
        if a.ndim != 2:
            raise DomainError("expected a 2-d array")
        vecs = [PackedVector.from_symbols(row, q) for row in a]
        return cls(tuple(v.data for v in vecs), a.shape[1], q)

    def row(self, i: int) -> PackedVector:
        return PackedVector(self.n, self.rows[i], self.q)

    def to_array(self) -> np.ndarray:
        return np.array([self.row(i).symbols() for i in range(self.k)], dtype=np.int64).reshape(
            self.k, self.n
        )

    def rank(self) -> int:
        return rank_of_rows(self.rows, self.n, self.q)

    def column(self, j: int) -> int:
        """Column ``j`` of a binary matrix as a k-bit int (bit i = row i)."""
        if self.q != 2:
            raise DomainError("column packing is binary only")
        return sum(1 << i for i, r in enumerate(self.rows) if (r >> j) & 1)

    def vec_mul(self, x: PackedVector) -> PackedVector:
        """Row vector times matrix, ``x M``."""
        if x.n != self.k or x.q != self.q:
            raise DomainError("message length does not match row count")
        if self.q == 2:
            acc = 0
            for i, r in enumerate(self.rows):
                if (x.data >> i) & 1:
                    acc ^= r
            return PackedVector(self.n, acc, 2)
        acc = [0] * self.n
        for xi, r in zip(x.data, self.rows):
            if xi:
                acc = [(a + xi * b) % self.q for a, b in zip(acc, r)]
        return PackedVector(self.n, bytes(acc), self.q)

    def mul_vec(self, v: PackedVector) -> PackedVector:
        """Matrix times column vector, ``M v^T``, returned as a length-k vector."""
        if v.n != self.n or v.q != self.q:
            raise DomainError("vector length does not match column count")
        return PackedVector.from_symbols([PackedVector(self.n, r, self.q).dot(v) for r in self.rows], self.q)
