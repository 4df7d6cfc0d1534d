"""Linear codes in canonical form and the three code ensembles.

A :class:`LinearCode` stores the reduced row echelon generator, so two values
compare equal exactly when they span the same subspace. Ensembles are sets of
subspaces, never of generator matrices.
"""

from __future__ import annotations

import enum
import itertools
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from codesmooth.errors import CapacityError, DomainError, UnsupportedError
from codesmooth.gf import (
    PackedMatrix,
    PackedVector,
    Payload,
    check_field,
    popcount,
    rref_binary,
    rref_qary,
)

DEFAULT_ENUM_BUDGET = 1_000_000


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    return all(q % d for d in range(2, int(q**0.5) + 1))


def gaussian_binomial(n: int, k: int, q: int = 2) -> int:
    """Number of k-dimensional subspaces of F_q^n, as an exact integer."""
    if not is_prime(q):
        raise DomainError(f"q must be prime, got {q}")
    if k < 0 or k > n:
        raise DomainError(f"need 0 <= k <= n, got n={n}, k={k}")
    num = den = 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (k - i) - 1
    return num // den


@dataclass(frozen=True)
class LinearCode:
    """An [n, k] code over F_q held as its RREF generator."""

    n: int
    k: int
    q: int
    rows: tuple[Payload, ...]
    pivots: tuple[int, ...]

    @classmethod
    def span(cls, rows: Sequence[Payload], n: int, q: int = 2) -> LinearCode:
        """The code spanned by ``rows`` (dimension = their rank)."""
        check_field(q)
        if q == 2:
            red, piv = rref_binary(list(rows), n)
            return cls(n, len(red), 2, tuple(red), tuple(piv))
        red, piv = rref_qary([list(r) for r in rows], n, q)
        return cls(n, len(red), q, tuple(bytes(r) for r in red), tuple(piv))

    @classmethod
    def from_generator(cls, generator: PackedMatrix | Sequence[PackedVector]) -> LinearCode:
        """Canonicalize a full-rank generator; dependent rows are a domain error."""
        if not isinstance(generator, PackedMatrix):
            generator = PackedMatrix.from_vectors(list(generator))
        code = cls.span(generator.rows, generator.n, generator.q)
        if code.k != generator.k:
            raise DomainError(f"generator has rank {code.k} < {generator.k} rows")
        return code

    @classmethod
    def from_array(cls, array, q: int = 2) -> LinearCode:
        return cls.from_generator(PackedMatrix.from_array(array, q))

    @classmethod
    def full_space(cls, n: int, q: int = 2) -> LinearCode:
        return cls.span([PackedVector.from_index(n, q**j, q).data for j in range(n)], n, q)

    @property
    def generator(self) -> PackedMatrix:
        return PackedMatrix(self.rows, self.n, self.q)

    @property
    def rate(self) -> float:
        return self.k / self.n

    def size(self) -> int:
        return self.q**self.k

    def encode(self, message: PackedVector) -> PackedVector:
        return self.generator.vec_mul(message)

    def codeword_indices(self) -> np.ndarray:
        """Dense indices of all q**k codewords; entry ``a`` is the encoding of message index ``a``."""
        if self.q == 2:
            words = np.zeros(1, dtype=np.int64)
            for r in self.rows:
                words = np.concatenate([words, words ^ r])
            return words
        if self.k == 0:
            return np.zeros(1, dtype=np.int64)
        gen = self.generator.to_array()
        # itertools.product varies the last digit fastest; flip so message digit i has weight q**i
        digits = np.array(list(itertools.product(range(self.q), repeat=self.k)), dtype=np.int64)[:, ::-1]
        words = (digits @ gen) % self.q
        return words @ (self.q ** np.arange(self.n, dtype=np.int64))

    def codewords(self) -> list[PackedVector]:
        return [PackedVector.from_index(self.n, int(i), self.q) for i in self.codeword_indices()]

    def contains(self, v: PackedVector) -> bool:
        if v.n != self.n or v.q != self.q:
            raise DomainError("vector does not live in the code's ambient space")
        if self.q == 2:
            x = v.data
            for r, p in zip(self.rows, self.pivots):
                if (x >> p) & 1:
                    x ^= r
            return x == 0
        x = list(v.data)
        for r, p in zip(self.rows, self.pivots):
            c = x[p]
            if c:
                x = [(a - c * b) % self.q for a, b in zip(x, r)]
        return not any(x)

    def dual(self) -> LinearCode:
        pivset = set(self.pivots)
        rows: list[Payload] = []
        for j in range(self.n):
            if j in pivset:
                continue
            if self.q == 2:
                h = 1 << j
                for r, p in zip(self.rows, self.pivots):
                    if (r >> j) & 1:
                        h |= 1 << p
                rows.append(h)
            else:
                h = [0] * self.n
                h[j] = 1
                for r, p in zip(self.rows, self.pivots):
                    h[p] = (-r[j]) % self.q
                rows.append(bytes(h))
        return LinearCode.span(rows, self.n, self.q)

    def weight_distribution(self) -> list[int]:
        idx = self.codeword_indices()
        dist = [0] * (self.n + 1)
        for i in idx:
            dist[PackedVector.from_index(self.n, int(i), self.q).weight] += 1
        return dist


# -- exhaustive linear ensemble ----------------------------------------------------


def _row_options(n: int, pivots: Sequence[int], i: int, q: int) -> list[Payload]:
    pivset = set(pivots)
    p = pivots[i]
    free = [j for j in range(p + 1, n) if j not in pivset]
    if q == 2:
        opts = []
        for m in range(1 << len(free)):
            r = 1 << p
            for s, j in enumerate(free):
                if (m >> s) & 1:
                    r |= 1 << j
            opts.append(r)
        return opts
    opts = []
    for vals in itertools.product(range(q), repeat=len(free)):
        r = [0] * n
        r[p] = 1
        for j, s in zip(free, vals):
            r[j] = s
        opts.append(bytes(r))
    return opts


def enumerate_linear_codes(n: int, k: int, q: int = 2) -> Iterator[LinearCode]:
    """Every k-dimensional subspace of F_q^n exactly once, grouped by pivot set."""
    gaussian_binomial(n, k, q)
    for pivots in itertools.combinations(range(n), k):
        options = [_row_options(n, pivots, i, q) for i in range(k)]
        for rows in itertools.product(*options):
            yield LinearCode(n, k, q, tuple(rows), tuple(pivots))


def sample_linear_codes(n: int, k: int, count: int, seed: int, q: int = 2) -> Iterator[LinearCode]:
    """Uniform draws over k-dimensional subspaces (i.i.d. entries, reject rank < k)."""
    check_field(q)
    rng = np.random.Generator(np.random.Philox(seed))
    produced = 0
    while produced < count:
        mat = rng.integers(0, q, size=(k, n))
        code = LinearCode.span(PackedMatrix.from_array(mat, q).rows, n, q)
        if code.k < k:
            continue
        produced += 1
        yield code


# -- doubly-even self-dual codes --------------------------------------------------


def self_dual_doubly_even_count(t: int) -> int:
    """(2^{t-2}+1)(2^{t-3}+1)...(2+1)*2."""
    return 2 * reduce(lambda acc, i: acc * (2**i + 1), range(1, t - 1), 1)


def self_dual_containing_count(t: int) -> int:
    """Codes in the self-dual family containing a fixed doubly-even v outside {0, 1}."""
    return 2 * reduce(lambda acc, i: acc * (2**i + 1), range(1, t - 2), 1)


def _check_self_dual_t(t: int) -> None:
    if t < 4 or t % 4:
        raise DomainError(f"doubly-even self-dual (2t, t) codes need t ≡ 0 (mod 4), got t={t}")


def enumerate_self_dual_doubly_even(
    t: int, budget: int = DEFAULT_ENUM_BUDGET, limit: int | None = None
) -> Iterator[LinearCode]:
    """Every (2t, t) self-dual code whose weights are all ≡ 0 mod 4.

    Depth-first extension of doubly-even self-orthogonal subspaces; each
    intermediate subspace is visited once (deduplicated by canonical form).
    ``limit`` yields a partial enumeration and bypasses the budget check.
    """
    _check_self_dual_t(t)
    if limit is None and self_dual_doubly_even_count(t) > budget:
        raise CapacityError(
            f"{self_dual_doubly_even_count(t)} self-dual codes at t={t} exceed budget {budget}"
        )
    n = 2 * t
    candidates = [v for v in range(1, 1 << n) if popcount(v) % 4 == 0]
    seen: set[tuple[int, ...]] = set()
    emitted = 0

    def extend(code: LinearCode) -> Iterator[LinearCode]:
        nonlocal emitted
        if code.k == t:
            emitted += 1
            yield code
            return
        for v in candidates:
            if any(popcount(v & r) & 1 for r in code.rows):
                continue
            if code.contains(PackedVector(n, v)):
                continue
            child = LinearCode.span(list(code.rows) + [v], n)
            if child.rows in seen:
                continue
            seen.add(child.rows)
            yield from extend(child)
            if limit is not None and emitted >= limit:
                return

    yield from extend(LinearCode.span([], n))


# -- (2t, t) quasi-cyclic codes ---------------------------------------------------


def poly_mulmod(a: int, b: int, t: int) -> int:
    """Product in F_2[x]/(x^t + 1); bit i is the coefficient of x^i."""
    mask = (1 << t) - 1
    acc = 0
    for i in range(t):
        if (b >> i) & 1:
            acc ^= ((a << i) | (a >> (t - i))) & mask
    return acc


def poly_gcd(a: int, b: int) -> int:
    while b:
        while a and a.bit_length() >= b.bit_length():
            a ^= b << (a.bit_length() - b.bit_length())
        a, b = b, a
    return a


def is_unit(a: int, t: int) -> bool:
    """Whether a(x) is invertible modulo x^t + 1."""
    return poly_gcd(a, (1 << t) | 1) == 1


def poly_inverse(a: int, t: int) -> int:
    for b in range(1, 1 << t):
        if poly_mulmod(a, b, t) == 1:
            return b
    raise DomainError("polynomial is not a unit")


def multiplicative_order(a: int, m: int) -> int:
    if m < 2 or a % m == 0:
        return 0
    x, order = a % m, 1
    while x != 1:
        x = (x * a) % m
        order += 1
        if order > m:
            return 0
    return order


def qc_balance_condition(t: int) -> bool:
    """t prime, 2 primitive modulo t, and t ≡ ±3 (mod 8)."""
    return is_prime(t) and multiplicative_order(2, t) == t - 1 and t % 8 in (3, 5)


@dataclass(frozen=True)
class QuasiCyclicCode:
    t: int
    multiplier: int
    code: LinearCode = field(compare=False)

    @classmethod
    def from_multiplier(cls, t: int, a: int) -> QuasiCyclicCode:
        if popcount(a) % 2 == 0:
            raise DomainError("multiplier a(x) must have odd weight")
        rows = [(1 << i) | (poly_mulmod(1 << i, a, t) << t) for i in range(t)]
        return cls(t, a, LinearCode.span(rows, 2 * t))

    def encode_poly(self, l: int) -> int:
        return l | (poly_mulmod(l, self.multiplier, self.t) << self.t)


def enumerate_quasi_cyclic(t: int, units_only: bool = True) -> Iterator[QuasiCyclicCode]:
    """Distinct (2t, t) codes [l, l a] for odd-weight a(x).

    Every odd-weight multiplier gives a different subspace (the left half is
    an information set). With ``units_only`` the multipliers that are not
    invertible mod x^t + 1 are dropped; when 2 is primitive mod t the only
    such odd-weight multiplier is 1 + x + ... + x^{t-1}, leaving 2^{t-1} - 1 codes.
    """
    if t < 3 or t % 2 == 0:
        raise DomainError(f"quasi-cyclic family needs odd t >= 3, got {t}")
    seen: set[tuple[int, ...]] = set()
    for a in range(1, 1 << t):
        if popcount(a) % 2 == 0 or (units_only and not is_unit(a, t)):
            continue
        qc = QuasiCyclicCode.from_multiplier(t, a)
        if qc.code.rows in seen:
            continue
        seen.add(qc.code.rows)
        yield qc


def qc_orbits(t: int) -> list[tuple[QuasiCyclicCode, int]]:
    """Split the unit-multiplier QC family into coordinate-permutation classes.

    Moves used: a -> x^j a (cyclic shift of the right half), a -> a(x^u) for u
    coprime to t (same permutation on both halves), a -> a^{-1} (swap halves).
    Returns one representative per class with the class size.
    """
    members = {qc.multiplier for qc in enumerate_quasi_cyclic(t)}
    units = [u for u in range(1, t) if np.gcd(u, t) == 1]

    def neighbours(a: int) -> Iterator[int]:
        yield poly_mulmod(a, 0b10, t)
        for u in units:
            yield sum(1 << ((i * u) % t) for i in range(t) if (a >> i) & 1)
        yield poly_inverse(a, t)

    orbits = []
    left = set(members)
    while left:
        start = min(left)
        orbit = {start}
        stack = [start]
        while stack:
            for b in neighbours(stack.pop()):
                if b in members and b not in orbit:
                    orbit.add(b)
                    stack.append(b)
        left -= orbit
        orbits.append((QuasiCyclicCode.from_multiplier(t, start), len(orbit)))
    return orbits


def qc_membership_count(v: PackedVector, t: int, units_only: bool = True) -> int:
    """Number of family codes containing v = (l, m), by solving l·a = m for a."""
    if v.n != 2 * t or v.q != 2:
        raise DomainError("vector must be binary of length 2t")
    mask = (1 << t) - 1
    left, right = v.data & mask, v.data >> t
    basis: dict[int, tuple[int, int]] = {}
    kernel: list[int] = []
    for j in range(t):
        vec, combo = poly_mulmod(left, 1 << j, t), 1 << j
        while vec:
            top = vec.bit_length() - 1
            if top not in basis:
                basis[top] = (vec, combo)
                break
            bv, bc = basis[top]
            vec, combo = vec ^ bv, combo ^ bc
        else:
            kernel.append(combo)
    rem, particular = right, 0
    while rem:
        top = rem.bit_length() - 1
        if top not in basis:
            return 0
        bv, bc = basis[top]
        rem, particular = rem ^ bv, particular ^ bc
    count = 0
    for m in range(1 << len(kernel)):
        a = particular
        for i, kv in enumerate(kernel):
            if (m >> i) & 1:
                a ^= kv
        if popcount(a) % 2 == 1 and (not units_only or is_unit(a, t)):
            count += 1
    return count


# -- ensembles --------------------------------------------------------------------


class Family(str, enum.Enum):
    ALL_LINEAR = "all_linear"
    SELF_DUAL_DOUBLY_EVEN = "self_dual_doubly_even"
    QUASI_CYCLIC = "quasi_cyclic"
    SAMPLED_LINEAR = "sampled_linear"


@dataclass(frozen=True)
class EnsembleSpec:
    """A code ensemble; iterating it re-creates the stream from scratch."""

    family: Family
    n: int
    k: int
    q: int = 2
    t: int | None = None
    count: int | None = None
    seed: int | None = None

    @classmethod
    def all_linear(cls, n: int, k: int, q: int = 2) -> EnsembleSpec:
        gaussian_binomial(n, k, q)
        return cls(Family.ALL_LINEAR, n, k, q)

    @classmethod
    def self_dual(cls, t: int) -> EnsembleSpec:
        _check_self_dual_t(t)
        return cls(Family.SELF_DUAL_DOUBLY_EVEN, 2 * t, t, 2, t=t)

    @classmethod
    def quasi_cyclic(cls, t: int) -> EnsembleSpec:
        if t < 3 or t % 2 == 0:
            raise DomainError(f"quasi-cyclic family needs odd t >= 3, got {t}")
        return cls(Family.QUASI_CYCLIC, 2 * t, t, 2, t=t)

    @classmethod
    def sampled_linear(cls, n: int, k: int, count: int, seed: int, q: int = 2) -> EnsembleSpec:
        gaussian_binomial(n, k, q)
        return cls(Family.SAMPLED_LINEAR, n, k, q, count=count, seed=seed)

    @property
    def exhaustive(self) -> bool:
        return self.family is not Family.SAMPLED_LINEAR

    def __iter__(self) -> Iterator[LinearCode]:
        if self.family is Family.ALL_LINEAR:
            return enumerate_linear_codes(self.n, self.k, self.q)
        if self.family is Family.SELF_DUAL_DOUBLY_EVEN:
            return enumerate_self_dual_doubly_even(self.t)
        if self.family is Family.QUASI_CYCLIC:
            return (qc.code for qc in enumerate_quasi_cyclic(self.t))
        return sample_linear_codes(self.n, self.k, self.count, self.seed, self.q)

    def size(self) -> int:
        if self.family is Family.ALL_LINEAR:
            return gaussian_binomial(self.n, self.k, self.q)
        if self.family is Family.SELF_DUAL_DOUBLY_EVEN:
            return self_dual_doubly_even_count(self.t)
        if self.family is Family.QUASI_CYCLIC:
            return sum(1 for _ in enumerate_quasi_cyclic(self.t))
        return self.count

    def describe(self) -> dict:
        out = {"family": self.family.value, "n": self.n, "k": self.k, "q": self.q}
        for key in ("t", "count", "seed"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        return out


def membership_count(v: PackedVector, ensemble: EnsembleSpec) -> int:
    """How many codes of an exhaustive ensemble contain v."""
    if not ensemble.exhaustive:
        raise UnsupportedError("membership counts are only defined for exhaustive ensembles")
    if v.n != ensemble.n or v.q != ensemble.q:
        raise DomainError("vector length or field does not match the ensemble")
    if ensemble.family is Family.QUASI_CYCLIC:
        return qc_membership_count(v, ensemble.t)
    return sum(1 for code in ensemble if code.contains(v))


def membership_histogram(ensemble: EnsembleSpec) -> np.ndarray:
    """Per-vector membership counts over F_q^n, accumulated by iterating the ensemble."""
    if not ensemble.exhaustive:
        raise UnsupportedError("membership counts are only defined for exhaustive ensembles")
    counts = np.zeros(ensemble.q**ensemble.n, dtype=np.int64)
    for code in ensemble:
        counts[code.codeword_indices()] += 1
    return counts


# -- text format ------------------------------------------------------------------


def _format_row(v: PackedVector) -> str:
    sep = "" if v.q <= 10 else " "
    return sep.join(str(s) for s in v.symbols())


def _parse_row(text: str, n: int, q: int) -> PackedVector:
    text = text.strip()
    syms = [int(s) for s in (text if q <= 10 else text.split())]
    if len(syms) != n:
        raise DomainError(f"row {text!r} does not have {n} symbols")
    return PackedVector.from_symbols(syms, q)


def code_to_text(code: LinearCode) -> str:
    lines = [f"{code.n} {code.k} {code.q}"]
    lines += [_format_row(PackedVector(code.n, r, code.q)) for r in code.rows]
    return "\n".join(lines) + "\n"


def code_from_text(text: str) -> LinearCode:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    n, k, q = (int(x) for x in lines[0].split())
    rows = [_parse_row(ln, n, q) for ln in lines[1 : 1 + k]]
    if len(rows) != k:
        raise DomainError(f"expected {k} generator rows, found {len(rows)}")
    if k == 0:
        return LinearCode.span([], n, q)
    return LinearCode.from_generator(rows)


def ensemble_to_text(codes) -> str:
    return "\n".join(code_to_text(c) for c in codes)


def ensemble_from_text(text: str) -> list[LinearCode]:
    blocks = [b for b in text.split("\n\n") if b.strip()]
    return [code_from_text(b) for b in blocks]
