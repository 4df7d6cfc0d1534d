"""Dense probability mass functions over F_q^n and the divergences between them.

Index ``i`` of a binary Pmf is the vector whose bit ``j`` is bit ``j`` of ``i``.
Sums over the 2**n cells use ``math.fsum`` so tight tolerances survive n = 24.
"""

from __future__ import annotations

import contextlib
import contextvars
import enum
import io
import math
import struct
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

from codesmooth.errors import CapacityError, ContractError, DomainError
from codesmooth.gf import PackedVector, check_field

KL_ROUTING = 1e-6
DEFAULT_DENSE_LIMIT = 26

_dense_limit: contextvars.ContextVar[int] = contextvars.ContextVar(
    "dense_limit", default=DEFAULT_DENSE_LIMIT
)


def dense_limit() -> int:
    return _dense_limit.get()


@contextlib.contextmanager
def dense_limit_override(n: int) -> Iterator[None]:
    token = _dense_limit.set(n)
    try:
        yield
    finally:
        _dense_limit.reset(token)


def check_dense(n: int, q: int = 2) -> None:
    if n * math.log2(q) > dense_limit():
        raise CapacityError(f"dense table of {q}**{n} cells exceeds the dense limit {dense_limit()}")


@dataclass(frozen=True)
class LogBase:
    kind: str
    q: int = 2

    def __post_init__(self):
        if self.kind not in ("bits", "nats", "base_q"):
            raise DomainError(f"unknown log base {self.kind!r}")

    @classmethod
    def base_q(cls, q: int) -> LogBase:
        return cls("base_q", q)

    @classmethod
    def parse(cls, name: str) -> LogBase:
        return cls(name.lower())

    @property
    def ln_base(self) -> float:
        if self.kind == "nats":
            return 1.0
        if self.kind == "bits":
            return math.log(2)
        return math.log(self.q)

    def from_nats(self, x: float) -> float:
        return x / self.ln_base

    def __str__(self) -> str:
        return self.kind if self.kind != "base_q" else f"base_{self.q}"


BITS = LogBase("bits")
NATS = LogBase("nats")


class Pmf:
    """An immutable probability table over F_q^n."""

    __slots__ = ("base", "n", "q", "values")

    def __init__(self, values, n: int | None = None, q: int = 2, base: LogBase = BITS, validate: bool = True):
        check_field(q)
        arr = np.array(values, dtype=np.float64)
        if arr.ndim != 1:
            raise DomainError("Pmf values must be one-dimensional")
        if n is None:
            n = round(math.log(len(arr), q)) if len(arr) > 1 else 0
        if len(arr) != q**n:
            raise DomainError(f"expected {q**n} values for n={n}, got {len(arr)}")
        if validate:
            if np.any(arr < 0) or not np.all(np.isfinite(arr)):
                raise DomainError("Pmf values must be finite and non-negative")
            total = math.fsum(arr)
            if abs(total - 1.0) > 1e-12:
                raise DomainError(f"Pmf values sum to {total!r}, not 1")
        arr.setflags(write=False)
        self.n, self.q, self.values, self.base = n, q, arr, base

    @classmethod
    def uniform(cls, n: int, q: int = 2, base: LogBase = BITS) -> Pmf:
        check_dense(n, q)
        return cls(np.full(q**n, q ** (-n)), n, q, base)

    @classmethod
    def point_mass(cls, v: PackedVector, base: LogBase = BITS) -> Pmf:
        check_dense(v.n, v.q)
        arr = np.zeros(v.q**v.n)
        arr[v.index()] = 1.0
        return cls(arr, v.n, v.q, base)

    @classmethod
    def normalized(cls, weights, n: int | None = None, q: int = 2, base: LogBase = BITS) -> Pmf:
        w = np.asarray(weights, dtype=np.float64)
        total = math.fsum(w)
        if not total > 0:
            raise DomainError("weights have zero total mass")
        return cls(w / total, n, q, base)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, index: int) -> float:
        return float(self.values[index])

    def prob(self, v: PackedVector) -> float:
        return float(self.values[v.index()])

    def with_base(self, base: LogBase) -> Pmf:
        return Pmf(self.values, self.n, self.q, base, validate=False)

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.values)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Pmf)
            and self.n == other.n
            and self.q == other.q
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self) -> str:
        return f"Pmf(n={self.n}, q={self.q}, base={self.base})"

    # serialization

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("index,value\n")
        for i, x in enumerate(self.values):
            buf.write(f"{i},{float(x)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, q: int = 2, base: LogBase = BITS) -> Pmf:
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        if lines[0].strip() != "index,value":
            raise DomainError("missing 'index,value' header")
        pairs = [ln.split(",") for ln in lines[1:]]
        arr = np.zeros(len(pairs))
        for i, x in pairs:
            arr[int(i)] = float(x)
        return cls(arr, None, q, base)

    def to_bytes(self) -> bytes:
        return struct.pack("<Q", len(self.values)) + self.values.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, q: int = 2, base: LogBase = BITS) -> Pmf:
        (length,) = struct.unpack_from("<Q", data)
        if len(data) != 8 + 8 * length:
            raise DomainError("binary Pmf length prefix does not match payload")
        return cls(np.frombuffer(data, dtype="<f8", offset=8).copy(), None, q, base)


def _check_pair(P: Pmf, Q: Pmf, same_base: bool = True) -> None:
    if P.n != Q.n or P.q != Q.q:
        raise ContractError(f"Pmfs live on different spaces ({P.q}^{P.n} vs {Q.q}^{Q.n})")
    if same_base and P.base != Q.base:
        raise ContractError(f"Pmfs use different log bases ({P.base} vs {Q.base})")


# -- transforms and convolution ---------------------------------------------------


def walsh_hadamard(values) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis.

    Works on a copy; a 2-d input transforms each row independently.
    """
    a = np.array(values, dtype=np.float64)
    size = a.shape[-1]
    if size < 1 or size & (size - 1):
        raise DomainError(f"transform length must be a power of two, got {size}")
    lead = a.shape[:-1]
    tmp = np.empty(lead + (size // 2,))
    h = 1
    while h < size:
        v = a.reshape(*lead, -1, 2, h)
        x, y = v[..., 0, :], v[..., 1, :]
        t = tmp.reshape(x.shape)
        np.subtract(x, y, out=t)
        x += y
        y[...] = t
        h *= 2
    return a


def convolve(P: Pmf, Q: Pmf) -> Pmf:
    """Law of X + Y for independent X ~ P, Y ~ Q."""
    _check_pair(P, Q, same_base=False)
    check_dense(P.n, P.q)
    if P.q == 2:
        out = walsh_hadamard(walsh_hadamard(P.values) * walsh_hadamard(Q.values)) / len(P.values)
        np.clip(out, 0.0, None, out=out)
        return Pmf(out / math.fsum(out), P.n, 2, P.base, validate=False)
    shape = (P.q,) * P.n
    p = P.values.reshape(shape)
    out = np.zeros(shape)
    for y in np.flatnonzero(Q.values):
        shift = PackedVector.from_index(P.n, int(y), P.q).symbols()[::-1]
        out += Q.values[y] * np.roll(p, shift, axis=tuple(range(P.n)))
    return Pmf(out.reshape(-1), P.n, P.q, P.base, validate=False)


# -- entropies and divergences ----------------------------------------------------


@dataclass(frozen=True)
class DivergenceValue:
    value: float
    alpha: float
    base: LogBase

    def __float__(self) -> float:
        return self.value

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)


def _log_sum_exp(logs: np.ndarray) -> float:
    if len(logs) == 0:
        return -math.inf
    m = float(np.max(logs))
    return m + math.log(math.fsum(np.exp(logs - m)))


def shannon_entropy(P: Pmf) -> float:
    p = P.values[P.values > 0]
    return max(0.0, P.base.from_nats(-math.fsum(p * np.log(p))))


def renyi_entropy(P: Pmf, alpha: float) -> float:
    if alpha <= 0:
        raise DomainError(f"Rényi order must be positive, got {alpha}")
    if abs(alpha - 1) < KL_ROUTING:
        return shannon_entropy(P)
    p = P.values[P.values > 0]
    return P.base.from_nats(_log_sum_exp(alpha * np.log(p)) / (1 - alpha))


def kl_divergence(P: Pmf, Q: Pmf) -> DivergenceValue:
    _check_pair(P, Q)
    mask = P.values > 0
    if np.any(Q.values[mask] == 0):
        return DivergenceValue(math.inf, 1.0, P.base)
    p, q = P.values[mask], Q.values[mask]
    d = math.fsum(p * (np.log(p) - np.log(q)))
    return DivergenceValue(max(0.0, P.base.from_nats(d)), 1.0, P.base)


def renyi_divergence(P: Pmf, Q: Pmf, alpha: float) -> DivergenceValue:
    _check_pair(P, Q)
    if alpha <= 0:
        raise DomainError(f"Rényi order must be positive, got {alpha}")
    if abs(alpha - 1) < KL_ROUTING:
        return kl_divergence(P, Q)
    pmask = P.values > 0
    both = pmask & (Q.values > 0)
    if alpha > 1 and np.any(pmask & ~both):
        return DivergenceValue(math.inf, alpha, P.base)
    logs = alpha * np.log(P.values[both]) + (1 - alpha) * np.log(Q.values[both])
    total = _log_sum_exp(logs)
    if math.isinf(total):
        return DivergenceValue(math.inf, alpha, P.base)
    return DivergenceValue(max(0.0, P.base.from_nats(total / (alpha - 1))), alpha, P.base)


def statistical_distance(P: Pmf, Q: Pmf) -> float:
    _check_pair(P, Q, same_base=False)
    return 0.5 * math.fsum(np.abs(P.values - Q.values))


def binary_entropy(r: float, base: LogBase = BITS) -> float:
    if r <= 0 or r >= 1:
        return 0.0
    return base.from_nats(-r * math.log(r) - (1 - r) * math.log(1 - r))


# -- noise laws -------------------------------------------------------------------


def _check_rate(r: float) -> None:
    if not 0.0 <= r <= 1.0:
        raise DomainError(f"Bernoulli parameter must lie in [0, 1], got {r}")


def bernoulli_product(r: float, n: int, base: LogBase = BITS) -> Pmf:
    _check_rate(r)
    check_dense(n)
    arr = np.ones(1)
    for _ in range(n):
        arr = np.concatenate((arr * (1 - r), arr * r))
    return Pmf(arr, n, 2, base, validate=False)


def _parity_of(indices: np.ndarray, mask: int) -> np.ndarray:
    return np.bitwise_count(indices & mask) & 1


def _check_support(n: int, support: PackedVector, parity: int) -> None:
    if support.q != 2 or support.n != n:
        raise DomainError("support must be a binary vector of length n")
    if support.data == 0:
        raise DomainError("support vector must be nonzero")
    if parity not in (0, 1):
        raise DomainError("parity must be 0 or 1")


def parity_conditioned(r: float, n: int, support: PackedVector, parity: int, base: LogBase = BITS) -> Pmf:
    """Ber(r)^n conditioned on <x, support> = parity."""
    _check_support(n, support, parity)
    P = bernoulli_product(r, n, base)
    idx = np.arange(len(P.values), dtype=np.int64)
    w = np.where(_parity_of(idx, support.data) == parity, P.values, 0.0)
    total = math.fsum(w)
    if total == 0:
        raise DomainError("conditioning event has probability zero")
    return Pmf(w / total, n, 2, base, validate=False)


def parity_forced(r: float, n: int, support: PackedVector, parity: int, base: LogBase = BITS) -> Pmf:
    """Ber(r)^n with the highest in-support bit overwritten to meet the parity."""
    _check_support(n, support, parity)
    P = bernoulli_product(r, n, base)
    top = support.data.bit_length() - 1
    rest = support.data & ~(1 << top)
    idx = np.arange(len(P.values), dtype=np.int64)
    forced = (_parity_of(idx, rest) ^ parity).astype(np.int64)
    target = (idx & ~(1 << top)) | (forced << top)
    return Pmf(np.bincount(target, weights=P.values, minlength=len(idx)), n, 2, base, validate=False)


def parity_normalizer(r: float, weight: int, parity: int) -> float:
    """P[<x, t> = parity] for x ~ Ber(r)^n and wt(t) = weight (piling-up)."""
    p1 = (1 - (1 - 2 * r) ** weight) / 2
    return p1 if parity else 1 - p1


class NoiseKind(str, enum.Enum):
    BERNOULLI_PRODUCT = "bernoulli_product"
    POINT_MASS = "point_mass"
    GENERAL = "general"
    PARITY_CONDITIONED = "parity_conditioned"
    PARITY_FORCED = "parity_forced"


@dataclass(frozen=True)
class NoiseModel:
    """Additive noise description; ``pmf(n)`` materializes it."""

    kind: NoiseKind
    r: float | None = None
    vector: PackedVector | None = None
    table: Pmf | None = None
    parity: int | None = None

    @classmethod
    def bernoulli(cls, r: float) -> NoiseModel:
        _check_rate(r)
        return cls(NoiseKind.BERNOULLI_PRODUCT, r=r)

    @classmethod
    def uniform(cls) -> NoiseModel:
        return cls.bernoulli(0.5)

    @classmethod
    def point_mass(cls, v: PackedVector) -> NoiseModel:
        return cls(NoiseKind.POINT_MASS, vector=v)

    @classmethod
    def general(cls, pmf: Pmf) -> NoiseModel:
        return cls(NoiseKind.GENERAL, table=pmf)

    @classmethod
    def conditioned(cls, r: float, support: PackedVector, parity: int) -> NoiseModel:
        _check_rate(r)
        _check_support(support.n, support, parity)
        return cls(NoiseKind.PARITY_CONDITIONED, r=r, vector=support, parity=parity)

    @classmethod
    def forced(cls, r: float, support: PackedVector, parity: int) -> NoiseModel:
        _check_rate(r)
        _check_support(support.n, support, parity)
        return cls(NoiseKind.PARITY_FORCED, r=r, vector=support, parity=parity)

    @property
    def is_iid(self) -> bool:
        """Coordinates independent and identically distributed (permutation invariant)."""
        return self.kind is NoiseKind.BERNOULLI_PRODUCT

    def pmf(self, n: int, base: LogBase = BITS) -> Pmf:
        if self.kind is NoiseKind.BERNOULLI_PRODUCT:
            return bernoulli_product(self.r, n, base)
        if self.kind is NoiseKind.GENERAL:
            if self.table.n != n:
                raise ContractError(f"noise table has n={self.table.n}, expected {n}")
            return self.table.with_base(base)
        if self.vector.n != n:
            raise ContractError(f"noise vector has n={self.vector.n}, expected {n}")
        if self.kind is NoiseKind.POINT_MASS:
            return Pmf.point_mass(self.vector, base)
        if self.kind is NoiseKind.PARITY_CONDITIONED:
            return parity_conditioned(self.r, n, self.vector, self.parity, base)
        return parity_forced(self.r, n, self.vector, self.parity, base)

    def describe(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.r is not None:
            out["r"] = self.r
        if self.vector is not None:
            out["vector"] = str(self.vector)
        if self.parity is not None:
            out["parity"] = self.parity
        return out
