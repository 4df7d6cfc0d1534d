"""The dominant exponent f(x) = (1-x)(1-R) - log sum_i p_i^x and its minimum over integer partitions.

Partitions enter through sums of f over their parts. Parts equal to 1 add 0, and
the all-ones partition (the constant term of the expansion) is left out of the
minimum unless asked for.
"""

from __future__ import annotations

import math
from collections.abc import Iterator, Sequence
from dataclasses import asdict, dataclass

import numpy as np

from codesmooth.distributions import NATS, LogBase
from codesmooth.errors import DomainError

MAX_BRUTE_ALPHA = 12


@dataclass(frozen=True)
class SymbolDistribution:
    probs: tuple[float, ...]
    base: LogBase = NATS

    def __post_init__(self):
        if not self.probs or any(p <= 0 for p in self.probs):
            raise DomainError("symbol probabilities must be positive")
        if abs(math.fsum(self.probs) - 1) > 1e-12:
            raise DomainError("symbol probabilities must sum to 1")

    @classmethod
    def of(cls, probs: Sequence[float], base: LogBase = NATS) -> SymbolDistribution:
        return cls(tuple(float(p) for p in probs), base)

    def log_power_sum(self, x: float) -> float:
        """log sum_i p_i^x in this distribution's base."""
        logs = np.log(self.probs) * x
        m = float(logs.max())
        return self.base.from_nats(m + math.log(math.fsum(np.exp(logs - m))))


def exponent_f(x: float, R: float, p: SymbolDistribution) -> float:
    if x <= 0:
        raise DomainError("x must be positive")
    return (1 - x) * (1 - R) - p.log_power_sum(x)


def exponent_f_prime(x: float, R: float, p: SymbolDistribution) -> float:
    """f'(x) = -(1-R) - sum p^x ln p / (ln(base) sum p^x)."""
    logs = np.log(p.probs)
    w = np.exp(logs * x - float((logs * x).max()))
    return -(1 - R) - p.base.from_nats(math.fsum(w * logs) / math.fsum(w))


@dataclass
class ConcavityRow:
    x: float
    f: float
    f_prime: float
    f_second: float
    f_prime_fd: float


@dataclass
class ConcavityReport:
    rows: list[ConcavityRow]
    concave: bool
    derivative_agrees: bool
    max_second: float
    max_derivative_error: float

    def to_csv(self) -> str:
        lines = ["x,f,f_prime,f_second"]
        lines += [f"{r.x:.17g},{r.f:.17g},{r.f_prime:.17g},{r.f_second:.17g}" for r in self.rows]
        return "\n".join(lines) + "\n"


def concavity_report(R: float, p: SymbolDistribution, grid: Sequence[float], h: float = 1e-3,
                     tol: float = 1e-8, derivative_tol: float = 1e-6) -> ConcavityReport:
    """Central-difference f'' on the grid, and the analytic f' against differences."""
    xs = list(grid)
    if any(x - h <= 0 for x in xs) or xs != sorted(xs):
        raise DomainError("grid must be sorted with points above the step size")
    rows = []
    for x in xs:
        lo, mid, hi = exponent_f(x - h, R, p), exponent_f(x, R, p), exponent_f(x + h, R, p)
        rows.append(ConcavityRow(x, mid, exponent_f_prime(x, R, p), (hi - 2 * mid + lo) / h**2, (hi - lo) / (2 * h)))
    max_second = max(r.f_second for r in rows)
    max_err = max(abs(r.f_prime - r.f_prime_fd) for r in rows)
    return ConcavityReport(rows, max_second <= tol, max_err <= derivative_tol, max_second, max_err)


def integer_partitions(total: int, largest: int | None = None) -> Iterator[tuple[int, ...]]:
    """Partitions of ``total`` as non-increasing tuples."""
    largest = total if largest is None else largest
    if total == 0:
        yield ()
        return
    for part in range(min(total, largest), 0, -1):
        for rest in integer_partitions(total - part, part):
            yield (part,) + rest


@dataclass
class PartitionResult:
    alpha: int
    R: float
    partition: tuple[int, ...] | None
    minimum: float | None
    closed_form: float
    candidates: tuple[float, float]
    printed_orientation: tuple[float, float]
    agreement: bool | None
    include_trivial: bool
    base: str

    def to_dict(self) -> dict:
        return asdict(self)


def _check_alpha(alpha: int, low: int = 2) -> None:
    if int(alpha) != alpha or alpha < low:
        raise DomainError(f"alpha must be an integer >= {low}, got {alpha}")


def partition_minimum(alpha: int, R: float, p: SymbolDistribution, include_trivial: bool = False):
    """Minimum of sum_i f(alpha_i) over integer partitions, and its argmin."""
    cache = {x: exponent_f(x, R, p) for x in range(2, alpha + 1)}
    best, arg = math.inf, None
    for part in integer_partitions(alpha):
        if not include_trivial and all(a == 1 for a in part):
            continue
        value = math.fsum(cache[a] for a in part if a > 1)
        if value < best:
            best, arg = value, part
    return best, arg


def _candidates(alpha: int, R: float, p: SymbolDistribution) -> tuple[float, float]:
    return exponent_f(2, R, p), exponent_f(alpha, R, p)


def dominant_exponent_bruteforce(alpha: int, R: float, p: SymbolDistribution,
                                 include_trivial: bool = False) -> PartitionResult:
    _check_alpha(alpha)
    if alpha > MAX_BRUTE_ALPHA:
        raise DomainError(f"brute force is limited to alpha <= {MAX_BRUTE_ALPHA}")
    best, arg = partition_minimum(alpha, R, p, include_trivial)
    cands = _candidates(alpha, R, p)
    closed = min(cands) if not include_trivial else min(*cands, 0.0)
    return PartitionResult(alpha, R, arg, best, closed, cands, (-cands[0], cands[1]),
                           abs(best - closed) <= 1e-10, include_trivial, str(p.base))


def dominant_exponent_closed(alpha: int, R: float, p: SymbolDistribution,
                             include_trivial: bool = False) -> PartitionResult:
    """min(f(2), f(alpha)); f(2) = R + H_2 - 1 in single-letter form.

    ``printed_orientation`` pairs -f(2) with f(alpha) so both sign readings of
    the first candidate are on record. For alpha <= 12 the brute force runs too.
    """
    _check_alpha(alpha)
    cands = _candidates(alpha, R, p)
    closed = min(cands) if not include_trivial else min(*cands, 0.0)
    best = arg = agree = None
    if alpha <= MAX_BRUTE_ALPHA:
        best, arg = partition_minimum(alpha, R, p, include_trivial)
        agree = abs(best - closed) <= 1e-10
    return PartitionResult(alpha, R, arg, best, closed, cands, (-cands[0], cands[1]), agree,
                           include_trivial, str(p.base))


# -- inequality predicates --------------------------------------------------------


def rearrangement_check(a: Sequence[float], b: Sequence[float], trials: int = 100, seed: int = 0,
                        tol: float = 1e-12) -> bool:
    """Similarly ordered pairing dominates random pairings, and the reversed pairing is below them."""
    if len(a) != len(b):
        raise DomainError("sequences must have equal length")
    x, y = np.sort(np.asarray(a, float)), np.sort(np.asarray(b, float))
    best = math.fsum(x * y)
    worst = math.fsum(x * y[::-1])
    scale = tol * max(1.0, abs(best), abs(worst))
    rng = np.random.Generator(np.random.Philox(seed))
    for _ in range(trials):
        s = math.fsum(x * y[rng.permutation(len(y))])
        if s > best + scale or s < worst - scale:
            return False
    return True


def amgm_split_check(x: Sequence[float], splits: Sequence[float], trials: int = 100, seed: int = 0,
                     tol: float = 1e-12) -> bool:
    """sum_i prod_j x_{sigma_j(i)}^{p_j} <= sum_i x_i^p with p = sum_j p_j, for random sigma_j."""
    arr = np.asarray(x, float)
    if np.any(arr < 0):
        raise DomainError("entries must be non-negative")
    p = math.fsum(splits)
    target = math.fsum(arr**p)
    rng = np.random.Generator(np.random.Philox(seed))
    for trial in range(trials):
        prod = np.ones(len(arr))
        for pj in splits:
            perm = np.arange(len(arr)) if trial == 0 else rng.permutation(len(arr))
            prod = prod * arr[perm] ** pj
        if math.fsum(prod) > target + tol * max(1.0, target):
            return False
    return True
