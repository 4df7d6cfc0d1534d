"""Smoothed code distributions, ensemble-averaged divergences and averaging identities.

For a linear code C and additive noise W the smoothed law is the uniform law on
C convolved with W. It is constant on each coset s + C, where it equals
W(s + C) / |C|, so batched binary statistics only need the coset masses.
"""

from __future__ import annotations

import functools
import itertools
import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from codesmooth.codes import (
    DEFAULT_ENUM_BUDGET,
    EnsembleSpec,
    Family,
    LinearCode,
    enumerate_linear_codes,
    enumerate_quasi_cyclic,
    enumerate_self_dual_doubly_even,
    gaussian_binomial,
    qc_balance_condition,
    qc_membership_count,
    qc_orbits,
    sample_linear_codes,
    self_dual_doubly_even_count,
)
from codesmooth.distributions import (
    BITS,
    KL_ROUTING,
    LogBase,
    NoiseKind,
    NoiseModel,
    Pmf,
    check_dense,
    convolve,
    renyi_entropy,
)
from codesmooth.errors import CapacityError, DomainError, UnsupportedError
from codesmooth.gf import PackedVector, popcount, rank_of_rows

IDENTITY_TOL = 1e-12
BATCH_CELLS = 1 << 22


# -- single codes -----------------------------------------------------------------


def code_uniform_pmf(code: LinearCode, base: LogBase = BITS) -> Pmf:
    check_dense(code.n, code.q)
    arr = np.zeros(code.q**code.n)
    arr[code.codeword_indices()] = 1.0 / code.size()
    return Pmf(arr, code.n, code.q, base, validate=False)


def smoothed_pmf(code: LinearCode, noise: NoiseModel, base: LogBase = BITS) -> Pmf:
    """Law of U_C + N."""
    return convolve(code_uniform_pmf(code, base), noise.pmf(code.n, base))


def exp_divergence_to_uniform(P: Pmf, alpha: float) -> float:
    """q^{(alpha-1) D_alpha(P || U)} = |space|^{alpha-1} * sum P^alpha."""
    p = P.values[P.values > 0]
    return math.exp((alpha - 1) * P.n * math.log(P.q) + math.log(math.fsum(p**alpha)))


def _coset_labels(rows: np.ndarray, pivots: np.ndarray, n: int) -> np.ndarray:
    """Each y reduced modulo the code (zeros at every pivot), for a batch of RREF generators."""
    ys = np.broadcast_to(np.arange(1 << n, dtype=np.int64), (rows.shape[0], 1 << n)).copy()
    for i in range(rows.shape[1]):
        ys ^= ((ys >> pivots[:, i : i + 1]) & 1) * rows[:, i : i + 1]
    return ys


def _coset_representatives(pivots: np.ndarray, n: int) -> np.ndarray:
    """The 2^{n-k} vectors vanishing on each code's pivots (one batch row per code)."""
    batch, k = pivots.shape
    is_pivot = np.zeros((batch, n), dtype=bool)
    np.put_along_axis(is_pivot, pivots, True, axis=1)
    free = np.argsort(is_pivot, axis=1, kind="stable")[:, : n - k]
    m = np.arange(1 << (n - k), dtype=np.int64)
    reps = np.zeros((batch, 1 << (n - k)), dtype=np.int64)
    for j in range(n - k):
        reps |= ((m >> j) & 1)[None, :] << free[:, j : j + 1]
    return reps


def _coset_stats(labels: np.ndarray, reps: np.ndarray, noise: np.ndarray, n: int, k: int,
                 alphas: Sequence[float]) -> dict[float, np.ndarray]:
    """Per-code q^{(alpha-1)D} (or D in bits at alpha = 1) from coset masses w_s = W(s + C).

    The smoothed law is 2^-k w_s on each coset, so sum_y P^alpha = 2^{-k(alpha-1)} sum_s w_s^alpha
    and D_1 = n - k - H(w).
    """
    batch, size = labels.shape
    flat = (labels + (np.arange(batch, dtype=np.int64) << n)[:, None]).ravel()
    w = np.bincount(flat, weights=np.tile(noise, batch), minlength=batch * size).reshape(batch, size)
    w = np.take_along_axis(w, reps, axis=1)
    out = {}
    for a in alphas:
        if abs(a - 1) < KL_ROUTING:
            with np.errstate(divide="ignore", invalid="ignore"):
                wlogw = np.where(w > 0, w * np.log2(np.where(w > 0, w, 1.0)), 0.0)
            out[a] = np.maximum(n - k + wlogw.sum(axis=1), 0.0)
        else:
            out[a] = np.exp2((a - 1) * (n - k)) * np.sum(w**a, axis=1)
    return out


def code_statistics_multi(codes: Iterable[LinearCode], noises: Sequence[NoiseModel], n: int,
                          alphas: Sequence[float]) -> list[dict[float, np.ndarray]]:
    """Per-code statistics for several noise laws at once, binary codes only.

    Entry i of the result maps each alpha to an array over codes (iteration
    order) of q^{(alpha-1)D} (or D in bits for alpha = 1) under ``noises[i]``.
    """
    check_dense(n)
    laws = [nz.pmf(n).values for nz in noises]
    batch = max(1, BATCH_CELLS >> n)
    chunks: list[dict[float, list[np.ndarray]]] = [{a: [] for a in alphas} for _ in noises]
    rows: list[tuple[int, ...]] = []
    pivots: list[tuple[int, ...]] = []
    dim = None

    def flush():
        if rows:
            r = np.array(rows, dtype=np.int64).reshape(len(rows), -1)
            piv = np.array(pivots, dtype=np.int64).reshape(r.shape)
            labels = _coset_labels(r, piv, n)
            reps = _coset_representatives(piv, n)
            for i, law in enumerate(laws):
                stats = _coset_stats(labels, reps, law, n, r.shape[1], alphas)
                for a in alphas:
                    chunks[i][a].append(stats[a])
            rows.clear()
            pivots.clear()

    for code in codes:
        if code.q != 2:
            raise UnsupportedError("batched statistics are binary only")
        if code.n != n:
            raise DomainError("all codes must share the block length")
        if code.k != dim:
            flush()
            dim = code.k
        rows.append(code.rows)
        pivots.append(code.pivots)
        if len(rows) >= batch:
            flush()
    flush()
    return [{a: np.concatenate(c[a]) if c[a] else np.zeros(0) for a in alphas} for c in chunks]


def code_statistics(codes: Iterable[LinearCode], noise: NoiseModel, n: int, alphas: Sequence[float]) -> dict[float, np.ndarray]:
    return code_statistics_multi(codes, [noise], n, alphas)[0]


# -- bounds -----------------------------------------------------------------------


def renyi_smoothing_bound(n: int, k: int, alpha: float, noise: NoiseModel, form: str = "rate", q: int = 2) -> float:
    """q^{(alpha-1) n (1 - R - H_alpha(W)/n)} + 1, or the same before substituting H_alpha."""
    if alpha <= 1:
        raise DomainError("the bound needs alpha > 1")
    W = noise.pmf(n, LogBase.base_q(q))
    if form == "rate":
        R = k / n
        return q ** ((alpha - 1) * n * (1 - R - renyi_entropy(W, alpha) / n)) + 1
    if form == "raw":
        p = W.values[W.values > 0]
        return q ** ((alpha - 1) * (n - k)) * math.fsum(p**alpha) + 1
    raise DomainError(f"unknown bound form {form!r}")


def rate_threshold(n: int, alpha: float, noise: NoiseModel, q: int = 2) -> float:
    """Rate above which the bound's first term decays: 1 - H_alpha(W)/n."""
    return 1 - renyi_entropy(noise.pmf(n, LogBase.base_q(q)), alpha) / n


# -- exact ensemble expectation for integer alpha ---------------------------------


@functools.cache
def _subspace_lattice(alpha: int):
    """Subspaces of F_2^alpha with their duals' vector lists and the containment relation."""
    spaces = []
    for d in range(alpha + 1):
        for code in enumerate_linear_codes(alpha, d):
            members = frozenset(int(i) for i in code.codeword_indices())
            dual = tuple(int(i) for i in code.dual().codeword_indices())
            spaces.append((d, members, dual))
    return spaces


def integer_alpha_expectation(n: int, k: int, r: float | Fraction, alpha: int) -> Fraction:
    """Exact E_F 2^{(alpha-1) D_alpha(U_F + N || U)} over all [n, k] binary codes, N ~ Ber(r)^n.

    Expands sum_y P_F(y)^alpha over alpha-tuples of codewords; a tuple lies in a
    random code with probability [n-rho, k-rho]/[n, k] where rho is its rank. Tuples
    are grouped by their space of linear relations K, and the sum over tuples whose
    relation space contains K factorizes over coordinates. Moebius inversion on
    the subspace lattice isolates the exact relation space.
    """
    if alpha < 2 or int(alpha) != alpha:
        raise DomainError("integer alpha >= 2 required")
    gaussian_binomial(n, k)
    r = Fraction(r)
    w = (1 - r, r)
    single = [w[0] ** (alpha - j) * w[1] ** j + w[1] ** (alpha - j) * w[0] ** j for j in range(alpha + 1)]
    spaces = _subspace_lattice(alpha)
    contained = [sum(single[popcount(x)] for x in dual) ** n for _, _, dual in spaces]
    total_codes = gaussian_binomial(n, k)
    acc = Fraction(0)
    for i, (d, members, _) in enumerate(spaces):
        rho = alpha - d
        if rho > k:
            continue
        exact = Fraction(0)
        for j, (d2, members2, _) in enumerate(spaces):
            if d2 >= d and members <= members2:
                e = d2 - d
                exact += (-1) ** e * 2 ** (e * (e - 1) // 2) * contained[j]
        acc += exact * Fraction(gaussian_binomial(n - rho, k - rho), total_codes)
    return acc * Fraction(2 ** (n * (alpha - 1)), 2 ** (k * alpha))


# -- ensemble reports -------------------------------------------------------------


@dataclass
class SmoothingReport:
    n: int
    k: int
    q: int
    alpha: float
    rate: float
    noise: dict
    ensemble: dict
    quantity: str
    expectation: float
    bound: float | None
    div_min: float | None
    div_mean: float | None
    div_max: float | None
    mode: str
    samples: int | None
    stderr: float | None
    base: str = "bits"

    def to_dict(self) -> dict:
        return asdict(self)


def _divergence_from_stat(stat: np.ndarray, alpha: float) -> np.ndarray:
    if abs(alpha - 1) < KL_ROUTING:
        return stat
    return np.log2(stat) / (alpha - 1)


def _report(ensemble: EnsembleSpec, noise: NoiseModel, alpha: float, stats: np.ndarray, mode: str,
            weights: np.ndarray | None = None, samples: int | None = None) -> SmoothingReport:
    kl = abs(alpha - 1) < KL_ROUTING
    if weights is None:
        weights = np.ones(len(stats))
    total = float(weights.sum())
    mean = math.fsum(stats * weights) / total
    stderr = None
    if mode == "monte_carlo":
        stderr = float(np.std(stats, ddof=1) / math.sqrt(len(stats))) if len(stats) > 1 else math.inf
    divs = _divergence_from_stat(stats, alpha)
    bound = None if kl or alpha <= 1 else renyi_smoothing_bound(ensemble.n, ensemble.k, alpha, noise)
    return SmoothingReport(
        n=ensemble.n, k=ensemble.k, q=ensemble.q, alpha=alpha, rate=ensemble.k / ensemble.n,
        noise=noise.describe(), ensemble=ensemble.describe(),
        quantity="kl" if kl else "exp_divergence", expectation=mean, bound=bound,
        div_min=float(divs.min()), div_mean=math.fsum(divs * weights) / total, div_max=float(divs.max()),
        mode=mode, samples=samples if samples is not None else len(stats), stderr=stderr,
    )


def _qary_statistics(codes: Iterable[LinearCode], noise: NoiseModel, alphas: Sequence[float]) -> dict[float, np.ndarray]:
    out: dict[float, list[float]] = {a: [] for a in alphas}
    for code in codes:
        P = smoothed_pmf(code, noise, LogBase.base_q(code.q))
        for a in alphas:
            if abs(a - 1) < KL_ROUTING:
                p = P.values[P.values > 0]
                out[a].append(max(0.0, P.n + math.fsum(p * np.log(p)) / math.log(P.q)))
            else:
                out[a].append(exp_divergence_to_uniform(P, a))
    return {a: np.array(v) for a, v in out.items()}


def ensemble_reports(
    ensemble: EnsembleSpec,
    noise: NoiseModel,
    alphas: Sequence[float],
    *,
    samples: int | None = None,
    seed: int | None = None,
    budget: int = DEFAULT_ENUM_BUDGET,
) -> list[SmoothingReport]:
    """One report per alpha, sharing the per-code smoothed laws.

    Exhaustive ensembles are averaged exactly when they fit ``budget``; an
    ALL_LINEAR ensemble with ``samples`` set is estimated from uniform code
    draws instead. Quasi-cyclic ensembles under i.i.d. noise are averaged over
    coordinate-permutation classes, each weighted by its size.
    """
    n = ensemble.n
    weights = None
    if ensemble.family is Family.SAMPLED_LINEAR or samples is not None:
        if ensemble.family not in (Family.SAMPLED_LINEAR, Family.ALL_LINEAR):
            raise UnsupportedError("Monte Carlo mode samples linear codes only")
        count = ensemble.count if samples is None else samples
        seed = ensemble.seed if seed is None else seed
        if seed is None:
            raise DomainError("Monte Carlo mode needs a seed")
        codes = sample_linear_codes(n, ensemble.k, count, seed, ensemble.q)
        mode = "monte_carlo"
    elif ensemble.family is Family.QUASI_CYCLIC and noise.is_iid:
        orbits = qc_orbits(ensemble.t)
        codes = [qc.code for qc, _ in orbits]
        weights = np.array([m for _, m in orbits], dtype=np.float64)
        mode = "exact_orbits"
    else:
        size = ensemble.size()
        if size > budget:
            raise CapacityError(f"ensemble of {size} codes exceeds the enumeration budget {budget}")
        codes = iter(ensemble)
        mode = "exact"
    if ensemble.q == 2:
        stats = code_statistics(codes, noise, n, alphas)
    else:
        stats = _qary_statistics(codes, noise, alphas)
    return [_report(ensemble, noise, a, stats[a], mode, weights, samples=count if mode == "monte_carlo" else None)
            for a in alphas]


def ensemble_expected_exp_divergence(ensemble: EnsembleSpec, noise: NoiseModel, alpha: float, **kwargs) -> SmoothingReport:
    return ensemble_reports(ensemble, noise, [alpha], **kwargs)[0]


def formula_report(n: int, k: int, noise: NoiseModel, alpha: int) -> SmoothingReport:
    """Exact report for ALL_LINEAR with Bernoulli noise and integer alpha, without enumeration."""
    if noise.kind is not NoiseKind.BERNOULLI_PRODUCT:
        raise UnsupportedError("closed-form expectation needs Bernoulli product noise")
    value = float(integer_alpha_expectation(n, k, noise.r, int(alpha)))
    ens = EnsembleSpec.all_linear(n, k)
    return SmoothingReport(
        n=n, k=k, q=2, alpha=alpha, rate=k / n, noise=noise.describe(), ensemble=ens.describe(),
        quantity="exp_divergence", expectation=value, bound=renyi_smoothing_bound(n, k, alpha, noise),
        div_min=None, div_mean=None, div_max=None, mode="exact_formula", samples=None, stderr=0.0,
    )


# -- bound sweep ----------------------------------------------------------------


@dataclass
class BoundCheck:
    n: int
    k: int
    alpha: float
    r: float
    expectation: float
    stderr: float
    bound: float
    mode: str
    holds: bool


def renyi_bound_sweep(
    ns: Sequence[int],
    alphas: Sequence[float],
    rs: Sequence[float],
    *,
    exact_budget: int = 1 << 18,
    samples: int = 4000,
    seed: int = 0,
    tol: float = 1e-10,
) -> list[BoundCheck]:
    """E_F 2^{(alpha-1)D} against the bound for every ALL_LINEAR [n, k] meeting the rate condition.

    Ensembles up to ``exact_budget`` codes are averaged exactly; larger ones are
    estimated from ``samples`` uniform codes and pass only if mean + 3 SE <= bound.
    """
    noises = [NoiseModel.bernoulli(r) for r in rs]
    out = []
    for n in ns:
        thresholds = {(a, r): rate_threshold(n, a, nz) for a in alphas for r, nz in zip(rs, noises)}
        for k in range(n + 1):
            wanted = [(a, r) for (a, r), th in thresholds.items() if k / n >= th - 1e-12]
            if not wanted:
                continue
            exact = gaussian_binomial(n, k) <= exact_budget
            codes = enumerate_linear_codes(n, k) if exact else sample_linear_codes(n, k, samples, seed + 1000 * n + k)
            stats = code_statistics_multi(codes, noises, n, alphas)
            for a, r in wanted:
                vals = stats[rs.index(r)][a]
                mean = math.fsum(vals) / len(vals)
                se = 0.0 if exact else float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
                bound = renyi_smoothing_bound(n, k, a, noises[rs.index(r)])
                out.append(BoundCheck(n, k, a, r, mean, se, bound, "exact" if exact else "monte_carlo",
                                      mean + 3 * se <= bound + tol))
    return out


# -- scans ------------------------------------------------------------------------


@dataclass
class ScanRow:
    n: int
    k: int
    alpha: float
    excess: float | None
    bound_excess: float | None
    ratio: float | None
    stderr: float | None
    mode: str
    skipped: str | None = None


def fixed_rate(R: float) -> Callable[[int], int]:
    return lambda n: min(n, max(0, round(R * n)))


def rate_at_least(R: float) -> Callable[[int], int]:
    """Smallest k with k/n >= R, so an offset above threshold is never rounded away."""
    return lambda n: min(n, max(0, math.ceil(R * n - 1e-9)))


def smoothing_scan(
    ns: Sequence[int],
    rate_rule: Callable[[int], int],
    alpha: float,
    noise: NoiseModel,
    *,
    samples: int = 2000,
    seed: int = 0,
    budget: int = 1 << 16,
) -> list[ScanRow]:
    """E - 1 against the bound's excess over a grid of n.

    Integer alpha with Bernoulli noise uses the closed form; otherwise exact
    enumeration within ``budget`` and uniform code sampling beyond it.
    """
    rows = []
    for n in ns:
        k = rate_rule(n)
        try:
            if noise.kind is NoiseKind.BERNOULLI_PRODUCT and float(alpha).is_integer() and alpha >= 2:
                rep = formula_report(n, k, noise, int(alpha))
            else:
                ens = EnsembleSpec.all_linear(n, k)
                exhaustive = gaussian_binomial(n, k) <= budget
                rep = ensemble_expected_exp_divergence(
                    ens, noise, alpha, samples=None if exhaustive else samples, seed=seed
                )
        except CapacityError as exc:
            rows.append(ScanRow(n, k, alpha, None, None, None, None, "skipped", str(exc)))
            continue
        excess = rep.expectation - 1 if rep.quantity == "exp_divergence" else rep.expectation
        bound_excess = None if rep.bound is None else rep.bound - 1
        ratio = excess / bound_excess if bound_excess else None
        rows.append(ScanRow(n, k, alpha, excess, bound_excess, ratio, rep.stderr, rep.mode))
    return rows


def strictly_decreasing(rows: Sequence[ScanRow], sigmas: float = 3.0) -> bool:
    """E - 1 strictly decreasing, with each step separated by ``sigmas`` standard errors."""
    live = [r for r in rows if r.skipped is None]
    if len(live) < 2:
        return False
    for a, b in zip(live, live[1:]):
        se_a, se_b = a.stderr or 0.0, b.stderr or 0.0
        if not b.excess + sigmas * se_b < a.excess - sigmas * se_a:
            return False
    return True


def scan_to_csv(rows: Sequence[ScanRow]) -> str:
    cols = ["n", "k", "alpha", "excess", "bound_excess", "ratio", "stderr", "mode", "skipped"]
    lines = [",".join(cols)]
    for r in rows:
        vals = []
        for c in cols:
            v = getattr(r, c)
            vals.append("" if v is None else (f"{v:.17g}" if isinstance(v, float) else str(v)))
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


# -- averaging identities ---------------------------------------------------------


@dataclass
class AveragingCheck:
    family: str
    params: dict
    lhs: float
    rhs: float
    abs_diff: float
    relation: str
    exact: bool
    holds: bool
    tolerance: float = IDENTITY_TOL
    skipped: str | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def tabulate(f, n: int, q: int = 2, rational: bool = False):
    """Dense table of f over F_q^n; ``f`` is a callable on PackedVector or a table already."""
    size = q**n
    if callable(f):
        vals = [f(PackedVector.from_index(n, i, q)) for i in range(size)]
    else:
        vals = list(f)
        if len(vals) != size:
            raise DomainError(f"table has {len(vals)} entries, expected {size}")
    if rational:
        return [Fraction(v) for v in vals]
    return np.asarray(vals, dtype=np.float64)


def _settle(family: str, params: dict, lhs, rhs, relation: str, rational: bool, **extra) -> AveragingCheck:
    diff = abs(lhs - rhs)
    if relation == "==":
        holds = diff == 0 if rational else diff <= IDENTITY_TOL
    else:
        holds = lhs <= rhs if rational else lhs <= rhs + IDENTITY_TOL
    return AveragingCheck(family, params, float(lhs), float(rhs), float(diff), relation, rational, bool(holds),
                          extra=extra)


@functools.lru_cache(maxsize=16)
def _codeword_table(n: int, k: int, q: int) -> np.ndarray:
    """Codeword indices of every [n, k] code, one row per code in enumeration order."""
    rows = [code.codeword_indices() for code in enumerate_linear_codes(n, k, q)]
    return np.stack(rows)


def _per_code_sums(table: np.ndarray, values, rational: bool):
    if rational:
        return [sum((values[i] for i in row), Fraction(0)) for row in table.tolist()]
    return [math.fsum(s) for s in values[table]]


def verify_averaging_linear(n: int, k: int, q: int, f, rational: bool = False) -> AveragingCheck:
    """Mean over all [n, k] codes of sum_{a != 0} f(F(a)) against (q^k-1)/(q^n-1) sum_{c != 0} f(c)."""
    values = tabulate(f, n, q, rational)
    table = _codeword_table(n, k, q)[:, 1:]
    per_code = _per_code_sums(table, values, rational)
    count = len(per_code)
    ratio = Fraction(q**k - 1, q**n - 1)
    if rational:
        lhs = sum(per_code, Fraction(0)) / count
        rhs = ratio * sum(values[1:], Fraction(0))
    else:
        lhs = math.fsum(per_code) / count
        rhs = float(ratio) * math.fsum(values[1:])
    return _settle("linear", {"n": n, "k": k, "q": q}, lhs, rhs, "==", rational, codes=count)


def positive_compositions(total: int, parts: int) -> list[tuple[int, ...]]:
    """Ordered splits of ``total`` into ``parts`` integers >= 1."""
    return [c for c in itertools.product(range(1, total + 1), repeat=parts) if sum(c) == total]


@functools.lru_cache(maxsize=32)
def _tuple_ranks(n: int, r: int, q: int, distinct: bool) -> tuple[np.ndarray, np.ndarray]:
    nonzero = range(1, q**n)
    tuples = [t for t in itertools.product(nonzero, repeat=r) if not distinct or len(set(t)) == r]
    arr = np.array(tuples, dtype=np.int64).reshape(-1, r)
    if q == 2:
        ranks = [rank_of_rows(t, n) for t in tuples]
    else:
        vecs = {i: PackedVector.from_index(n, i, q).data for i in nonzero}
        ranks = [rank_of_rows([vecs[i] for i in t], n, q) for t in tuples]
    return arr, np.array(ranks, dtype=np.int64)


@functools.lru_cache(maxsize=32)
def _message_tuples(k: int, r: int, q: int, distinct: bool) -> np.ndarray:
    tuples = [t for t in itertools.product(range(1, q**k), repeat=r) if not distinct or len(set(t)) == r]
    return np.array(tuples, dtype=np.int64).reshape(-1, r)


def verify_extended_averaging(n: int, k: int, q: int, exponents: Sequence[float], f, distinct: bool = False) -> AveragingCheck:
    """E_F sum over r-tuples of nonzero messages of prod f^{p_i}(F(a_i)) against the rank-stratified bound.

    Tuples are ordered and may repeat entries (the same domain on both sides);
    ``distinct`` restricts both sides to pairwise distinct entries.
    """
    r = len(exponents)
    if not 1 <= r <= 3:
        raise DomainError("tuple length must be 1, 2 or 3")
    values = tabulate(f, n, q)
    if np.any(values < 0):
        raise DomainError("f must be non-negative")
    powered = [values ** p for p in exponents]
    messages = _message_tuples(k, r, q, distinct)
    lhs_terms = []
    for code in enumerate_linear_codes(n, k, q):
        cw = code.codeword_indices()
        if len(messages) == 0:
            lhs_terms.append(0.0)
            continue
        prod = np.ones(len(messages))
        for i in range(r):
            prod = prod * powered[i][cw[messages[:, i]]]
        lhs_terms.append(math.fsum(prod))
    lhs = math.fsum(lhs_terms) / len(lhs_terms)
    tuples, ranks = _tuple_ranks(n, r, q, distinct)
    prod = np.ones(len(tuples))
    for i in range(r):
        prod = prod * powered[i][tuples[:, i]]
    ratio = (q**k - 1) / (q**n - 1)
    by_rank = {int(rho): math.fsum(prod[ranks == rho]) for rho in np.unique(ranks)}
    rhs = math.fsum(ratio**rho * s for rho, s in by_rank.items())
    return _settle("extended", {"n": n, "k": k, "q": q, "exponents": list(exponents), "distinct": distinct},
                   lhs, rhs, "<=", False, rank_sums={str(k_): v for k_, v in by_rank.items()})


def _doubly_even_mask(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    return np.bitwise_count(idx) % 4 == 0


def verify_averaging_self_dual(t: int, f, budget: int = DEFAULT_ENUM_BUDGET) -> AveragingCheck:
    """Mean over doubly-even self-dual codes of sum over codewords outside {0, 1} of f.

    The right side is (1/(2^{t-2}+1)) times the sum of f over doubly-even vectors
    outside {0, 1}. The reading that only drops message 0 is computed as well.
    """
    n = 2 * t
    params = {"t": t, "n": n}
    try:
        codes = list(enumerate_self_dual_doubly_even(t, budget=budget))
    except CapacityError as exc:
        return AveragingCheck("selfdual", params, math.nan, math.nan, math.nan, "==", False, False, skipped=str(exc))
    values = tabulate(f, n)
    ones = (1 << n) - 1
    per_code, per_code_literal = [], []
    for code in codes:
        cw = code.codeword_indices()
        inner = cw[(cw != 0) & (cw != ones)]
        per_code.append(math.fsum(values[inner]))
        per_code_literal.append(math.fsum(values[cw[cw != 0]]))
    lhs = math.fsum(per_code) / len(codes)
    mask = _doubly_even_mask(n)
    mask[0] = mask[ones] = False
    rhs = math.fsum(values[mask]) / (2 ** (t - 2) + 1)
    literal = math.fsum(per_code_literal) / len(codes)
    return _settle("selfdual", params, lhs, rhs, "==", False, codes=len(codes),
                   expected_codes=self_dual_doubly_even_count(t),
                   conventions={"exclude_zero_and_ones": lhs,
                                "exclude_zero_only": literal,
                                "exclude_zero_only_holds": abs(literal - rhs) <= IDENTITY_TOL})


def verify_averaging_qc(t: int, f) -> AveragingCheck:
    """Mean over the quasi-cyclic family of sum over messages outside {0, 1} of f(F(a)).

    The right side is (1/(2^{t-1}-1)) times the sum of f over even-weight vectors
    outside {0, 1}. Two readings of the excluded message are evaluated: the
    all-ones message (which encodes to the all-ones word) and the constant
    polynomial 1. The report also says whether f is supported on vectors that
    lie in exactly one family code, where the identity is exact.
    """
    n = 2 * t
    params = {"t": t, "n": n}
    if not qc_balance_condition(t):
        return AveragingCheck("qc", params, math.nan, math.nan, math.nan, "==", False, False,
                              skipped=f"balance condition fails for t={t}")
    check_dense(n)
    values = tabulate(f, n)
    family = list(enumerate_quasi_cyclic(t))
    ones_msg, unit_msg = (1 << t) - 1, 1
    sums_ones, sums_unit = [], []
    for qc in family:
        cw = qc.code.codeword_indices()
        keep = np.ones(len(cw), dtype=bool)
        keep[0] = False
        a = keep.copy()
        a[ones_msg] = False
        b = keep.copy()
        b[unit_msg] = False
        sums_ones.append(math.fsum(values[cw[a]]))
        sums_unit.append(math.fsum(values[cw[b]]))
    lhs = math.fsum(sums_ones) / len(family)
    lhs_unit = math.fsum(sums_unit) / len(family)
    idx = np.arange(1 << n, dtype=np.int64)
    mask = np.bitwise_count(idx) % 2 == 0
    mask[0] = mask[(1 << n) - 1] = False
    rhs = math.fsum(values[mask]) / (2 ** (t - 1) - 1)
    support = np.flatnonzero(values)
    half = (1 << t) - 1
    balanced = all(
        (int(v) & half) not in (0, half) and (int(v) >> t) not in (0, half) and popcount(int(v)) % 2 == 0
        for v in support
    )
    return _settle("qc", params, lhs, rhs, "==", False, codes=len(family),
                   conventions={"exclude_all_ones_message": lhs,
                                "exclude_unit_polynomial": lhs_unit,
                                "exclude_unit_polynomial_holds": abs(lhs_unit - rhs) <= IDENTITY_TOL},
                   support_in_unique_membership_set=balanced)


def qc_membership_census(t: int, samples: int | None = None, seed: int = 0) -> dict:
    """Membership multiplicities of even-weight vectors outside {0, 1}.

    Exhaustive when ``samples`` is None, otherwise a uniform sample of that size.
    """
    n = 2 * t
    rng = np.random.Generator(np.random.Philox(seed))
    ones = (1 << n) - 1
    if samples is None:
        vectors = (v for v in range(1, ones) if popcount(v) % 2 == 0)
    else:
        def draw():
            for _ in range(samples):
                while True:
                    v = int(rng.integers(1, ones))
                    if popcount(v) % 2 == 0:
                        break
                yield v
        vectors = draw()
    histogram: dict[int, int] = {}
    checked = 0
    for v in vectors:
        m = qc_membership_count(PackedVector(n, v), t)
        histogram[m] = histogram.get(m, 0) + 1
        checked += 1
    violations = checked - histogram.get(1, 0)
    return {"t": t, "checked": checked, "exhaustive": samples is None, "histogram": histogram,
            "violations": violations, "unique_membership": violations == 0}


# -- self-dual cross entropy ------------------------------------------------------


def self_dual_cross_entropy(noise: NoiseModel, alpha: float, n: int, base: LogBase = BITS) -> dict:
    """H'_alpha(W) = (1/(1-alpha)) log sum_z W(z) W(z+1)^{alpha-1}, next to H_alpha(W)."""
    if alpha <= 0 or abs(alpha - 1) < KL_ROUTING:
        raise DomainError("alpha must be positive and different from 1")
    W = noise.pmf(n, base)
    w = W.values
    shifted = w[np.arange(len(w)) ^ ((1 << n) - 1)]
    mask = (w > 0) & (shifted > 0)
    if not np.any(mask):
        cross = math.inf
    else:
        logs = np.log(w[mask]) + (alpha - 1) * np.log(shifted[mask])
        m = float(logs.max())
        cross = base.from_nats((m + math.log(math.fsum(np.exp(logs - m)))) / (1 - alpha))
    h = renyi_entropy(W, alpha)
    return {"alpha": alpha, "n": n, "h_alpha": h, "h_prime_alpha": cross,
            "rearrangement_holds": bool(h <= cross + 1e-10),
            "base": str(base)}
