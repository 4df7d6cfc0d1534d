"""Decoding instances, the Bernoulli-multiplier transform to LPN samples, and exact divergence of its output.

A multiplier v ~ Ber(r)^n turns an instance y = xG + e into the sample
(a, b) = (G v^T, <v, y>), and b = <a, x> + <v, e>. For n up to 22 the joint law
of (a, <v, e>) is accumulated exactly over all 2^n multipliers.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from codesmooth.codes import LinearCode
from codesmooth.distributions import (
    BITS,
    KL_ROUTING,
    DivergenceValue,
    NoiseModel,
    Pmf,
    binary_entropy,
    parity_conditioned,
    parity_forced,
    renyi_divergence,
    renyi_entropy,
    shannon_entropy,
)
from codesmooth.errors import CapacityError, DomainError
from codesmooth.gf import PackedMatrix, PackedVector
from codesmooth.smoothing import exp_divergence_to_uniform, smoothed_pmf

MAX_EXACT_N = 22
MAX_EXACT_K = 16


@dataclass(frozen=True)
class AdpInstance:
    G: PackedMatrix
    x: PackedVector
    e: PackedVector
    y: PackedVector
    seed: int | None = field(default=None, compare=False)

    @property
    def n(self) -> int:
        return self.G.n

    @property
    def k(self) -> int:
        return self.G.k

    @property
    def t(self) -> int:
        return self.e.weight


@dataclass(frozen=True)
class LpnSample:
    a: PackedVector
    b: int
    v: PackedVector | None = None


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def random_full_rank(n: int, k: int, rng: np.random.Generator) -> PackedMatrix:
    while True:
        G = PackedMatrix.from_array(rng.integers(0, 2, size=(k, n)), 2) if k else PackedMatrix((), n, 2)
        if G.rank() == k:
            return G


def sample_adp_instance(n: int, k: int, t: int, seed: int) -> AdpInstance:
    """Uniform full-rank G, uniform x, e uniform over weight-t vectors."""
    if not (0 <= t <= n and 0 <= k <= n):
        raise DomainError(f"need t <= n and k <= n, got n={n}, k={k}, t={t}")
    rng = _rng(seed)
    G = random_full_rank(n, k, rng)
    x = PackedVector.from_symbols(rng.integers(0, 2, size=k), 2) if k else PackedVector.zeros(0)
    positions = rng.choice(n, size=t, replace=False)
    e = PackedVector(n, sum(1 << int(j) for j in positions))
    y = (G.vec_mul(x) if k else PackedVector.zeros(n)) + e
    return AdpInstance(G, x, e, y, seed)


def _check_rate(r: float, upper: float = 0.5) -> None:
    if not 0.0 <= r <= upper:
        raise DomainError(f"multiplier bias must lie in [0, {upper}], got {r}")


def reduce_sample(inst: AdpInstance, r: float, rng) -> LpnSample:
    """One LPN sample (G v^T, <v, y>) from a fresh multiplier v ~ Ber(r)^n."""
    _check_rate(r)
    rng = _rng(rng)
    v = PackedVector.from_symbols((rng.random(inst.n) < r).astype(int), 2)
    a = inst.G.mul_vec(v) if inst.k else PackedVector.zeros(0)
    return LpnSample(a, v.dot(inst.y), v)


def flip_probability(r: float, t: int) -> float:
    """Piling-up: P[<v, e> = 1] for v ~ Ber(r)^n and wt(e) = t."""
    if not 0.0 <= r <= 1.0 or t < 0:
        raise DomainError("need r in [0, 1] and t >= 0")
    return (1 - (1 - 2 * r) ** t) / 2


# -- exact joint law --------------------------------------------------------------


def _check_exact(G: PackedMatrix, e: PackedVector) -> None:
    if G.q != 2 or e.n != G.n:
        raise DomainError("binary G and e of matching length required")
    if G.n > MAX_EXACT_N or G.k > MAX_EXACT_K:
        raise CapacityError(f"exact enumeration needs n <= {MAX_EXACT_N} and k <= {MAX_EXACT_K}")


def reduction_joint(G: PackedMatrix, e: PackedVector, r: float) -> np.ndarray:
    """P[a, b] over the 2^{k+1} cells a + 2^k b, with a = G v^T and b = <v, e>.

    Multipliers are enumerated by doubling: adding coordinate j splits every
    partial multiplier into v_j = 0 and v_j = 1, which XORs column j of G
    (extended by e_j in bit k) into the cell index.
    """
    _check_exact(G, e)
    _check_rate(r, 1.0)
    k = G.k
    cells = np.zeros(1, dtype=np.int64)
    probs = np.ones(1)
    for j in range(G.n):
        col = G.column(j) | (((e.data >> j) & 1) << k)
        cells = np.concatenate((cells, cells ^ col))
        probs = np.concatenate((probs * (1 - r), probs * r))
    return np.bincount(cells, weights=probs, minlength=1 << (k + 1))


def reduction_target(k: int, p: float) -> np.ndarray:
    """U(F_2^k) x Ber(p) on the same cells."""
    return np.concatenate((np.full(1 << k, (1 - p) / (1 << k)), np.full(1 << k, p / (1 << k))))


def exact_reduction_divergence(G: PackedMatrix, e: PackedVector, r: float, alpha: float,
                               target_p: float | None = None) -> DivergenceValue:
    """D_alpha of the joint law of (G v^T, <v, e>) from U_k x Ber(p), in bits."""
    joint = reduction_joint(G, e, r)
    p = flip_probability(r, e.weight) if target_p is None else target_p
    P = Pmf(joint, G.k + 1, 2, BITS, validate=False)
    Q = Pmf(reduction_target(G.k, p), G.k + 1, 2, BITS, validate=False)
    return renyi_divergence(P, Q, alpha)


def reduction_statistical_distance(G: PackedMatrix, e: PackedVector, r: float) -> float:
    joint = reduction_joint(G, e, r)
    target = reduction_target(G.k, flip_probability(r, e.weight))
    return 0.5 * math.fsum(np.abs(joint - target))


def conditional_decomposition_check(G: PackedMatrix, e: PackedVector, r: float, alpha: float,
                                    tol: float = 1e-10) -> dict:
    """Rebuild D_alpha(joint || U_k x Ber(p)) from the two parity-conditioned multiplier laws.

    Given <v, e> = b the multiplier follows Ber(r)^n conditioned on that parity,
    and D_alpha(G v^T || U_k) equals D_alpha of that law smoothed by the code
    {v : G v^T = 0} against U_n. With p the piling-up value,
    2^{(alpha-1) D} = sum_b P_b 2^{(alpha-1) D_b} (for KL, D = sum_b P_b D_b).
    The parity-forced laws are evaluated alongside for comparison.
    """
    _check_exact(G, e)
    if G.rank() != G.k:
        raise DomainError("decomposition needs a full-rank G")
    if e.data == 0:
        raise DomainError("decomposition needs e != 0")
    direct = exact_reduction_divergence(G, e, r, alpha).value
    kernel = LinearCode.span(G.rows, G.n).dual()
    p1 = flip_probability(r, e.weight)
    kl = abs(alpha - 1) < KL_ROUTING
    branches = []
    for b, pb in ((0, 1 - p1), (1, p1)):
        if pb == 0:
            continue
        row = {"parity": b, "weight": pb}
        for name, law in (("conditioned", NoiseModel.conditioned), ("forced", NoiseModel.forced)):
            S = smoothed_pmf(kernel, law(r, e, b))
            if kl:
                row[name] = max(0.0, S.n - shannon_entropy(S))
            else:
                row[name] = math.log2(exp_divergence_to_uniform(S, alpha)) / (alpha - 1)
        branches.append(row)
    if kl:
        rebuilt = math.fsum(br["weight"] * br["conditioned"] for br in branches)
    else:
        total = math.fsum(br["weight"] * 2 ** ((alpha - 1) * br["conditioned"]) for br in branches)
        rebuilt = math.log2(total) / (alpha - 1)
    diff = abs(direct - rebuilt)
    return {"alpha": alpha, "r": r, "flip_probability": p1, "direct": direct, "decomposed": rebuilt,
            "abs_diff": diff, "agrees": diff <= tol, "branches": branches}


# -- entropy rate -----------------------------------------------------------------


def entropy_rate_check(n: int, t_vec: PackedVector, r: float, alphas=(2.0,), tol: float = 1e-10) -> dict:
    """Entropies of the parity-forced and truly conditioned multiplier laws for both parities."""
    if t_vec.n != n or t_vec.data == 0:
        raise DomainError("t_vec must be a nonzero vector of length n")
    target = (n - 1) * binary_entropy(r)
    rows = []
    for b in (0, 1):
        forced = parity_forced(r, n, t_vec, b)
        row = {"parity": b, "forced_entropy": shannon_entropy(forced), "expected": target}
        try:
            cond = parity_conditioned(r, n, t_vec, b)
        except DomainError:
            cond = None
        row["conditional_entropy"] = None if cond is None else shannon_entropy(cond)
        row["difference"] = None if cond is None else row["conditional_entropy"] - row["forced_entropy"]
        row["renyi"] = {
            str(a): {"forced": renyi_entropy(forced, a), "conditional": None if cond is None else renyi_entropy(cond, a)}
            for a in alphas
        }
        row["forced_matches"] = abs(row["forced_entropy"] - target) <= tol
        rows.append(row)
    return {"n": n, "t_weight": t_vec.weight, "r": r, "rows": rows,
            "forced_matches": all(row["forced_matches"] for row in rows)}


# -- parameters -------------------------------------------------------------------


def binary_entropy_inverse(y: float, tol: float = 1e-12) -> float:
    """The r in [0, 1/2] with h(r) = y, by bisection."""
    if not 0.0 <= y <= 1.0:
        raise DomainError(f"binary entropy takes values in [0, 1], got {y}")
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if binary_entropy(mid) < y:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


@dataclass
class ReductionParams:
    n: int
    k: int
    eps: float
    eta: float
    C: float
    t_exact: float
    t: int
    r: float
    p: float
    target_noise: float
    gap: float
    target_gap: float
    gap_ratio: float
    C_roundtrip: float
    feasible: bool
    gap_within_factor_two: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _t_coefficient(n: int, k: int, eps: float, eta: float) -> float:
    return 2 * math.log(2) * (1 + eta) / (1 - eps) * (1 / math.log2(n / k)) * (k / n)


def reduction_param_calculator(n: int, k: int, eps: float, eta: float, C: float) -> ReductionParams:
    """Solve coefficient * t = C log2(n) for t and set r = h^{-1}(k/n).

    The flip probability p at the rounded t is compared with 1/2 - 1/(2 n^C)
    through the ratio of their gaps to 1/2; no equality is implied.
    """
    if not (0 < eps < 1 and 0 < eta < 1):
        raise DomainError("eps and eta must lie in (0, 1)")
    if not 0 < k < n:
        raise DomainError("need 0 < k < n")
    coef = _t_coefficient(n, k, eps, eta)
    t_exact = C * math.log2(n) / coef
    t = math.ceil(t_exact - 1e-9)
    r = binary_entropy_inverse(k / n)
    p = flip_probability(r, t)
    target_gap = 1 / (2 * n**C)
    gap = 0.5 - p
    return ReductionParams(
        n=n, k=k, eps=eps, eta=eta, C=C, t_exact=t_exact, t=t, r=r, p=p,
        target_noise=0.5 - target_gap, gap=gap, target_gap=target_gap,
        gap_ratio=gap / target_gap, C_roundtrip=t_exact * coef / math.log2(n), feasible=t <= n,
        gap_within_factor_two=0.5 <= gap / target_gap <= 2.0,
    )


# -- text format ------------------------------------------------------------------


def instance_to_text(inst: AdpInstance) -> str:
    lines = [f"{inst.n} {inst.k} 2"]
    lines += ["".join(str(s) for s in inst.G.row(i).symbols()) for i in range(inst.k)]
    lines.append("x " + str(inst.x))
    lines.append("e " + str(inst.e))
    return "\n".join(lines) + "\n"


def instance_from_text(text: str) -> AdpInstance:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    n, k, q = (int(v) for v in lines[0].split())
    if q != 2:
        raise DomainError("instances are binary")
    rows = [PackedVector.from_string(ln) for ln in lines[1 : 1 + k]]
    G = PackedMatrix.from_vectors(rows, n)
    tagged = dict(ln.split(None, 1) if " " in ln else (ln, "") for ln in lines[1 + k :])
    x = PackedVector.from_string(tagged.get("x", "")) if k else PackedVector.zeros(0)
    e = PackedVector.from_string(tagged["e"])
    if e.n != n or x.n != k:
        raise DomainError("x or e has the wrong length")
    y = (G.vec_mul(x) if k else PackedVector.zeros(n)) + e
    return AdpInstance(G, x, e, y)
