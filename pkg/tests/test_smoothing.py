import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from codesmooth.codes import (
    EnsembleSpec,
    LinearCode,
    enumerate_linear_codes,
    sample_linear_codes,
)
from codesmooth.distributions import (
    NoiseModel,
    Pmf,
    bernoulli_product,
    convolve,
    renyi_divergence,
    renyi_entropy,
)
from codesmooth.errors import CapacityError, UnsupportedError
from codesmooth.gf import PackedVector
from codesmooth.smoothing import (
    code_statistics,
    code_uniform_pmf,
    ensemble_expected_exp_divergence,
    ensemble_reports,
    exp_divergence_to_uniform,
    fixed_rate,
    formula_report,
    integer_alpha_expectation,
    qc_membership_census,
    rate_at_least,
    rate_threshold,
    renyi_smoothing_bound,
    scan_to_csv,
    self_dual_cross_entropy,
    smoothed_pmf,
    smoothing_scan,
    strictly_decreasing,
    verify_averaging_linear,
    verify_averaging_qc,
    verify_averaging_self_dual,
    verify_extended_averaging,
)

GOLDEN_ALL_LINEAR_6_3 = 1.1107229253316748


def direct_smoothed(code, W):
    """Oracle: P(y) = 2^-k sum_c W(y + c)."""
    P = np.zeros(2**code.n)
    for y in range(2**code.n):
        P[y] = sum(W[y ^ int(c)] for c in code.codeword_indices()) / code.size()
    return P


def direct_exp_divergence(P, alpha):
    return 2 ** ((alpha - 1) * int(math.log2(len(P)))) * math.fsum(P[P > 0] ** alpha)


def test_smoothed_pmf_matches_direct_sum():
    W = bernoulli_product(0.2, 5)
    for code in list(enumerate_linear_codes(5, 2))[::17]:
        P = smoothed_pmf(code, NoiseModel.bernoulli(0.2))
        assert np.max(np.abs(P.values - direct_smoothed(code, W.values))) <= 1e-15


def test_smoothed_examples():
    code = LinearCode.from_array([[1, 1]])
    P = smoothed_pmf(code, NoiseModel.bernoulli(0.25))
    # {00, 11} smoothed by Ber(0.25)^2: mass 0.5*(0.5625+0.0625) on the code, 0.1875 off it
    assert P.values.tolist() == pytest.approx([0.3125, 0.1875, 0.1875, 0.3125])
    full = LinearCode.full_space(3)
    assert smoothed_pmf(full, NoiseModel.bernoulli(0.1)) == Pmf.uniform(3)
    point = smoothed_pmf(LinearCode.span([], 3), NoiseModel.point_mass(PackedVector.from_string("101")))
    assert point.prob(PackedVector.from_string("101")) == 1.0


@given(st.integers(0, 2**30), st.sampled_from([0.5, 1.0, 1.5, 2.0, 3.0]))
def test_divergence_shift_invariant_and_bounded(seed, alpha):
    g = np.random.default_rng(seed)
    n = int(g.integers(1, 8))
    k = int(g.integers(0, n + 1))
    code = next(sample_linear_codes(n, k, 1, seed))
    noise = NoiseModel.bernoulli(float(g.uniform(0, 0.5)))
    P = smoothed_pmf(code, noise)
    U = Pmf.uniform(n)
    d = renyi_divergence(P, U, alpha).value
    assert -1e-12 <= d <= n - k + 1e-9
    shift = int(g.integers(0, 2**n))
    shifted = P.values[np.arange(2**n) ^ shift]
    assert renyi_divergence(Pmf(shifted, n), U, alpha).value == pytest.approx(d, abs=1e-10)
    # the shifted code (an affine coset) smoothed directly
    coset = np.zeros(2**n)
    coset[code.codeword_indices() ^ shift] = 1 / code.size()
    Q = convolve(Pmf(coset, n), noise.pmf(n))
    assert renyi_divergence(Q, U, alpha).value == pytest.approx(d, abs=1e-10)


def test_batched_statistics_match_single_codes():
    codes = list(enumerate_linear_codes(6, 3))[::50]
    noise = NoiseModel.bernoulli(0.2)
    stats = code_statistics(codes, noise, 6, [1.0, 1.5, 3.0])
    for i, code in enumerate(codes):
        P = smoothed_pmf(code, noise)
        assert stats[1.5][i] == pytest.approx(exp_divergence_to_uniform(P, 1.5), rel=1e-12)
        assert stats[3.0][i] == pytest.approx(direct_exp_divergence(P.values, 3.0), rel=1e-12)
        assert stats[1.0][i] == pytest.approx(renyi_divergence(P, Pmf.uniform(6), 1.0).value, abs=1e-12)
        assert stats[1.5][i] >= 1 - 1e-12


def test_golden_all_linear_expectation():
    noise = NoiseModel.bernoulli(0.25)
    rep = ensemble_expected_exp_divergence(EnsembleSpec.all_linear(6, 3), noise, 1.5)
    assert rep.mode == "exact" and rep.samples == 1395
    assert rep.expectation == GOLDEN_ALL_LINEAR_6_3
    W = bernoulli_product(0.25, 6).values
    oracle = math.fsum(direct_exp_divergence(direct_smoothed(c, W), 1.5) for c in enumerate_linear_codes(6, 3)) / 1395
    assert rep.expectation == pytest.approx(oracle, rel=1e-13)
    assert rep.expectation >= 1
    assert rep.expectation <= rep.bound


@pytest.mark.parametrize("n,k,alpha", [(5, 2, 2), (6, 3, 3), (6, 2, 4), (7, 4, 4), (8, 5, 3)])
def test_integer_formula_matches_enumeration(n, k, alpha):
    noise = NoiseModel.bernoulli(0.25)
    exact = integer_alpha_expectation(n, k, Fraction(1, 4), alpha)
    enumerated = ensemble_expected_exp_divergence(EnsembleSpec.all_linear(n, k), noise, alpha).expectation
    assert float(exact) == pytest.approx(enumerated, rel=1e-12)
    assert formula_report(n, k, noise, alpha).expectation == pytest.approx(float(exact))


def test_bound_forms_agree():
    noise = NoiseModel.bernoulli(0.25)
    rate = renyi_smoothing_bound(16, 12, 1.5, noise, "rate")
    raw = renyi_smoothing_bound(16, 12, 1.5, noise, "raw")
    assert rate == pytest.approx(raw, rel=1e-12)
    assert rate_threshold(16, 1.5, noise) == pytest.approx(1 - renyi_entropy(noise.pmf(16), 1.5) / 16)


def test_qary_ensemble_report():
    rep = ensemble_expected_exp_divergence(EnsembleSpec.all_linear(3, 1, 3), NoiseModel.general(
        Pmf.normalized(np.arange(1, 28), 3, 3)), 2.0)
    assert rep.mode == "exact" and rep.expectation >= 1


def test_monte_carlo_report_and_guards():
    noise = NoiseModel.bernoulli(0.2)
    reps = ensemble_reports(EnsembleSpec.all_linear(8, 4), noise, [1.5, 2.0], samples=300, seed=3)
    for rep in reps:
        assert rep.mode == "monte_carlo" and rep.samples == 300 and rep.stderr > 0
    exact = ensemble_expected_exp_divergence(EnsembleSpec.all_linear(8, 4), noise, 2.0)
    assert abs(reps[1].expectation - exact.expectation) <= 4 * reps[1].stderr
    with pytest.raises(CapacityError):
        ensemble_expected_exp_divergence(EnsembleSpec.all_linear(8, 4), noise, 2.0, budget=100)
    with pytest.raises(UnsupportedError):
        ensemble_reports(EnsembleSpec.self_dual(4), noise, [2.0], samples=5, seed=0)


def test_scan_rows_and_decay_flag():
    noise = NoiseModel.bernoulli(0.25)
    th = rate_threshold(8, 4, noise)
    rows = smoothing_scan([8, 12, 16, 20], rate_at_least(th + 0.05), 4, noise)
    assert [r.k for r in rows] == [5, 7, 9, 11]
    assert strictly_decreasing(rows)
    assert all(r.ratio is not None and r.mode == "exact_formula" for r in rows)
    control = smoothing_scan([8, 12, 16, 20], fixed_rate(0.1), 4, noise)
    assert not strictly_decreasing(control)
    uniform = smoothing_scan([4, 6], fixed_rate(0.5), 1.5, NoiseModel.uniform())
    assert all(abs(r.excess) <= 1e-12 for r in uniform)
    assert scan_to_csv(rows).splitlines()[0].startswith("n,k,alpha,excess")


def test_qc_kl_decays_with_t():
    values = [
        ensemble_expected_exp_divergence(EnsembleSpec.quasi_cyclic(t), NoiseModel.bernoulli(0.25), 1.0).expectation
        for t in (3, 5, 11)
    ]
    assert values[0] > values[1] > values[2] > 0


def test_qc_orbit_average_matches_code_by_code():
    noise = NoiseModel.bernoulli(0.2)
    rep = ensemble_expected_exp_divergence(EnsembleSpec.quasi_cyclic(5), noise, 2.0)
    assert rep.mode == "exact_orbits"
    direct = [exp_divergence_to_uniform(smoothed_pmf(c, noise), 2.0) for c in EnsembleSpec.quasi_cyclic(5)]
    assert rep.expectation == pytest.approx(math.fsum(direct) / len(direct), rel=1e-12)


# -- averaging identities ---------------------------------------------------------


def test_linear_averaging_weight_example():
    check = verify_averaging_linear(2, 1, 2, lambda v: v.weight, rational=True)
    assert check.lhs == pytest.approx(4 / 3) and check.rhs == pytest.approx(4 / 3)
    assert check.holds and check.abs_diff == 0 and check.exact


def test_linear_averaging_q3_random():
    f = np.random.default_rng(0).random(81)
    check = verify_averaging_linear(4, 2, 3, f)
    assert check.holds and check.abs_diff <= 1e-12


def test_linear_averaging_rational_is_exact():
    f = [Fraction(i * i + 1, 7) for i in range(32)]
    for k in range(6):
        check = verify_averaging_linear(5, k, 2, f, rational=True)
        assert check.holds and check.abs_diff == 0


def test_extended_averaging_example():
    f = np.random.default_rng(5).random(32)
    for split in [(1, 1), (1, 2), (2, 1), (1, 1, 1)]:
        check = verify_extended_averaging(5, 2, 2, split, f)
        assert check.holds and check.lhs <= check.rhs + 1e-12
    distinct = verify_extended_averaging(4, 2, 2, (1, 1), np.ones(16), distinct=True)
    assert distinct.holds


def test_self_dual_averaging_conventions():
    check = verify_averaging_self_dual(4, lambda v: 1.0)
    assert check.lhs == 14 and check.rhs == 14 and check.holds
    assert check.extra["conventions"]["exclude_zero_only"] == 15
    assert not check.extra["conventions"]["exclude_zero_only_holds"]
    skipped = verify_averaging_self_dual(8, lambda v: 1.0)
    assert skipped.skipped is not None


def test_qc_averaging_records_both_sides():
    check = verify_averaging_qc(3, lambda v: 1.0)
    assert check.lhs == 6 and check.rhs == 10 and not check.holds
    assert check.extra["conventions"]["exclude_unit_polynomial"] == 6
    assert check.extra["support_in_unique_membership_set"] is False
    assert verify_averaging_qc(7, lambda v: 1.0).skipped == "balance condition fails for t=7"


@pytest.mark.parametrize("t", [3, 5])
def test_qc_averaging_holds_on_unique_membership_support(t):
    n, half = 2 * t, (1 << t) - 1
    g = np.random.default_rng(t)
    f = np.zeros(1 << n)
    for v in range(1 << n):
        if bin(v).count("1") % 2 == 0 and (v & half) not in (0, half) and (v >> t) not in (0, half):
            f[v] = g.random()
    check = verify_averaging_qc(t, f)
    assert check.extra["support_in_unique_membership_set"]
    assert check.holds and check.abs_diff <= 1e-12


def test_qc_census_histogram():
    rep = qc_membership_census(3)
    assert rep["histogram"] == {0: 12, 1: 18} and rep["checked"] == 30
    assert not rep["unique_membership"]


# -- self-dual cross entropy ------------------------------------------------------


def test_cross_entropy_matches_double_sum():
    noise = NoiseModel.bernoulli(0.2)
    W = noise.pmf(4).values
    total = math.fsum(W[z] * W[z ^ 15] ** 0.5 for z in range(16))
    rep = self_dual_cross_entropy(noise, 1.5, 4)
    assert rep["h_prime_alpha"] == pytest.approx(math.log2(total) / (1 - 1.5), abs=1e-12)
    assert rep["rearrangement_holds"]


@pytest.mark.parametrize("alpha", [0.5, 1.5, 2.0, 3.0])
def test_cross_entropy_symmetric_in_bias(alpha):
    a = self_dual_cross_entropy(NoiseModel.bernoulli(0.3), alpha, 5)["h_prime_alpha"]
    b = self_dual_cross_entropy(NoiseModel.bernoulli(0.7), alpha, 5)["h_prime_alpha"]
    assert a == pytest.approx(b, abs=1e-12)


def test_uniform_pmf_of_code():
    code = LinearCode.from_array([[1, 0, 1], [0, 1, 1]])
    P = code_uniform_pmf(code)
    assert sorted(P.support().tolist()) == sorted(code.codeword_indices().tolist())
