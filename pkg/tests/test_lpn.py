import itertools
import math

import numpy as np
import pytest

from codesmooth import lpn
from codesmooth.distributions import binary_entropy
from codesmooth.errors import CapacityError, DomainError
from codesmooth.gf import PackedMatrix, PackedVector


def oracle_joint(G, e, r):
    """Loop over every multiplier v and add its probability to cell (G v^T, <v, e>)."""
    n, k = G.n, G.k
    joint = np.zeros(2 ** (k + 1))
    for v in range(2**n):
        vec = PackedVector(n, v)
        a = G.mul_vec(vec).data
        b = vec.dot(e)
        joint[a + (b << k)] += r ** vec.weight * (1 - r) ** (n - vec.weight)
    return joint


def oracle_divergence(joint, k, p, alpha):
    total = 0.0
    for a, b in itertools.product(range(2**k), (0, 1)):
        P = joint[a + (b << k)]
        Q = (p if b else 1 - p) / 2**k
        if P > 0:
            total += P**alpha * Q ** (1 - alpha)
    return math.log2(total) / (alpha - 1)


def test_instances_respect_weight_and_syndrome():
    for seed in range(1000):
        n = 4 + seed % 9
        k, t = 1 + seed % 4, seed % (n + 1)
        inst = lpn.sample_adp_instance(n, k, t, seed)
        assert inst.e.weight == t
        assert inst.y + inst.G.vec_mul(inst.x) == inst.e
        assert inst.G.rank() == k


def test_instance_guards():
    with pytest.raises(DomainError):
        lpn.sample_adp_instance(5, 6, 1, 0)
    with pytest.raises(DomainError):
        lpn.sample_adp_instance(5, 2, 6, 0)


def test_sample_identity():
    inst = lpn.sample_adp_instance(10, 3, 4, seed=2)
    rng = np.random.Generator(np.random.Philox(5))
    for _ in range(2000):
        s = lpn.reduce_sample(inst, 0.3, rng)
        assert s.b ^ s.a.dot(inst.x) == s.v.dot(inst.e)
        assert s.a == inst.G.mul_vec(s.v)


def test_flip_probability():
    assert lpn.flip_probability(0.25, 2) == pytest.approx(0.375)
    assert lpn.flip_probability(0.25, 0) == 0
    assert lpn.flip_probability(0.5, 7) == 0.5
    r, t = 0.2, 3
    brute = sum(
        r ** sum(bits) * (1 - r) ** (t - sum(bits)) for bits in itertools.product((0, 1), repeat=t) if sum(bits) % 2
    )
    assert lpn.flip_probability(r, t) == pytest.approx(brute, abs=1e-15)


def test_exact_divergence_matches_oracle():
    inst = lpn.sample_adp_instance(12, 4, 3, seed=0)
    joint = oracle_joint(inst.G, inst.e, 0.2)
    assert np.max(np.abs(lpn.reduction_joint(inst.G, inst.e, 0.2) - joint)) <= 1e-15
    ours = lpn.exact_reduction_divergence(inst.G, inst.e, 0.2, 1.5).value
    assert ours == pytest.approx(oracle_divergence(joint, 4, lpn.flip_probability(0.2, 3), 1.5), abs=1e-12)


def test_statistical_distance_matches_oracle():
    inst = lpn.sample_adp_instance(9, 3, 2, seed=4)
    joint = oracle_joint(inst.G, inst.e, 0.3)
    target = lpn.reduction_target(3, lpn.flip_probability(0.3, 2))
    assert lpn.reduction_statistical_distance(inst.G, inst.e, 0.3) == pytest.approx(
        0.5 * np.abs(joint - target).sum(), abs=1e-15
    )


def test_identity_generator_and_zero_error():
    G = PackedMatrix.from_array(np.eye(3, dtype=int))
    e = PackedVector.zeros(3)
    d = lpn.exact_reduction_divergence(G, e, 0.2, 2.0)
    assert math.isfinite(d.value) and d.value > 0
    # a target that puts no mass where the joint law does gives +inf
    e1 = PackedVector.from_string("100")
    assert lpn.exact_reduction_divergence(G, e1, 0.2, 2.0, target_p=0.0).is_infinite


def test_half_bias_is_exactly_uniform():
    for seed in range(10):
        inst = lpn.sample_adp_instance(10, 3, 5, seed)
        assert lpn.exact_reduction_divergence(inst.G, inst.e, 0.5, 1.5).value <= 1e-12


def test_divergence_decreases_in_bias():
    # observed on every instance tried; not a claim in general
    rs = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5]
    for seed in range(5):
        inst = lpn.sample_adp_instance(12, 4, 3, seed)
        values = [lpn.exact_reduction_divergence(inst.G, inst.e, r, 1.5).value for r in rs]
        assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("alpha", [1.0, 1.5, 2.0, 3.0])
def test_conditional_decomposition(alpha):
    inst = lpn.sample_adp_instance(10, 3, 4, seed=1)
    rep = lpn.conditional_decomposition_check(inst.G, inst.e, 0.2, alpha)
    assert rep["agrees"] and rep["abs_diff"] <= 1e-10
    assert {b["parity"] for b in rep["branches"]} == {0, 1}
    assert all("forced" in b for b in rep["branches"])


def test_decomposition_guards():
    G = PackedMatrix.from_array([[1, 1, 0], [1, 1, 0]])
    with pytest.raises(DomainError):
        lpn.conditional_decomposition_check(G, PackedVector.from_string("100"), 0.2, 2.0)
    inst = lpn.sample_adp_instance(6, 2, 0, seed=0)
    with pytest.raises(DomainError):
        lpn.conditional_decomposition_check(inst.G, inst.e, 0.2, 2.0)


def test_capacity_guard():
    G = PackedMatrix.from_array(np.zeros((1, 23), dtype=int))
    with pytest.raises(CapacityError):
        lpn.reduction_joint(G, PackedVector.zeros(23), 0.2)


def test_entropy_rate_examples():
    rep = lpn.entropy_rate_check(6, PackedVector.from_string("111000"), 0.3)
    assert rep["forced_matches"]
    for row in rep["rows"]:
        assert row["forced_entropy"] == pytest.approx(5 * binary_entropy(0.3), abs=1e-10)
    two = lpn.entropy_rate_check(2, PackedVector.from_string("11"), 0.25)
    row = two["rows"][1]
    assert row["conditional_entropy"] == pytest.approx(1.0, abs=1e-12)
    assert row["forced_entropy"] == pytest.approx(binary_entropy(0.25), abs=1e-12)
    assert row["difference"] > 0


def test_binary_entropy_inverse():
    r = lpn.binary_entropy_inverse(0.5)
    assert r == pytest.approx(0.110028, abs=1e-6)
    assert binary_entropy(r) == pytest.approx(0.5, abs=1e-6)
    assert lpn.binary_entropy_inverse(1.0) == pytest.approx(0.5, abs=1e-6)
    with pytest.raises(DomainError):
        lpn.binary_entropy_inverse(1.5)


def test_parameter_calculator():
    params = lpn.reduction_param_calculator(1024, 32, 0.1, 0.1, 1)
    assert params.C_roundtrip == pytest.approx(1.0, abs=1e-12)
    assert 0 < params.r <= 0.5 and 0 <= params.p <= 0.5
    assert params.r == pytest.approx(lpn.binary_entropy_inverse(32 / 1024))
    assert params.p == pytest.approx(lpn.flip_probability(params.r, params.t))
    # the gap to 1/2 is within a factor of two of 1/(2n) once eps and eta are 0.08
    tuned = lpn.reduction_param_calculator(1024, 32, 0.08, 0.08, 1)
    assert tuned.feasible and tuned.gap_within_factor_two
    assert not params.gap_within_factor_two and params.gap_ratio == pytest.approx(2.31, abs=0.01)
    with pytest.raises(DomainError):
        lpn.reduction_param_calculator(32, 64, 0.1, 0.1, 1)


def test_instance_text_round_trip():
    inst = lpn.sample_adp_instance(9, 3, 2, seed=8)
    again = lpn.instance_from_text(lpn.instance_to_text(inst))
    assert again == inst
