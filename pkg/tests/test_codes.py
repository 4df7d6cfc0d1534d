import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codesmooth.codes import (
    EnsembleSpec,
    LinearCode,
    QuasiCyclicCode,
    code_from_text,
    code_to_text,
    ensemble_from_text,
    ensemble_to_text,
    enumerate_linear_codes,
    enumerate_quasi_cyclic,
    enumerate_self_dual_doubly_even,
    gaussian_binomial,
    is_unit,
    membership_count,
    poly_inverse,
    poly_mulmod,
    qc_balance_condition,
    qc_membership_count,
    qc_orbits,
    sample_linear_codes,
    self_dual_containing_count,
    self_dual_doubly_even_count,
)
from codesmooth.errors import CapacityError, DomainError, UnsupportedError
from codesmooth.gf import PackedMatrix, PackedVector, popcount, rank_of_rows


def brute_subspaces(n, k):
    """Oracle: distinct spans of all k-subsets of nonzero vectors."""
    found = set()
    for rows in itertools.combinations(range(1, 2**n), k):
        if rank_of_rows(rows, n) == k:
            span = {0}
            for r in rows:
                span |= {s ^ r for s in span}
            found.add(frozenset(span))
    return found


def test_gaussian_binomial_examples():
    assert gaussian_binomial(2, 1, 2) == 3
    assert gaussian_binomial(4, 2, 2) == 35
    assert gaussian_binomial(5, 0, 3) == 1
    assert gaussian_binomial(4, 2, 3) == 130
    with pytest.raises(DomainError):
        gaussian_binomial(3, 4, 2)
    with pytest.raises(DomainError):
        gaussian_binomial(3, 1, 4)


def test_enumeration_small_example():
    codes = list(enumerate_linear_codes(2, 1))
    words = {frozenset(int(i) for i in c.codeword_indices()) for c in codes}
    assert words == {frozenset({0, 3}), frozenset({0, 1}), frozenset({0, 2})}


@pytest.mark.parametrize("n", range(1, 6))
def test_enumeration_matches_brute_force(n):
    for k in range(n + 1):
        codes = list(enumerate_linear_codes(n, k))
        assert len(codes) == gaussian_binomial(n, k)
        spans = {frozenset(int(i) for i in c.codeword_indices()) for c in codes}
        assert len(spans) == len(codes)
        if k <= 3:
            assert spans == brute_subspaces(n, k)


def test_enumeration_counts_q3():
    for n in range(1, 5):
        for k in range(n + 1):
            codes = list(enumerate_linear_codes(n, k, 3))
            assert len(codes) == gaussian_binomial(n, k, 3)
            assert len({c.rows for c in codes}) == len(codes)


@pytest.mark.parametrize("q", [2, 3])
def test_codewords_closed_and_counted(q):
    for code in enumerate_linear_codes(3, 2, q):
        words = code.codewords()
        assert len({w.index() for w in words}) == q**code.k
        for u, v in itertools.product(words[:5], words[:5]):
            assert code.contains(u + v)


@settings(max_examples=1000)
@given(st.integers(0, 2**30))
def test_canonical_form_independent_of_generator(seed):
    rng = np.random.default_rng(seed)
    n, k = int(rng.integers(2, 9)), int(rng.integers(1, 5))
    k = min(k, n)
    code = next(sample_linear_codes(n, k, 1, seed))
    # scramble: random invertible recombination of the rows
    while True:
        mix = rng.integers(0, 2, size=(k, k))
        if rank_of_rows([PackedVector.from_symbols(r).data for r in mix], k) == k:
            break
    G = (mix @ code.generator.to_array()) % 2
    other = LinearCode.from_array(G)
    assert other == code
    assert set(other.codeword_indices().tolist()) == set(code.codeword_indices().tolist())


def test_from_generator_rejects_rank_deficiency():
    with pytest.raises(DomainError):
        LinearCode.from_generator([PackedVector.from_string("110"), PackedVector.from_string("110")])


@given(st.integers(0, 2**30))
def test_dual_is_orthogonal_complement(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 8))
    k = int(rng.integers(0, n + 1))
    q = int(rng.choice([2, 3]))
    code = next(sample_linear_codes(n, k, 1, seed, q))
    dual = code.dual()
    assert dual.k == n - k
    for c in code.codewords()[:8]:
        for d in dual.codewords()[:8]:
            assert c.dot(d) == 0
    assert dual.dual() == code


def test_encode_matches_codeword_indices():
    code = LinearCode.from_array([[1, 0, 2, 1], [0, 1, 1, 2]], 3)
    table = code.codeword_indices()
    for a in range(9):
        msg = PackedVector.from_index(2, a, 3)
        assert code.encode(msg).index() == table[a]


def test_weight_distribution_repetition():
    code = LinearCode.from_array([[1, 1, 1, 1]])
    assert code.weight_distribution() == [1, 0, 0, 0, 1]


def test_membership_weight_one_vector():
    ens = EnsembleSpec.all_linear(2, 1)
    assert membership_count(PackedVector.from_string("10"), ens) == 1
    with pytest.raises(UnsupportedError):
        membership_count(PackedVector.from_string("10"), EnsembleSpec.sampled_linear(2, 1, 5, 0))


def test_sampling_covers_subspaces_uniformly():
    counts = {}
    for code in sample_linear_codes(3, 1, 7000, seed=4):
        counts[code.rows] = counts.get(code.rows, 0) + 1
    assert len(counts) == 7
    assert all(abs(c - 1000) < 150 for c in counts.values())


# -- self-dual family ------------------------------------------------------------


def test_self_dual_counts():
    assert self_dual_doubly_even_count(4) == 30
    assert self_dual_containing_count(4) == 6
    assert self_dual_doubly_even_count(8) == 2 * 3 * 5 * 9 * 17 * 33 * 65


def test_self_dual_matches_brute_force_filter():
    """Oracle: filter all [8, 4] codes for doubly-even weights and self-orthogonality."""
    brute = set()
    for code in enumerate_linear_codes(8, 4):
        if all(popcount(r) % 4 == 0 for r in code.rows) and all(
            popcount(a & b) % 2 == 0 for a in code.rows for b in code.rows
        ):
            brute.add(code.rows)
    assert len(brute) == 30
    assert {c.rows for c in enumerate_self_dual_doubly_even(4)} == brute


def test_self_dual_family_properties():
    for code in enumerate_self_dual_doubly_even(4):
        assert code.dual() == code
        assert all(i % 4 == 0 for i, c in enumerate(code.weight_distribution()) if c)
        assert code.contains(PackedVector.ones(8))


def test_self_dual_guards():
    with pytest.raises(DomainError):
        list(enumerate_self_dual_doubly_even(6))
    with pytest.raises(CapacityError):
        list(enumerate_self_dual_doubly_even(8))
    assert len(list(enumerate_self_dual_doubly_even(8, limit=3))) == 3


# -- quasi-cyclic family ---------------------------------------------------------


@pytest.mark.parametrize("t,expected", [(3, True), (5, True), (7, False), (11, True), (13, True), (17, False)])
def test_balance_condition(t, expected):
    assert qc_balance_condition(t) == expected


@pytest.mark.parametrize("t", [3, 5, 11, 13])
def test_qc_family_size(t):
    assert sum(1 for _ in enumerate_quasi_cyclic(t)) == 2 ** (t - 1) - 1
    if t <= 5:
        assert sum(1 for _ in enumerate_quasi_cyclic(t, units_only=False)) == 2 ** (t - 1)


def test_qc_codewords_have_circulant_shape():
    t = 5
    for qc in enumerate_quasi_cyclic(t):
        assert popcount(qc.multiplier) % 2 == 1
        words = set(qc.code.codeword_indices().tolist())
        assert words == {qc.encode_poly(l) for l in range(1 << t)}


def test_qc_rejects_even_multiplier():
    with pytest.raises(DomainError):
        QuasiCyclicCode.from_multiplier(5, 0b11)


def test_polynomial_arithmetic():
    t = 5
    for a in range(1, 1 << t):
        if is_unit(a, t):
            assert poly_mulmod(a, poly_inverse(a, t), t) == 1
    assert poly_mulmod(0b10, 0b10000, 5) == 1


@pytest.mark.parametrize("t", [3, 5])
def test_qc_membership_fast_path_matches_iteration(t):
    ens = EnsembleSpec.quasi_cyclic(t)
    hist = np.zeros(1 << (2 * t), dtype=int)
    for code in ens:
        hist[code.codeword_indices()] += 1
    for v in range(1 << (2 * t)):
        assert qc_membership_count(PackedVector(2 * t, v), t) == hist[v]


def test_qc_orbits_partition_family():
    for t in (3, 5, 11):
        orbits = qc_orbits(t)
        assert sum(m for _, m in orbits) == 2 ** (t - 1) - 1


def test_text_round_trip():
    for q in (2, 3):
        codes = list(enumerate_linear_codes(4, 2, q))[:10]
        assert ensemble_from_text(ensemble_to_text(codes)) == codes
        for c in codes:
            assert code_from_text(code_to_text(c)) == c
    empty = LinearCode.span([], 3)
    assert code_from_text(code_to_text(empty)) == empty
    assert code_to_text(LinearCode.from_array([[1, 0, 1]])) == "3 1 2\n101\n"


def test_generator_round_trip():
    code = LinearCode.from_array([[1, 1, 0, 1], [0, 1, 1, 1]])
    assert LinearCode.from_generator(code.generator) == code
    assert isinstance(code.generator, PackedMatrix)
