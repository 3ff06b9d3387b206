import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpsop.combinatorics import (
    PowerTable,
    in_stride_set,
    power_coefficient,
    stride_offsets,
    weighted_compositions,
)
from fpsop.series import PolynomialSymbol, TruncatedSeries, cauchy_product
from fpsop.weights import ValidationError

from oracles import (
    compositions_exhaustive,
    power_coeff_exhaustive,
    power_coeff_reference,
    rand_symbol_coeffs,
)


class TestWeightedCompositions:
    def test_linear_symbol(self):
        got = set(weighted_compositions(2, 3, (0, 1)))
        assert got == {(1, 2)}

    def test_weight_beyond_reach_is_empty(self):
        assert list(weighted_compositions(7, 3, (0, 1, 2))) == []

    def test_quadratic_symbol(self):
        got = set(weighted_compositions(2, 2, (0, 1, 2)))
        assert got == {(1, 0, 1), (0, 2, 0)}

    def test_sparse_support(self):
        got = set(weighted_compositions(6, 2, (1, 5)))
        assert got == {(1, 1)}

    def test_bad_degrees_rejected(self):
        with pytest.raises(ValidationError):
            list(weighted_compositions(2, 2, (1, 1)))
        with pytest.raises(ValidationError):
            list(weighted_compositions(2, 2, (2, 1)))

    @given(st.integers(0, 10), st.integers(0, 5),
           st.lists(st.integers(0, 6), min_size=1, max_size=4, unique=True))
    @settings(max_examples=60)
    def test_matches_exhaustive_search(self, n, parts, degrees):
        degrees = tuple(sorted(degrees))
        got = set(weighted_compositions(n, parts, degrees))
        assert got == compositions_exhaustive(n, parts, degrees)

    @given(st.integers(0, 12), st.integers(0, 6))
    @settings(max_examples=40)
    def test_invariants_hold(self, n, parts):
        degrees = (0, 1, 3)
        for combo in weighted_compositions(n, parts, degrees):
            assert sum(combo) == parts
            assert sum(d * li for d, li in zip(degrees, combo)) == n


class TestPowerCoefficient:
    def test_affine_cube(self):
        phi = PolynomialSymbol.from_coeffs([1, 1])
        assert power_coefficient(phi, 2, 3) == 3

    def test_monomial_indicator(self):
        phi = PolynomialSymbol.monomial(3)
        assert power_coefficient(phi, 6, 2) == 1
        assert power_coefficient(phi, 5, 2) == 0

    def test_shifted_square(self):
        phi = PolynomialSymbol.from_coeffs([0, 1, 1])
        assert power_coefficient(phi, 3, 2) == 2

    def test_zeroth_power(self):
        phi = PolynomialSymbol.from_coeffs([2, 5])
        assert power_coefficient(phi, 0, 0) == 1
        assert power_coefficient(phi, 1, 0) == 0

    @given(st.integers(0, 10), st.integers(0, 5), st.integers(1, 999))
    @settings(max_examples=60)
    def test_matches_exhaustive(self, n, big_l, seed):
        alphas = rand_symbol_coeffs(random.Random(seed), 3, num_max=4, den_max=4)
        phi = PolynomialSymbol.from_coeffs(alphas)
        assert power_coefficient(phi, n, big_l) == \
            power_coeff_exhaustive(tuple(phi.alphas), n, big_l)


class TestPowerTable:
    def test_entries_match_repeated_product(self):
        rng = random.Random(3)
        for _ in range(10):
            alphas = rand_symbol_coeffs(rng, 4)
            phi = PolynomialSymbol.from_coeffs(alphas)
            table = PowerTable(phi, 10, 5)
            for big_l in range(6):
                expected = power_coeff_reference(alphas, 0, big_l)
                row = [power_coeff_reference(alphas, n, big_l) for n in range(11)]
                assert list(table.row(big_l)) == row

    def test_row_identity_as_series(self):
        phi = PolynomialSymbol.from_coeffs([Fraction(1, 2), 0, 1])
        table = PowerTable(phi, 8, 4)
        acc = TruncatedSeries.unity(8)
        base = TruncatedSeries.from_coeffs(phi.alphas, degree_bound=8)
        for big_l in range(5):
            assert list(table.row(big_l)) == list(acc.coeffs)
            acc = cauchy_product(acc, base, 8)

    def test_vanishes_beyond_degree_times_power(self):
        phi = PolynomialSymbol.from_coeffs([1, 2, 1])
        table = PowerTable(phi, 12, 4)
        for big_l in range(5):
            for n in range(2 * big_l + 1, 13):
                assert table.theta(n, big_l) == 0

    def test_row_nonzeros_agree_with_rows(self):
        phi = PolynomialSymbol.from_coeffs([0, 3, 0, 1])
        table = PowerTable(phi, 15, 5)
        for big_l in range(6):
            dense = {n: v for n, v in enumerate(table.row(big_l)) if v != 0}
            assert dict(table.row_nonzeros(big_l)) == dense

    def test_monomial_fast_path(self):
        table = PowerTable(PolynomialSymbol.monomial(2), 10, 5)
        for big_l in range(6):
            assert list(table.row_nonzeros(big_l)) == [(2 * big_l, 1)]

    def test_power_range_monomial(self):
        table = PowerTable(PolynomialSymbol.monomial(2), 10, 5)
        assert list(table.power_range(4)) == [2]
        assert list(table.power_range(5)) == []

    def test_power_range_constant_term(self):
        phi = PolynomialSymbol.from_coeffs([1, 1])
        table = PowerTable(phi, 6, 9)
        assert list(table.power_range(2)) == list(range(2, 10))

    def test_methods_agree(self):
        rng = random.Random(5)
        for _ in range(5):
            alphas = rand_symbol_coeffs(rng, 3)
            phi = PolynomialSymbol.from_coeffs(alphas)
            t_pow = PowerTable(phi, 9, 4, method="powers")
            t_enum = PowerTable(phi, 9, 4, method="enumerate")
            for big_l in range(5):
                assert list(t_pow.row(big_l)) == list(t_enum.row(big_l))

    def test_bounds_checked(self):
        table = PowerTable(PolynomialSymbol.monomial(1), 4, 4)
        with pytest.raises(ValidationError):
            table.theta(5, 0)
        with pytest.raises(ValidationError):
            table.theta(0, 5)


class TestStrideOffsets:
    def test_unit_stride_is_full_range(self):
        assert list(stride_offsets(4, 1)) == [0, 1, 2, 3, 4]

    def test_parity_classes(self):
        assert list(stride_offsets(5, 2)) == [1, 3, 5]

    def test_large_stride(self):
        assert list(stride_offsets(1, 3)) == [1]

    def test_zero_stride_rejected(self):
        with pytest.raises(ValidationError):
            stride_offsets(4, 0)

    @given(st.integers(0, 200), st.integers(1, 12))
    def test_membership_characterization(self, n, stride):
        got = list(stride_offsets(n, stride))
        assert got == [k for k in range(n + 1) if (n - k) % stride == 0]


class TestInStrideSet:
    def test_zero_shift_means_divisibility(self):
        assert in_stride_set(6, 0, 3)
        assert not in_stride_set(7, 0, 3)

    def test_shift_one_stride_two(self):
        assert in_stride_set(7, 1, 2)

    def test_below_shift_is_out(self):
        assert not in_stride_set(0, 1, 2)

    def test_zero_stride_rejected(self):
        with pytest.raises(ValidationError):
            in_stride_set(4, 1, 0)

    @given(st.integers(0, 100), st.integers(0, 10), st.integers(1, 10))
    def test_matches_direct_definition(self, n, shift, stride):
        expected = n >= shift and (n - shift) % stride == 0
        assert in_stride_set(n, shift, stride) == expected
