"""
Unit tests for DAD construction, the Vandermonde oracle and moments.
"""

import logging
from contextlib import suppress
from fractions import Fraction
from unittest.mock import patch

import mpmath
import numpy as np
import pytest

from quasidirac.dad import (
    Dad,
    DadSpec,
    abs_sum,
    build_dad,
    eta_closed_form,
    eta_vandermonde,
    moment,
    moment_table,
)
from quasidirac.errors import InvalidParameterError
from quasidirac.output import dad_record
from quasidirac.precision import CRat, PrecisionCtx, required_digits, to_mpc


def random_specs(count, seed, max_order=12, complex_share=0.3):
    """Random exact specs with K <= max_order and rational |beta| <= 1000."""
    rng = np.random.default_rng(seed)
    specs = []
    for _ in range(count):
        K = int(rng.integers(0, max_order + 1))
        den = int(rng.integers(1, 21))
        beta_re = Fraction(int(rng.integers(-1000 * den, 1000 * den + 1)), den)
        beta_im = Fraction(0)
        if rng.random() < complex_share:
            beta_im = Fraction(int(rng.integers(-1000 * den, 1000 * den + 1)), den)
        delta_x = Fraction(int(rng.integers(1, 10)), int(rng.integers(1, 10)))
        specs.append(DadSpec.from_beta(K, CRat(beta_re, beta_im), delta_x))
    return specs


class TestDadSpec:
    """Test cases for the problem statement."""

    def test_normalization_of_inputs(self):
        """Test that floats and ints become exact values."""
        spec = DadSpec(2, 0.5, -15.5)
        assert spec.delta_x == Fraction(1, 2)
        assert spec.alpha == CRat(Fraction(-31, 2))
        assert spec.is_exact
        assert spec.beta == -31

    @pytest.mark.parametrize("K, delta_x", [(-1, 1), (1.5, 1), (True, 1), (2, 0), (2, -1)])
    def test_invalid(self, K, delta_x):
        """Test precondition checks."""
        with pytest.raises(InvalidParameterError):
            DadSpec(K, delta_x, 0)

    def test_alpha_tilde_and_support(self):
        """Test derived metadata."""
        spec = DadSpec.from_alpha_tilde(30, 4)
        assert spec.alpha == 120
        assert spec.alpha_tilde == 4
        assert spec.support == (-30, 0)

    def test_alpha_tilde_undefined_for_order_zero(self):
        """Test that alpha/(K delta_x) needs K > 0."""
        with pytest.raises(InvalidParameterError):
            DadSpec.from_alpha_tilde(0, 1)

    def test_inexact_shift(self):
        """Test that mpmath shifts make the spec inexact."""
        assert not DadSpec(3, 1, mpmath.mpf("0.5")).is_exact


class TestClosedForm:
    """Test cases for the closed-form weights."""

    @pytest.mark.parametrize("K, beta, expected", [
        (1, Fraction(-1, 2), (Fraction(1, 2), Fraction(1, 2))),
        (2, 1, (3, -3, 1)),
        (1, 4, (5, -4)),
        (1, 0, (1, 0)),
        (0, 7, (1,)),
    ])
    def test_examples(self, K, beta, expected):
        """Test hand-derived weights."""
        dad = eta_closed_form(DadSpec.from_beta(K, beta), PrecisionCtx.exact())
        assert dad.exact
        assert tuple(dad.eta) == tuple(CRat(v) for v in expected)

    def test_kronecker_degeneracy(self):
        """Test that beta = -M gives a unit weight at node M for all K <= 30."""
        for K in range(31):
            for M in range(K + 1):
                dad = build_dad(DadSpec.from_beta(K, -M))
                assert dad.eta == tuple(CRat(1 if m == M else 0) for m in range(K + 1))
                assert dad.is_kronecker
                assert dad.is_nonnegative

    def test_weights_sum_to_one(self):
        """Test the normalization row on random specs."""
        for spec in random_specs(50, seed=1):
            assert sum(build_dad(spec).eta, CRat(0)) == 1

    def test_translation_covariance(self):
        """Test that weights depend only on beta."""
        a = build_dad(DadSpec(5, 1, Fraction(17, 3)))
        b = build_dad(DadSpec(5, Fraction(7, 2), Fraction(17, 3) * Fraction(7, 2)))
        assert a.eta == b.eta

    def test_conjugation(self):
        """Test eta(conj beta) = conj eta(beta)."""
        a = build_dad(DadSpec.from_beta(6, CRat(Fraction(7, 2), 2)))
        b = build_dad(DadSpec.from_beta(6, CRat(Fraction(7, 2), -2)))
        assert b.eta == tuple(e.conjugate() for e in a.eta)

    def test_negative_weights_outside_kronecker(self):
        """Test that a non-degenerate real DAD has a negative weight."""
        dad = build_dad(DadSpec.from_beta(2, Fraction(-1, 2)))
        assert not dad.is_kronecker
        assert not dad.is_nonnegative

    def test_float_mode_matches_exact(self):
        """Test that float weights at required_digits reproduce the exact ones to 25 digits."""
        spec = DadSpec.from_beta(30, 120)
        exact = build_dad(spec)
        floating = build_dad(spec, PrecisionCtx.floating(required_digits(spec)))
        assert not floating.exact
        with mpmath.workdps(required_digits(spec)):
            for e, f in zip(exact.eta, floating.eta):
                reference = to_mpc(e)
                assert abs(f - reference) <= abs(reference) * mpmath.mpf(10) ** -25

    def test_large_shift_regime(self):
        """Test the K=30, beta=120 weights: unit sum, huge absolute sum."""
        dad = build_dad(DadSpec.from_beta(30, 120))
        assert sum(dad.eta, CRat(0)) == 1
        assert isinstance(dad.abs_sum, Fraction)
        assert dad.abs_sum > 10 ** 10

    def test_nodes(self):
        """Test node placement at -m*delta_x."""
        dad = build_dad(DadSpec(3, Fraction(1, 2), 0))
        assert dad.nodes == (0, Fraction(-1, 2), -1, Fraction(-3, 2))

    def test_wrong_length_rejected(self):
        """Test that a weight vector must have K + 1 entries."""
        with pytest.raises(InvalidParameterError):
            Dad(DadSpec(2, 1, 0), (CRat(1),), True, Fraction(1))


class TestVandermonde:
    """Test cases for the direct moment-system solve."""

    def test_examples(self):
        """Test closed cases."""
        assert eta_vandermonde(DadSpec.from_beta(2, 1)).eta == (3, -3, 1)
        assert eta_vandermonde(DadSpec.from_beta(1, 0)).eta == (1, 0)

    def test_matches_closed_form(self):
        """Test exact agreement with the closed form over random specs."""
        for spec in random_specs(200, seed=2):
            ctx = PrecisionCtx.exact()
            assert eta_vandermonde(spec, ctx).eta == eta_closed_form(spec, ctx).eta

    def test_order_cap(self):
        """Test the oracle's order limit."""
        with patch("quasidirac.dad.VANDERMONDE_MAX_ORDER", 3):
            with pytest.raises(InvalidParameterError):
                eta_vandermonde(DadSpec(4, 1, 1))

    def test_float_solve(self):
        """Test the pivoting solve against the exact weights."""
        spec = DadSpec.from_beta(6, Fraction(5, 2))
        exact = eta_closed_form(spec)
        floating = eta_vandermonde(spec, PrecisionCtx.floating(50))
        with mpmath.workdps(50):
            for e, f in zip(exact.eta, floating.eta):
                assert abs(f - to_mpc(e)) <= mpmath.mpf(10) ** -35

    def test_condition_hazard_is_logged(self, caplog):
        """Test the warning for an ill-conditioned moment matrix."""
        with caplog.at_level(logging.WARNING, logger="quasidirac.dad"):
            with suppress(InvalidParameterError):
                eta_vandermonde(DadSpec(20, 1, 1), PrecisionCtx.floating(16))
        assert "condition hazard" in caplog.text


class TestMoments:
    """Test cases for moments and moment tables."""

    def test_examples(self):
        """Test the K=1, beta=4 moments."""
        dad = build_dad(DadSpec.from_beta(1, 4))
        ctx = PrecisionCtx.exact()
        assert moment(dad, 0, ctx) == 1
        assert moment(dad, 1, ctx) == 4
        assert moment(dad, 2, ctx) == -4

    def test_moment_identity(self):
        """Test x^n = alpha^n exactly for n <= K over random specs."""
        ctx = PrecisionCtx.exact()
        for spec in random_specs(200, seed=3):
            dad = build_dad(spec, ctx)
            for n in range(spec.K + 1):
                assert moment(dad, n, ctx) == spec.alpha ** n

    def test_table(self):
        """Test the K=1, beta=4 table."""
        rows = moment_table(build_dad(DadSpec.from_beta(1, 4)), 2, PrecisionCtx.exact())
        assert [(r.n, r.moment, r.target, r.ratio) for r in rows] == [
            (0, 1, 1, 1),
            (1, 4, 4, 1),
            (2, -4, 16, Fraction(-1, 4)),
        ]

    def test_table_departs_beyond_order(self):
        """Test ratio 1 up to n = K and departure afterwards."""
        rows = moment_table(build_dad(DadSpec.from_alpha_tilde(30, 4)), 40, PrecisionCtx.exact())
        assert all(r.ratio == 1 for r in rows[:31])
        assert all(r.ratio != 1 for r in rows[31:])

    def test_absent_ratio_for_zero_shift(self):
        """Test that alpha = 0 leaves the ratio absent for n > 0."""
        rows = moment_table(build_dad(DadSpec(0, 1, 0)), 3, PrecisionCtx.exact())
        assert rows[0].ratio == 1
        assert [r.ratio for r in rows[1:]] == [None, None, None]
        assert [r.moment for r in rows[1:]] == [0, 0, 0]

    def test_float_table(self):
        """Test the table in FLOAT mode."""
        spec = DadSpec.from_beta(3, Fraction(7, 2))
        rows = moment_table(build_dad(spec, PrecisionCtx.floating(40)), 3, PrecisionCtx.floating(40))
        for r in rows:
            assert abs(r.ratio - 1) < mpmath.mpf(10) ** -25

    def test_invalid_order(self):
        """Test that negative moment orders are rejected."""
        with pytest.raises(InvalidParameterError):
            moment(build_dad(DadSpec(1, 1, 0)), -1, PrecisionCtx.exact())


class TestAbsSum:
    """Test cases for the absolute weight sum."""

    @pytest.mark.parametrize("K, beta, expected", [(1, 4, 9), (2, 1, 7), (5, -3, 1)])
    def test_examples(self, K, beta, expected):
        """Test closed cases."""
        assert abs_sum(build_dad(DadSpec.from_beta(K, beta))) == expected

    def test_order_thirty(self):
        """Test the exact sum behind the K=30, beta=120 figure runs and its working precision."""
        spec = DadSpec.from_beta(30, 120)
        assert abs_sum(build_dad(spec)) == 30744379873544003350726913320675692249089
        assert required_digits(spec) == 71

    def test_complex_weights(self):
        """Test that complex weights give a float absolute sum."""
        dad = build_dad(DadSpec.from_beta(2, CRat(1, 1)))
        expected = sum(abs(complex(e)) for e in dad.eta)
        assert abs(float(dad.abs_sum) - expected) < 1e-12

    def test_error_bound(self):
        """Test that only a rounded absolute sum carries an error bound, and that it is reported."""
        exact = build_dad(DadSpec.from_beta(30, 120))
        assert exact.abs_sum_error == 0

        spec = DadSpec.from_beta(4, CRat(Fraction(5, 2), 1))
        rounded = build_dad(spec)
        assert 0 < rounded.abs_sum_error < rounded.abs_sum * mpmath.mpf(10) ** (5 - required_digits(spec))
        with mpmath.workdps(60):
            reference = mpmath.fsum(abs(to_mpc(e)) for e in rounded.eta)
            assert abs(rounded.abs_sum - reference) <= rounded.abs_sum_error

        record = dad_record(rounded, 20)
        assert float(record["abs_sum_error"]) == pytest.approx(float(rounded.abs_sum_error), rel=1e-5)
        assert float(dad_record(exact, 20)["abs_sum_error"]) == 0
