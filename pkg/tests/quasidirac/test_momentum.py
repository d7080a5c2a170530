"""
Unit tests for the transmission amplitude, its windows and the momentum-space envelope.
"""

import logging
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from quasidirac.dad import DadSpec, build_dad
from quasidirac.errors import InsufficientPrecisionError, InvalidParameterError
from quasidirac.momentum import (
    TransmissionAmplitude,
    WindowKind,
    analytic_window,
    bandwidth_fit_check,
    empirical_window,
    finite_difference_derivative,
    fourier_envelope,
    inverse_spectral,
    spectral_amplitude,
    taylor_derivative_check,
    transmission,
)
from quasidirac.precision import CRat, PrecisionCtx, required_digits, to_mpc
from quasidirac.pulse import GaussianEnvelope, TransmittedPulse, transmitted_envelope


@pytest.fixture
def large_shift_dad():
    """K=30 DAD with alpha = 120 on a unit lattice."""
    return build_dad(DadSpec(30, 1, 120))


class TestTransmission:
    """Test cases for T(p)."""

    def test_unity_at_origin(self):
        """Test T(0) = 1 exactly."""
        dad = build_dad(DadSpec(5, Fraction(1, 3), Fraction(7, 2)))
        assert transmission(dad, 0, PrecisionCtx.exact()) == 1

    def test_kronecker_is_a_phase(self):
        """Test |T(p)| = 1 for a pure delay."""
        dad = build_dad(DadSpec.from_beta(4, -3))
        for p in (Fraction(1, 10), Fraction(3, 2), 7):
            value = transmission(dad, p, PrecisionCtx.exact())
            with mpmath.workdps(30):
                assert abs(abs(value) - 1) < mpmath.mpf(10) ** -25

    def test_two_node_closed_form(self):
        """Test T(p) = 5 - 4 exp(i p) for K=1, beta=4."""
        dad = build_dad(DadSpec.from_beta(1, 4))
        value = transmission(dad, Fraction(7, 10), PrecisionCtx.exact())
        with mpmath.workdps(30):
            expected = 5 - 4 * mpmath.expj(mpmath.mpf(7) / 10)
            assert abs(value - expected) < mpmath.mpf(10) ** -25

    def test_hermitian_symmetry(self):
        """Test T(-p) = conj T(p) for real weights."""
        dad = build_dad(DadSpec(6, 1, Fraction(9, 2)))
        ctx = PrecisionCtx.exact()
        for p in (Fraction(1, 7), Fraction(2, 3)):
            plus = transmission(dad, p, ctx)
            minus = transmission(dad, -p, ctx)
            with mpmath.workdps(40):
                assert abs(minus - mpmath.conj(plus)) < mpmath.mpf(10) ** -30

    def test_periodicity(self):
        """Test T(p + 2 pi/delta_x) = T(p)."""
        dad = build_dad(DadSpec(4, Fraction(1, 2), 3))
        ctx = PrecisionCtx.floating(40)
        with mpmath.workdps(40):
            p = mpmath.mpf(1) / 3
            shifted = p + 4 * mpmath.pi
        a = transmission(dad, p, ctx)
        b = transmission(dad, shifted, ctx)
        with mpmath.workdps(40):
            assert abs(a - b) < mpmath.mpf(10) ** -25

    def test_superoscillation_amplitude(self, large_shift_dad):
        """Test |T(pi/delta_x)| = sum |eta| for alternating weights."""
        ctx = PrecisionCtx.exact()
        value = transmission(large_shift_dad, mpmath.pi, ctx)
        with mpmath.workdps(required_digits(large_shift_dad.spec)):
            S = mpmath.mpf(large_shift_dad.abs_sum.numerator) / large_shift_dad.abs_sum.denominator
            assert S > 10 ** 3
            assert abs(abs(value) - S) < S * mpmath.mpf(10) ** -20

    def test_complex_momentum_rejected(self):
        """Test that T is evaluated on the real axis only."""
        dad = build_dad(DadSpec.from_beta(1, 4))
        with pytest.raises(InvalidParameterError):
            transmission(dad, CRat(0, 1), PrecisionCtx.exact())

    def test_insufficient_precision(self, large_shift_dad):
        """Test the precision gate in FLOAT mode."""
        with pytest.raises(InsufficientPrecisionError):
            transmission(large_shift_dad, Fraction(1, 100), PrecisionCtx.floating(20))

    def test_amplitude_object(self):
        """Test the callable wrapper and its target."""
        T = TransmissionAmplitude(build_dad(DadSpec.from_beta(1, 4)))
        assert T(0) == 1
        assert abs(T.target(0) - 1) < mpmath.mpf(10) ** -14
        assert abs(T(Fraction(1, 1000)) - T.target(Fraction(1, 1000))) < 1e-4


class TestTaylorDerivatives:
    """Test cases for derivatives at the origin."""

    def test_exact_rows(self):
        """Test equality up to n = K and departure after."""
        dad = build_dad(DadSpec(3, 1, Fraction(7, 2)))
        rows = taylor_derivative_check(dad, 5, PrecisionCtx.exact())
        assert [r.matches for r in rows] == [True, True, True, True, False, False]
        assert rows[1].derivative == CRat(0, Fraction(-7, 2))

    def test_float_rows(self):
        """Test the floating comparison."""
        dad = build_dad(DadSpec(3, 1, Fraction(7, 2)), PrecisionCtx.floating(40))
        rows = taylor_derivative_check(dad, 4, PrecisionCtx.floating(40))
        assert [r.matches for r in rows] == [True, True, True, True, False]

    def test_finite_differences_agree(self):
        """Test Richardson-extrapolated differences against the exact derivatives for random specs."""
        rng = np.random.default_rng(5)
        for _ in range(20):
            K = int(rng.integers(1, 9))
            magnitude = Fraction(int(rng.integers(4, 4 * K + 1)), 4)
            beta = magnitude if rng.random() < 0.5 else -magnitude
            dad = build_dad(DadSpec.from_beta(K, beta))
            ctx = PrecisionCtx.floating(required_digits(dad.spec))
            rows = taylor_derivative_check(dad, K, PrecisionCtx.exact())
            for row in rows:
                estimate = finite_difference_derivative(dad, row.n, ctx)
                with mpmath.workdps(40):
                    target = to_mpc(row.target)
                    assert abs(estimate - target) <= mpmath.mpf(10) ** -6 * max(abs(target), 1)

    def test_invalid_order(self):
        """Test the order check."""
        with pytest.raises(InvalidParameterError):
            taylor_derivative_check(build_dad(DadSpec(1, 1, 0)), -1, PrecisionCtx.exact())


class TestWindows:
    """Test cases for the superoscillatory windows."""

    def test_analytic_edge(self):
        """Test K/(e |alpha|) for K=30, alpha=120."""
        window = analytic_window(DadSpec(30, 1, 120))
        assert window.kind is WindowKind.ANALYTIC
        assert abs(window.p_hi - mpmath.mpf("0.0919699")) < 1e-6
        assert window.p_lo == -window.p_hi

    def test_analytic_scaling(self):
        """Test that the edge doubles with K and halves with alpha."""
        base = analytic_window(DadSpec(30, 1, 120)).p_hi
        assert abs(analytic_window(DadSpec(60, 1, 120)).p_hi - 2 * base) < 1e-20
        assert abs(analytic_window(DadSpec(30, 1, 240)).p_hi - base / 2) < 1e-20

    def test_analytic_complex_shift(self):
        """Test that complex shifts use the modulus."""
        window = analytic_window(DadSpec(10, 1, CRat(3, 4)))
        assert abs(window.p_hi - 2 / mpmath.e) < 1e-20

    def test_analytic_zero_shift(self):
        """Test that alpha = 0 gives an unbounded band."""
        window = analytic_window(DadSpec(3, 1, 0))
        assert window.unbounded
        assert window.half_width is None
        assert window.contains(100)

    def test_empirical_kronecker_unbounded(self):
        """Test that a pure delay tracks its phase everywhere."""
        dad = build_dad(DadSpec.from_beta(3, -2))
        window = empirical_window(dad, 0.01, PrecisionCtx.exact(), samples=64)
        assert window.unbounded
        assert window.capped

    def test_empirical_single_node(self):
        """Test |1 - exp(-i alpha p)| <= tol for K=0, alpha=1/2."""
        dad = build_dad(DadSpec(0, 1, Fraction(1, 2)))
        window = empirical_window(dad, 0.01, PrecisionCtx.exact(), samples=64)
        expected = 4 * mpmath.asin(mpmath.mpf("0.005"))
        assert abs(window.p_hi - expected) < 1e-5
        assert abs(window.p_lo + expected) < 1e-5
        assert not window.capped

    def test_empirical_near_analytic(self, large_shift_dad):
        """Test that the empirical band is within a factor 3 of the analytic one."""
        empirical = empirical_window(large_shift_dad, 0.01, PrecisionCtx.exact(), samples=128)
        analytic = analytic_window(large_shift_dad.spec)
        assert analytic.p_hi / 3 < empirical.p_hi < 3 * analytic.p_hi
        assert analytic.p_hi / 3 < -empirical.p_lo < 3 * analytic.p_hi
        assert empirical.kind is WindowKind.EMPIRICAL

    def test_tracking_inside_band(self, large_shift_dad):
        """Test |T - exp(-i alpha p)| <= 1e-6 at 512 points inside 0.3 of the analytic band."""
        edge = analytic_window(large_shift_dad.spec).p_hi
        T = TransmissionAmplitude(large_shift_dad)
        ctx = PrecisionCtx.floating(required_digits(large_shift_dad.spec))
        for j in range(-256, 256):
            p = 3 * edge * j / 2560
            value, target = T(p, ctx), T.target(p, ctx)
            with mpmath.workdps(ctx.digits):
                assert abs(value - target) <= mpmath.mpf(10) ** -6

    def test_invalid_tolerance(self):
        """Test that the tolerance lies in (0, 1)."""
        with pytest.raises(InvalidParameterError):
            empirical_window(build_dad(DadSpec(1, 1, 1)), 1.5, PrecisionCtx.exact())


class TestSpectralAmplitude:
    """Test cases for the Gaussian spectrum."""

    @pytest.fixture
    def env(self):
        """Create an envelope with sigma = 3."""
        return GaussianEnvelope(3)

    def test_even(self, env):
        """Test A(p) = A(-p)."""
        assert spectral_amplitude(env, Fraction(1, 2)) == spectral_amplitude(env, Fraction(-1, 2))

    def test_width(self, env):
        """Test A(2/sigma) = A(0)/e."""
        ctx = PrecisionCtx.floating(30)
        ratio = spectral_amplitude(env, Fraction(2, 3), ctx) / spectral_amplitude(env, 0, ctx)
        with mpmath.workdps(ctx.digits):
            assert abs(ratio - 1 / mpmath.e) < mpmath.mpf(10) ** -25

    def test_inverse(self, env):
        """Test that integrating A(p) exp(i p x) reproduces G(x)."""
        value = inverse_spectral(env, Fraction(21, 10))
        with mpmath.workdps(30):
            assert abs(value - env(Fraction(21, 10))) < mpmath.mpf(10) ** -20


class TestFourierEnvelope:
    """Test cases for the momentum-space reconstruction of the transmitted envelope."""

    def test_small_case(self):
        """Test agreement with the coordinate sum for K=3."""
        dad = build_dad(DadSpec(3, 1, Fraction(5, 2)))
        env = GaussianEnvelope(8)
        ctx = PrecisionCtx.floating(30)
        X = [Fraction(j, 2) for j in range(-8, 13, 4)]
        values = fourier_envelope(dad, env, X, ctx)
        pulse = TransmittedPulse(dad, env)
        for x, value in zip(X, values):
            assert abs(value - transmitted_envelope(pulse, x, ctx)) < mpmath.mpf(10) ** -10

    def test_large_shift(self, large_shift_dad):
        """Test relative agreement to 1e-8 within two widths of the shifted peak for K=30, sigma=60."""
        env = GaussianEnvelope(60)
        ctx = PrecisionCtx.floating(required_digits(large_shift_dad.spec))
        X = [120 + 6 * j for j in range(-10, 11)]
        values = fourier_envelope(large_shift_dad, env, X, ctx)
        pulse = TransmittedPulse(large_shift_dad, env)
        for x, value in zip(X, values):
            reference = transmitted_envelope(pulse, x, ctx)
            assert abs(value - reference) < mpmath.mpf(10) ** -8 * abs(reference)


class TestBandwidthCheck:
    """Test cases for the envelope bandwidth test."""

    def test_fits(self):
        """Test the margin for K=30, alpha=120, sigma=60."""
        check = bandwidth_fit_check(DadSpec(30, 1, 120), GaussianEnvelope(60))
        assert check.fits
        assert abs(check.margin - mpmath.mpf("2.759")) < 1e-3

    def test_violation_is_logged(self, caplog):
        """Test the warning when 2/sigma exceeds the band."""
        with caplog.at_level(logging.WARNING, logger="quasidirac.momentum"):
            check = bandwidth_fit_check(DadSpec(30, 1, 120), GaussianEnvelope(10))
        assert not check.fits
        assert "bandwidth" in caplog.text

    def test_zero_shift(self):
        """Test that an unshifted DAD passes any envelope."""
        check = bandwidth_fit_check(DadSpec(4, 1, 0), GaussianEnvelope(1))
        assert check.fits
        assert check.unbounded
        assert check.margin is None
