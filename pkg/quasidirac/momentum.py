"""
Momentum module for the quasidirac package.

This module handles the momentum-space side: the transmission amplitude

    T(p) = sum_m eta_m exp(i m p delta_x),

its derivatives at p = 0, the analytic and empirical superoscillatory windows
in which T(p) tracks exp(-i alpha p), and the spectral amplitude A(p) of the
Gaussian envelope.

Fourier convention: G(x) = int A(p) exp(i p x) dp and
A(p) = (2 pi)^-1 int G(x) exp(-i p x) dx, so that
G~(X) = int T(p) A(p) exp(i p X) dp.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Any, Iterable, List, Optional, Tuple

import mpmath
from mpmath.calculus.quadrature import GaussLegendre
from mpmath.ctx_mp import MPContext

from quasidirac.dad import Dad, DadSpec
from quasidirac.errors import InvalidParameterError
from quasidirac.precision import (
    CRat,
    PrecisionCtx,
    as_complex_rational,
    is_exact,
    is_mp_complex,
    mp_context,
    re_im,
    resolve_context,
    sum_compensated,
    to_mpc,
    to_mpf,
    working_context,
)
from quasidirac.pulse import GaussianEnvelope
from utils.config import FOURIER_TOL, WINDOW_REFINEMENT, WINDOW_SAMPLES

logger = logging.getLogger(__name__)


def _check_real_momentum(p: Any) -> None:
    if isinstance(p, complex) or is_mp_complex(p) or (isinstance(p, CRat) and not p.is_real):
        _, im = re_im(p)
        if im != 0:
            raise InvalidParameterError("T(p) is evaluated for real momenta only")


def transmission(dad: Dad, p: Any, ctx: PrecisionCtx) -> Any:
    """
    Transmission amplitude T(p) = sum_m eta_m exp(i m p delta_x).

    The phases are generated as successive powers of z = exp(i p delta_x) and
    the weighted terms are summed with compensation. T(0) = 1 exactly for an
    exact DAD in EXACT mode.

    Raises:
        InsufficientPrecisionError: If a FLOAT context carries fewer than required_digits
    """
    _check_real_momentum(p)
    ctx = working_context(dad.spec, ctx)
    if is_exact(p) and as_complex_rational(p) == 0:
        return sum_compensated(dad.eta, ctx).value

    mp = ctx.mp
    z = mp.expj(to_mpf(re_im(p)[0], mp) * to_mpf(dad.spec.delta_x, mp))
    power = mp.mpc(1)
    terms = []
    for e in dad.eta:
        terms.append(to_mpc(e, mp) * power)
        power *= z
    return sum_compensated(terms, ctx).value


@dataclass(frozen=True)
class TransmissionAmplitude:
    """T(p) bound to a DAD; callable on momenta."""

    dad: Dad

    def __call__(self, p: Any, ctx: Optional[PrecisionCtx] = None) -> Any:
        return transmission(self.dad, p, ctx or resolve_context(self.dad.spec))

    def target(self, p: Any, ctx: Optional[PrecisionCtx] = None) -> mpmath.mpc:
        """The exponential exp(-i alpha p) that T tracks inside the window."""
        ctx = ctx or resolve_context(self.dad.spec)
        mp = ctx.mp
        return mp.exp(-1j * to_mpc(self.dad.spec.alpha, mp) * to_mpf(re_im(p)[0], mp))


@dataclass(frozen=True)
class DerivativeRow:
    """
    n-th derivative of T at p = 0 against (-i)^n alpha^n.

    matches is exact equality in EXACT mode and agreement to working
    precision otherwise.
    """

    n: int
    derivative: Any
    target: Any
    matches: bool


def _derivative_terms(dad: Dad, n: int, mp: Optional[MPContext] = None) -> List[Any]:
    if mp is None:
        dx = dad.spec.delta_x
        return [e * CRat(0, m * dx) ** n for m, e in enumerate(dad.eta)]
    dx = to_mpf(dad.spec.delta_x, mp)
    return [to_mpc(e, mp) * mp.mpc(0, m * dx) ** n for m, e in enumerate(dad.eta)]


def taylor_derivative_check(dad: Dad, n_max: int, ctx: PrecisionCtx) -> List[DerivativeRow]:
    """
    Derivatives of T at the origin, d^n T(0)/dp^n = sum_m eta_m (i m delta_x)^n = (-i)^n x^n.

    For n <= K they equal (-i)^n alpha^n; beyond K they follow the moments
    instead.
    """
    if isinstance(n_max, bool) or not isinstance(n_max, int) or n_max < 0:
        raise InvalidParameterError(f"n_max must be a non-negative integer, got {n_max!r}")

    exact = dad.exact and ctx.is_exact
    rows = []
    for n in range(n_max + 1):
        if exact:
            derivative = sum_compensated(_derivative_terms(dad, n), ctx).value
            target = (CRat(0, -1) * dad.spec.alpha) ** n
            rows.append(DerivativeRow(n, derivative, target, derivative == target))
            continue
        mp = ctx.mp
        terms = _derivative_terms(dad, n, mp)
        derivative = sum_compensated(terms, ctx).value
        target = (-1j * to_mpc(dad.spec.alpha, mp)) ** n
        scale = mp.fsum(abs(t) for t in terms)
        matches = abs(derivative - target) <= mp.mpf(10) ** (5 - ctx.digits) * max(scale, 1)
        rows.append(DerivativeRow(n, derivative, target, bool(matches)))
    return rows


def finite_difference_derivative(
    dad: Dad,
    n: int,
    ctx: PrecisionCtx,
    h: Any = None,
    levels: int = 2,
) -> mpmath.mpc:
    """
    Central finite-difference estimate of d^n T(0)/dp^n with Richardson extrapolation.

    D_h = h^-n sum_k (-1)^k C(n, k) T((n/2 - k) h) has an O(h^2) error; each
    Richardson level halves h and removes the next even power. The default
    step is 1e-3/(K delta_x). Evaluation runs 10 + 4n digits above the
    working precision to absorb the difference cancellation.
    """
    if isinstance(n, bool) or not isinstance(n, int) or n < 0:
        raise InvalidParameterError(f"Derivative order must be a non-negative integer, got {n!r}")
    ctx = working_context(dad.spec, ctx)
    fine = PrecisionCtx.floating(ctx.digits + 10 + 4 * n)

    mp = fine.mp
    if h is None:
        h = mp.mpf("1e-3") / (max(dad.spec.K, 1) * to_mpf(dad.spec.delta_x, mp))
    h = to_mpf(h, mp)

    def central(step):
        terms = [
            (-1) ** k * math.comb(n, k) * to_mpc(transmission(dad, (mp.mpf(n) / 2 - k) * step, fine), mp)
            for k in range(n + 1)
        ]
        return sum_compensated(terms, fine).value / step ** n

    table = [central(h / 2 ** i) for i in range(levels + 1)]
    for level in range(1, levels + 1):
        factor = mp.mpf(4) ** level
        table = [(factor * table[i + 1] - table[i]) / (factor - 1) for i in range(len(table) - 1)]
    return ctx.mp.mpc(table[0])


class WindowKind(str, Enum):
    ANALYTIC = "analytic"
    EMPIRICAL = "empirical"


@dataclass(frozen=True)
class Window:
    """
    Momentum band around p = 0 in which T(p) tracks exp(-i alpha p).

    Attributes:
        p_lo: Lower edge (None when unbounded)
        p_hi: Upper edge (None when unbounded)
        tol: Relative tolerance of an empirical search, None for the analytic bound
        kind: ANALYTIC or EMPIRICAL
        unbounded: True when T equals the target everywhere searched
        capped: True when either side of an empirical search hit the search limit
    """

    p_lo: Any
    p_hi: Any
    tol: Optional[float]
    kind: WindowKind
    unbounded: bool = False
    capped: bool = False

    def contains(self, p: Any) -> bool:
        if self.p_lo is None or self.p_hi is None:
            return True
        return self.p_lo <= p <= self.p_hi

    @property
    def half_width(self) -> Any:
        if self.p_lo is None or self.p_hi is None:
            return None
        return min(-self.p_lo, self.p_hi)


def _modulus(value: Any, mp: MPContext) -> mpmath.mpf:
    return abs(to_mpc(value, mp))


def analytic_window(spec: DadSpec) -> Window:
    """
    Superoscillatory band |p| < K/(e |alpha|) from the Stirling estimate of the Taylor remainder.

    For complex alpha the modulus is used. alpha = 0 gives an unbounded
    window, since T is then identically 1.
    """
    mp = mp_context(30)
    magnitude = _modulus(spec.alpha, mp)
    if magnitude == 0:
        return Window(None, None, None, WindowKind.ANALYTIC, unbounded=True)
    edge = spec.K / (mp.e * magnitude)
    return Window(-edge, edge, None, WindowKind.ANALYTIC)


def _search_limit(spec: DadSpec, mp: MPContext) -> mpmath.mpf:
    magnitude = _modulus(spec.alpha, mp)
    if magnitude == 0:
        return 10 * mp.pi / to_mpf(spec.delta_x, mp)
    return 10 * max(spec.K, 1) / (mp.e * magnitude)


def empirical_window(
    dad: Dad,
    tol: float,
    ctx: PrecisionCtx,
    samples: Optional[int] = None,
    refinement: Optional[float] = None,
) -> Window:
    """
    Largest band around p = 0 where |T(p) - exp(-i alpha p)| <= tol |exp(-i alpha p)|.

    Each side is searched separately: the candidate edge starts at
    limit/1024 and doubles until a dense sample of [0, edge] shows a
    violation, then the edge is bisected to the refinement (relative). The
    search limit is 10 max(K, 1)/(e |alpha|), or 10 pi/delta_x for alpha = 0.

    Args:
        dad: The distribution
        tol: Relative tolerance in (0, 1)
        ctx: Numeric policy
        samples: Points checked per candidate interval (default QUASIDIRAC_WINDOW_SAMPLES)
        refinement: Relative edge resolution (default QUASIDIRAC_WINDOW_REFINEMENT)
    """
    if not 0 < tol < 1:
        raise InvalidParameterError(f"Window tolerance must lie in (0, 1), got {tol!r}")
    samples = samples or WINDOW_SAMPLES
    refinement = refinement or WINDOW_REFINEMENT
    ctx = working_context(dad.spec, ctx)

    mp = ctx.mp
    alpha = to_mpc(dad.spec.alpha, mp)
    limit = _search_limit(dad.spec, mp)

    def within(p):
        target = mp.exp(-1j * alpha * p)
        return abs(to_mpc(transmission(dad, p, ctx), mp) - target) <= tol * abs(target)

    def interval_ok(edge):
        return all(within(edge * j / samples) for j in range(samples, 0, -1))

    def search(direction):
        good, edge = mp.zero, limit / 1024
        while interval_ok(direction * edge):
            good = edge
            if edge >= limit:
                return limit, True
            edge = min(2 * edge, limit)
        bad = edge
        while (bad - good) > refinement * bad:
            middle = (good + bad) / 2
            if interval_ok(direction * middle):
                good = middle
            else:
                bad = middle
        return good, False

    p_hi, capped_hi = search(1)
    p_lo, capped_lo = search(-1)

    report = mp_context(30)
    window = Window(-report.mpf(p_lo), report.mpf(p_hi), tol, WindowKind.EMPIRICAL,
                    unbounded=capped_hi and capped_lo, capped=capped_hi or capped_lo)
    logger.info(
        f"Empirical window at tol={tol:g}: [{report.nstr(window.p_lo, 6)}, {report.nstr(window.p_hi, 6)}]"
        + (" (capped at search limit)" if window.capped else "")
    )
    return window


def spectral_amplitude(env: GaussianEnvelope, p: Any, ctx: Optional[PrecisionCtx] = None) -> mpmath.mpf:
    """
    A(p) = (2 pi)^-1 (2/(pi sigma^2))^(1/4) sigma sqrt(pi) exp(-p^2 sigma^2/4).

    Even in p; A(2/sigma) = A(0)/e.
    """
    mp = ctx.mp if ctx is not None else mpmath.mp
    s = to_mpf(env.sigma, mp)
    q = to_mpf(re_im(p)[0], mp)
    return env.peak(mp) * s * mp.sqrt(mp.pi) / (2 * mp.pi) * mp.exp(-(q * s) ** 2 / 4)


def inverse_spectral(env: GaussianEnvelope, x: Any, ctx: Optional[PrecisionCtx] = None) -> mpmath.mpc:
    """Quadrature of A(p) exp(i p x) over |p| <= 16/sigma; reproduces G(x)."""
    ctx = ctx or PrecisionCtx.floating(30)
    mp = ctx.mp
    s = to_mpf(env.sigma, mp)
    xv = to_mpf(x, mp)
    edge = 16 / s
    result = mp.quad(
        lambda p: spectral_amplitude(env, p, ctx) * mp.expj(p * xv),
        mp.linspace(-edge, edge, 17),
    )
    return mp.mpc(result)


@lru_cache(maxsize=16)
def _legendre_nodes(degree: int, prec: int) -> Tuple[Tuple[Any, Any], ...]:
    # raw mpf tuples, shareable across threads and contexts
    mp = MPContext()
    mp.prec = prec
    return tuple((x._mpf_, w._mpf_) for x, w in GaussLegendre(mp).calc_nodes(degree, prec))


def _panel_quadrature(
    values_at: Any,
    half_width: Any,
    panels: int,
    degree: int,
    mp: MPContext,
) -> List[Any]:
    """Composite Gauss-Legendre over [-half_width, half_width]; values_at maps a node to a vector."""
    nodes = [(mp.make_mpf(x), mp.make_mpf(w)) for x, w in _legendre_nodes(degree, mp.prec)]
    width = 2 * half_width / panels
    totals = None
    for i in range(panels):
        centre = -half_width + (i + mp.mpf(1) / 2) * width
        for x, w in nodes:
            p = centre + x * width / 2
            vector = values_at(p)
            weight = w * width / 2
            if totals is None:
                totals = [weight * v for v in vector]
            else:
                totals = [t + weight * v for t, v in zip(totals, vector)]
    return totals


def fourier_envelope(
    dad: Dad,
    env: GaussianEnvelope,
    X: Iterable[Any],
    ctx: PrecisionCtx,
    tol: Optional[float] = None,
    degree: int = 4,
) -> List[mpmath.mpc]:
    """
    Transmitted envelope rebuilt in momentum space: int T(p) A(p) exp(i p X) dp.

    Composite Gauss-Legendre over |p| <= L. The panel count doubles and L
    widens (starting at 8/sigma) until successive estimates agree to tol
    (absolute, default QUASIDIRAC_FOURIER_TOL) at every X. T(p)A(p) is
    evaluated once per node and reused for all X.

    Raises:
        InsufficientPrecisionError: If a FLOAT context carries fewer than required_digits
    """
    tol = FOURIER_TOL if tol is None else tol
    ctx = working_context(dad.spec, ctx)
    X = list(X)

    mp = ctx.mp
    xs = [to_mpf(x, mp) for x in X]
    sigma = to_mpf(env.sigma, mp)

    def values_at(p):
        weight = to_mpc(transmission(dad, p, ctx), mp) * spectral_amplitude(env, p, ctx)
        return [weight * mp.expj(p * x) for x in xs]

    def converged(old, new):
        return all(abs(a - b) <= tol for a, b in zip(old, new))

    half_width, panels = 8 / sigma, 32
    estimate = _panel_quadrature(values_at, half_width, panels, degree, mp)
    for _ in range(8):
        refined = _panel_quadrature(values_at, half_width, 2 * panels, degree, mp)
        if converged(estimate, refined):
            estimate = refined
            break
        estimate, panels = refined, 2 * panels
    else:
        logger.warning(f"Fourier quadrature did not settle after {panels} panels")

    for _ in range(16):
        wider_half_width = half_width * mp.mpf(5) / 4
        wider_panels = int(math.ceil(panels * 5 / 4))
        wider = _panel_quadrature(values_at, wider_half_width, wider_panels, degree, mp)
        if converged(estimate, wider):
            estimate = wider
            break
        estimate, half_width, panels = wider, wider_half_width, wider_panels
    else:
        logger.warning(f"Fourier quadrature window did not settle at |p| <= {mp.nstr(half_width, 6)}")

    logger.debug(f"Fourier quadrature: |p| <= {mp.nstr(half_width * sigma, 4)}/sigma, {panels} panels")
    return estimate


@dataclass(frozen=True)
class BandwidthCheck:
    """
    Whether the envelope's momentum width 2/sigma fits inside the superoscillatory band.

    margin = (K/(e|alpha|)) / (2/sigma); None with unbounded = True when alpha = 0.
    """

    fits: bool
    margin: Optional[Any]
    unbounded: bool = False


def bandwidth_fit_check(spec: DadSpec, env: GaussianEnvelope) -> BandwidthCheck:
    """True iff 2/sigma < K/(e |alpha|)."""
    window = analytic_window(spec)
    if window.unbounded:
        return BandwidthCheck(True, None, unbounded=True)
    mp = mp_context(30)
    margin = window.p_hi / (2 / to_mpf(env.sigma, mp))
    fits = bool(margin > 1)
    if not fits:
        logger.warning(
            f"Envelope bandwidth 2/sigma exceeds the superoscillatory band (margin {mp.nstr(margin, 4)})"
        )
    return BandwidthCheck(fits, margin)
