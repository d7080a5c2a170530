"""
Pulse module for the quasidirac package.

This module handles the coordinate-space side of the problem: the free
envelope G(X), its convolution with a DAD,

    G~(X) = sum_m eta_m G(X + m*delta_x),

the shifted target G(X - alpha) it approximates, and a scalar distortion
metric. Only the comoving-frame envelope is sampled; the carrier and the
global Larmor phases are carried by the scenario and postselect modules.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Callable, Iterable, List, Optional, Tuple

import mpmath
import numpy as np
from mpmath.ctx_mp import MPContext
from tqdm import tqdm

from quasidirac.dad import Dad
from quasidirac.errors import InvalidParameterError
from quasidirac.postselect import SpinStates, spin_component
from quasidirac.precision import (
    CRat,
    PrecisionCtx,
    as_rational,
    is_exact,
    mp_context,
    re_im,
    sum_compensated,
    to_mpc,
    to_mpf,
    working_context,
)
from utils.config import GRID_POINTS, QUAD_TOL, SHOW_PROGRESS

logger = logging.getLogger(__name__)


class Envelope(ABC):
    """Free pulse envelope, entire in its (possibly complex) argument."""

    @property
    @abstractmethod
    def width(self) -> Any:
        """Characteristic coordinate width."""

    @abstractmethod
    def __call__(self, X: Any, mp: MPContext = mpmath.mp) -> mpmath.mpc:
        """Envelope value at the precision of the mpmath context ``mp``."""


@dataclass(frozen=True)
class GaussianEnvelope(Envelope):
    """
    G(X) = (2/(pi sigma^2))^(1/4) exp(-X^2/sigma^2), normalized so that int |G|^2 dX = 1.
    """

    sigma: Any

    def __post_init__(self):
        sigma = as_rational(self.sigma) if is_exact(self.sigma) else self.sigma
        if not sigma > 0:
            raise InvalidParameterError(f"Envelope width must be positive, got {self.sigma!r}")
        object.__setattr__(self, "sigma", sigma)

    @property
    def width(self) -> Any:
        return self.sigma

    def peak(self, mp: MPContext = mpmath.mp) -> mpmath.mpf:
        """G(0) = (2/(pi sigma^2))^(1/4)."""
        s = to_mpf(self.sigma, mp)
        return mp.root(2 / (mp.pi * s * s), 4)

    def __call__(self, X: Any, mp: MPContext = mpmath.mp) -> mpmath.mpc:
        s = to_mpf(self.sigma, mp)
        x = to_mpc(X, mp)
        return self.peak(mp) * mp.exp(-(x * x) / (s * s))


def envelope_eval(env: Envelope, X: Any, ctx: Optional[PrecisionCtx] = None) -> mpmath.mpc:
    """
    Evaluate the envelope at a (possibly complex) coordinate.

    Args:
        env: Envelope
        X: Coordinate; complex values continue G into the complex plane
        ctx: Numeric policy; the global mpmath precision is used when omitted

    Returns:
        G(X) as mpc
    """
    mp = ctx.mp if ctx is not None else mpmath.mp
    return env(X, mp)


def target_envelope(env: Envelope, alpha: Any, X: Any, ctx: Optional[PrecisionCtx] = None) -> mpmath.mpc:
    """The ideally shifted copy G(X - alpha)."""
    mp = ctx.mp if ctx is not None else mpmath.mp
    return env(to_mpc(X, mp) - to_mpc(alpha, mp), mp)


class NormalizationMode(str, Enum):
    """Scaling applied to the transmitted envelope."""

    RAW = "raw"
    BEST_PROBABILITY_SCALED = "best-probability-scaled"


@dataclass(frozen=True)
class TransmittedPulse:
    """
    The envelope G~ transmitted through the field after post-selection.

    Attributes:
        dad: The delay amplitude distribution
        envelope: Free envelope
        normalization: RAW or BEST_PROBABILITY_SCALED (times 1/sqrt(P_best))
        states: Spin states; when supplied the 1/sqrt(N(a)N(b)) factor is applied
    """

    dad: Dad
    envelope: Envelope
    normalization: NormalizationMode = NormalizationMode.RAW
    states: Optional[SpinStates] = None

    def __post_init__(self):
        object.__setattr__(self, "normalization", NormalizationMode(self.normalization))
        if self.states is not None and self.states.K != self.dad.spec.K:
            raise InvalidParameterError(
                f"Spin states of order {self.states.K} do not match a DAD of order {self.dad.spec.K}"
            )

    def scale(self, mp: MPContext = mpmath.mp) -> mpmath.mpf:
        """
        Overall factor multiplying sum_m eta_m G(X + m*delta_x).

        Without states the bare sum is the RAW result; BEST_PROBABILITY_SCALED
        then adds nothing, since the optimal pair has 1/sqrt(N(a)N(b)) = sqrt(P_best).
        """
        if self.states is None:
            return mp.one
        factor = 1 / mp.sqrt(to_mpf(self.states.norm_a, mp) * to_mpf(self.states.norm_b, mp))
        if self.normalization is NormalizationMode.BEST_PROBABILITY_SCALED:
            factor *= to_mpf(self.dad.abs_sum, mp)
        return factor


def transmitted_envelope(pulse: TransmittedPulse, X: Any, ctx: PrecisionCtx) -> mpmath.mpc:
    """
    DAD-weighted superposition of shifted envelopes at coordinate X.

    Args:
        pulse: Transmitted pulse description
        X: Comoving coordinate x - p0*t
        ctx: Numeric policy

    Returns:
        G~(X) as mpc

    Raises:
        InsufficientPrecisionError: If a FLOAT context carries fewer than required_digits
    """
    ctx = working_context(pulse.dad.spec, ctx)
    mp = ctx.mp
    dx = to_mpf(pulse.dad.spec.delta_x, mp)
    x = to_mpc(X, mp)
    terms = [
        to_mpc(e, mp) * pulse.envelope(x + m * dx, mp)
        for m, e in enumerate(pulse.dad.eta)
        if e != 0
    ]
    total = sum_compensated(terms, ctx).value
    return total * pulse.scale(mp)


def transmitted_curve(
    pulse: TransmittedPulse,
    grid: Iterable[Any],
    ctx: PrecisionCtx,
    progress: Optional[bool] = None,
) -> List[mpmath.mpc]:
    """Evaluate transmitted_envelope over a grid, with an optional progress bar."""
    grid = list(grid)
    show = SHOW_PROGRESS if progress is None else progress
    return [
        transmitted_envelope(pulse, X, ctx)
        for X in tqdm(grid, desc="Transmitted envelope", disable=not show)
    ]


def quasi_dirac_action(dad: Dad, f: Callable[[Any], Any], ctx: PrecisionCtx) -> Any:
    """
    Apply the DAD to a test function: sum_m eta_m f(-m*delta_x).

    Equals f(alpha) for every polynomial of degree <= K. Exact when the DAD
    is exact, the context is EXACT and f returns exact values.
    """
    mp = ctx.mp
    values = [f(x) for x in dad.nodes]
    if dad.exact and ctx.is_exact and all(is_exact(v) for v in values):
        return sum_compensated([e * CRat.coerce(v) for e, v in zip(dad.eta, values)], ctx).value
    terms = [to_mpc(e, mp) * to_mpc(v, mp) for e, v in zip(dad.eta, values)]
    return sum_compensated(terms, ctx).value


def uniform_grid(lo: Any, hi: Any, points: int) -> List[Any]:
    """
    Uniform grid including both end points.

    Exact end points give an exact Fraction grid; otherwise a float grid.
    """
    if points < 2:
        raise InvalidParameterError(f"A grid needs at least 2 points, got {points}")
    if is_exact(lo) and is_exact(hi):
        lo, hi = as_rational(lo), as_rational(hi)
        step = (hi - lo) / (points - 1)
        return [lo + i * step for i in range(points)]
    return [float(x) for x in np.linspace(float(lo), float(hi), points)]


def evaluation_grid(pulse: TransmittedPulse, points: Optional[int] = None) -> List[Any]:
    """
    Default X grid covering the DAD support and the target peak with a 5 sigma margin.

    For alpha > 0 this is [-K*delta_x - 5 sigma, Re alpha + 5 sigma].
    """
    spec = pulse.dad.spec
    sigma = pulse.envelope.width
    shift, _ = re_im(spec.alpha)
    lo = min(-spec.K * spec.delta_x, shift) - 5 * sigma
    hi = max(0 * spec.delta_x, shift) + 5 * sigma
    return uniform_grid(lo, hi, points or GRID_POINTS)


def channel_envelopes(
    states: SpinStates,
    env: Envelope,
    X: Any,
    delta_x: Any,
    ctx: Optional[PrecisionCtx] = None,
) -> List[Tuple[int, mpmath.mpc]]:
    """
    Per-component envelopes of the spin superposition before post-selection.

    Component m (m = -K..0) is delayed by -m*delta_x and carries amplitude
    a_m/sqrt(N(a)).

    Returns:
        List of (m, a_m G(X - m*delta_x)/sqrt(N(a)))
    """
    ctx = ctx or PrecisionCtx.exact()
    mp = ctx.mp
    dx = to_mpf(delta_x, mp)
    x = to_mpc(X, mp)
    norm = mp.sqrt(to_mpf(states.norm_a, mp))
    channels = []
    for k in range(states.K + 1):
        m = spin_component(k)
        a_m = to_mpc(states.amplitude_a(m), mp)
        channels.append((m, a_m * env(x - m * dx, mp) / norm))
    return channels


def pre_selection_density(
    states: SpinStates,
    env: Envelope,
    X: Any,
    delta_x: Any,
    ctx: Optional[PrecisionCtx] = None,
) -> mpmath.mpf:
    """
    Probability density between the field and the polariser.

    sum_m |a_m|^2 |G(X - m*delta_x)|^2 / N(a): an incoherent mixture of K+1
    delayed copies, none of them advanced.
    """
    ctx = ctx or PrecisionCtx.exact()
    channels = channel_envelopes(states, env, X, delta_x, ctx)
    return ctx.mp.fsum(abs(c) ** 2 for _, c in channels)


def distortion(pulse: TransmittedPulse, ctx: PrecisionCtx, tol: Optional[float] = None) -> mpmath.mpf:
    """
    Relative L2 distance between the scaled transmitted envelope and its target.

    || G~_scaled(X) - G(X - alpha) || over X in [Re alpha - 5 sigma, Re alpha + 5 sigma],
    divided by ||G|| = 1. The integrand is evaluated at working precision and
    integrated by mpmath Gauss-Legendre over 10 subintervals.

    Raises:
        InsufficientPrecisionError: If a FLOAT context carries fewer than required_digits
    """
    tol = QUAD_TOL if tol is None else tol
    ctx = working_context(pulse.dad.spec, ctx)
    scaled = replace(pulse, normalization=NormalizationMode.BEST_PROBABILITY_SCALED)
    alpha = pulse.dad.spec.alpha
    shift, _ = re_im(alpha)

    quad = mp_context(20)
    centre = to_mpf(shift, quad)
    sigma = to_mpf(pulse.envelope.width, quad)
    points = quad.linspace(centre - 5 * sigma, centre + 5 * sigma, 11)

    def integrand(X):
        diff = transmitted_envelope(scaled, X, ctx) - target_envelope(scaled.envelope, alpha, X, ctx)
        return quad.mpf(abs(diff) ** 2)

    value, error = quad.quad(integrand, points, method="gauss-legendre", error=True)
    if error > tol:
        logger.warning(f"Distortion quadrature error estimate {quad.nstr(error, 3)} exceeds {tol:g}")
    return quad.sqrt(abs(value))
