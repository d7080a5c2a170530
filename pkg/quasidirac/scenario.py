"""
Scenario module for the quasidirac package.

This module is the physical-parameter front door: it maps the Larmor
frequency, field width, mean momentum, spin order and envelope width onto the
dimensionless DAD problem, checks the fast-particle regime in which field-edge
reflection can be neglected, and reports the arrival-time reading of a shift.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from quasidirac.dad import DadSpec
from quasidirac.errors import InvalidParameterError
from quasidirac.precision import CRat, as_complex_rational, as_rational
from utils.config import VALIDITY_THRESHOLD

logger = logging.getLogger(__name__)

NO_SPREADING_CAVEAT = (
    "The envelope is assumed to propagate without spreading and reflection off "
    "the field edges is neglected; neither is verified dynamically."
)


class ScenarioParams(BaseModel):
    """
    Physical inputs of the spin-filter setup (unit mass).

    Rational inputs are kept exact; floats are read through their decimal
    representation.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    omega_L: Fraction
    d: Fraction
    p0: Fraction
    K: int = Field(ge=0)
    sigma: Fraction

    @field_validator("omega_L", "d", "p0", "sigma", mode="before")
    @classmethod
    def _to_rational(cls, value: Any) -> Fraction:
        return as_rational(value)

    @field_validator("omega_L", "d", "p0", "sigma")
    @classmethod
    def _positive(cls, value: Fraction) -> Fraction:
        if value <= 0:
            raise ValueError("must be positive")
        return value


def delta_x(params: ScenarioParams) -> Fraction:
    """Shift quantum omega_L * d / p0^2."""
    return params.omega_L * params.d / (params.p0 * params.p0)


def larmor_phase(params: ScenarioParams) -> Fraction:
    """Per-component phase omega_L * d / p0; component m acquires exp(-i m omega_L d / p0)."""
    return params.omega_L * params.d / params.p0


def to_dadspec(params: ScenarioParams, alpha: Any) -> DadSpec:
    """
    DAD problem induced by the physical parameters.

    Args:
        params: Scenario parameters
        alpha: Target shift (length, possibly complex)

    Returns:
        DadSpec with K = params.K and delta_x = omega_L d / p0^2
    """
    return DadSpec(params.K, delta_x(params), alpha)


@dataclass(frozen=True)
class ValidityReport:
    """Outcome of the fast-particle check; ratio is None (infinite) for K = 0."""

    ratio: Optional[Fraction]
    threshold: Fraction
    passed: bool
    caveat: str = NO_SPREADING_CAVEAT


def validity_check(params: ScenarioParams, threshold: Any = None) -> ValidityReport:
    """
    Check p0^2/2 >> K*omega_L.

    The ratio r = (p0^2/2)/(K omega_L) must reach the threshold (inclusive,
    default QUASIDIRAC_VALIDITY_THRESHOLD).
    """
    threshold = as_rational(VALIDITY_THRESHOLD if threshold is None else threshold)
    if params.K == 0:
        return ValidityReport(None, threshold, True)

    ratio = (params.p0 * params.p0 / 2) / (params.K * params.omega_L)
    passed = ratio >= threshold
    if not passed:
        logger.warning(
            f"Fast-particle condition fails: (p0^2/2)/(K omega_L) = {float(ratio):.4g} "
            f"< {float(threshold):g}"
        )
    return ValidityReport(ratio, threshold, passed)


@dataclass(frozen=True)
class ArrivalTimes:
    """
    Arrival-time reading of a real shift.

    Attributes:
        delay: Delay at a remote detector, -alpha/p0
        traversal_time: Naively inferred time in the field, (d - alpha)/p0
        naive_inference_fails: True when the inferred time is negative
    """

    delay: Fraction
    traversal_time: Fraction
    naive_inference_fails: bool


def arrival_times(params: ScenarioParams, alpha: Any) -> ArrivalTimes:
    """Delay and inferred traversal time for a real shift alpha."""
    shift = as_complex_rational(alpha)
    if not shift.is_real:
        raise InvalidParameterError("Arrival times are defined for a real shift only")
    a = shift.re
    tau = (params.d - a) / params.p0
    return ArrivalTimes(-a / params.p0, tau, tau < 0)


def channel_durations(params: ScenarioParams) -> List[Tuple[int, Fraction]]:
    """
    Field traversal time when the polariser selects a single component |m>.

    Returns (m, (d - m*delta_x)/p0) for m = -K..0; only for such single-channel
    post-selection is the duration well defined.
    """
    dx = delta_x(params)
    return [(m, (params.d - m * dx) / params.p0) for m in range(-params.K, 1)]


def dimensionless_shift(params: ScenarioParams, alpha: Any) -> CRat:
    """beta = alpha/delta_x for the induced spacing."""
    return as_complex_rational(alpha) / delta_x(params)
