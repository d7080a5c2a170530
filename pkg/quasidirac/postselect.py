"""
Post-selection module for the quasidirac package.

This module relates spin pre-selection |a> and post-selection |b> to the DAD
they induce, eta_m = exp(-i m omega_L d / p0) a_m b*_m, computes the
probability that post-selection succeeds and constructs the state pair that
maximizes it.

Index bridge: DAD index k = 0..K (node -k*delta_x) is spin component m = -k.
States are stored over components m = -K..K at position m + K, unnormalized,
with N(a) and N(b) carried explicitly.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Optional, Sequence, Tuple

from quasidirac.dad import Dad, DadSpec
from quasidirac.errors import (
    DegenerateDistributionError,
    InvalidParameterError,
    ModulusMismatchError,
    ZeroSelectionWeightError,
)
from quasidirac.precision import (
    CRat,
    PrecisionCtx,
    is_exact,
    mp_context,
    required_digits,
    sum_compensated,
    to_mpc,
    to_mpf,
)
from quasidirac.scenario import ScenarioParams, delta_x, larmor_phase

logger = logging.getLogger(__name__)


def spin_component(k: int) -> int:
    """Spin component carrying DAD index k."""
    return -k


def dad_index(component: int) -> int:
    """DAD index carried by a non-positive spin component."""
    if component > 0:
        raise InvalidParameterError(f"Component {component} > 0 carries no DAD weight")
    return -component


def _abs2(value: Any) -> Any:
    if isinstance(value, CRat):
        return value.abs2()
    if isinstance(value, (int, Fraction)):
        return Fraction(value) ** 2
    return abs(value) ** 2


@dataclass(frozen=True)
class SpinStates:
    """
    Unnormalized pre-selection (a) and post-selection (b) amplitudes.

    Attributes:
        K: Spin order
        a: 2K+1 amplitudes for components m = -K..K (a_m = 0 for m > 0)
        b: 2K+1 amplitudes for components m = -K..K
    """

    K: int
    a: Tuple[Any, ...]
    b: Tuple[Any, ...]

    def __post_init__(self):
        size = 2 * self.K + 1
        if len(self.a) != size or len(self.b) != size:
            raise InvalidParameterError(f"Spin order {self.K} needs {size} amplitudes per state")
        if any(v != 0 for v in self.a[self.K + 1:]):
            raise InvalidParameterError("Pre-selection must vanish on components m > 0")
        if self.norm_a == 0 or self.norm_b == 0:
            raise InvalidParameterError("Spin states must have non-zero norm")

    def amplitude_a(self, component: int) -> Any:
        return self.a[component + self.K]

    def amplitude_b(self, component: int) -> Any:
        return self.b[component + self.K]

    @property
    def norm_a(self) -> Any:
        """N(a) = sum |a_m|^2."""
        return sum((_abs2(v) for v in self.a), 0)

    @property
    def norm_b(self) -> Any:
        """N(b) = sum |b_m|^2."""
        return sum((_abs2(v) for v in self.b), 0)

    def normalized(self, digits: int = 50) -> "SpinStates":
        """The same states rescaled to N(a) = N(b) = 1, at ``digits`` digits."""
        mp = mp_context(digits)
        na = mp.sqrt(to_mpf(self.norm_a, mp))
        nb = mp.sqrt(to_mpf(self.norm_b, mp))
        return SpinStates(
            self.K,
            tuple(to_mpc(v, mp) / na for v in self.a),
            tuple(to_mpc(v, mp) / nb for v in self.b),
        )


@dataclass(frozen=True)
class SelectionWeights:
    """
    Pre-selection probabilities z_m = |a_m|^2 / N(a), stored in DAD index order k = 0..K.
    """

    z: Tuple[Any, ...]

    def __post_init__(self):
        if not self.z:
            raise InvalidParameterError("Selection weights must not be empty")
        if any(w < 0 for w in self.z):
            raise InvalidParameterError("Selection weights must be non-negative")
        total = sum(self.z, 0)
        if all(is_exact(w) for w in self.z):
            if total != 1:
                raise InvalidParameterError(f"Selection weights must sum to 1, got {total}")
        elif abs(total - 1) > 1e-10:
            raise InvalidParameterError(f"Selection weights must sum to 1, got {total}")

    @classmethod
    def from_unnormalized(cls, values: Sequence[Any]) -> "SelectionWeights":
        """Normalize arbitrary non-negative weights onto the simplex."""
        total = sum(values, 0)
        if total == 0:
            raise InvalidParameterError("Cannot normalize all-zero weights")
        return cls(tuple(v / total for v in values))


def success_probability(dad: Dad, z: SelectionWeights, ctx: PrecisionCtx) -> Any:
    """
    Probability of successful post-selection for pre-selection weights z.

    P(z) = [sum_m z_m * sum_m |eta_m|^2 / z_m]^-1, exact for exact weights and
    an exact DAD in EXACT mode.

    Raises:
        ZeroSelectionWeightError: If z_m = 0 on a channel with eta_m != 0
    """
    if len(z.z) != dad.spec.K + 1:
        raise InvalidParameterError(f"Expected {dad.spec.K + 1} selection weights, got {len(z.z)}")

    exact = dad.exact and ctx.is_exact and all(is_exact(w) for w in z.z)
    if exact:
        total_z = sum((Fraction(w) for w in z.z), Fraction(0))
        acc = Fraction(0)
        for k, (e, w) in enumerate(zip(dad.eta, z.z)):
            e2 = _abs2(e)
            if e2 == 0:
                continue
            if w == 0:
                raise ZeroSelectionWeightError(f"z_{k} = 0 on a channel with eta_{k} != 0")
            acc += e2 / Fraction(w)
        return 1 / (total_z * acc)

    mp = ctx.mp
    total_z = mp.fsum(to_mpf(w, mp) for w in z.z)
    terms = []
    for k, (e, w) in enumerate(zip(dad.eta, z.z)):
        e2 = _abs2(to_mpc(e, mp))
        if e2 == 0:
            continue
        if w == 0:
            raise ZeroSelectionWeightError(f"z_{k} = 0 on a channel with eta_{k} != 0")
        terms.append(e2 / to_mpf(w, mp))
    return 1 / (total_z * mp.fsum(terms))


@dataclass(frozen=True)
class OptimalSelection:
    """Best pre-selection weights, a matching state pair in the N(a) = 1 gauge, and P_best."""

    weights: SelectionWeights
    states: SpinStates
    p_best: Any


def _modulus(value: Any, mp: Any) -> Any:
    if isinstance(value, CRat) and value.is_real:
        return abs(value.re)
    return abs(to_mpc(value, mp))


def assign_phases(
    dad: Dad,
    params: Optional[ScenarioParams] = None,
    a_phases: Optional[Sequence[Any]] = None,
    a_moduli: Optional[Sequence[Any]] = None,
    b_moduli: Optional[Sequence[Any]] = None,
    ctx: Optional[PrecisionCtx] = None,
) -> SpinStates:
    """
    Spin states with prescribed moduli that reproduce the DAD.

    For spin component m = -k the post-selection phase is
    phase(b_m) = phase(a_m) - phase(eta_k) - m*omega_L*d/p0, so that
    exp(-i m omega_L d / p0) a_m b*_m = eta_k.

    Args:
        dad: Target distribution
        params: Scenario supplying the Larmor phase (zero when omitted)
        a_phases: Pre-selection phases in DAD index order (zeros when omitted)
        a_moduli: |a_m| in DAD index order (optimal gauge when omitted)
        b_moduli: |b_m| in DAD index order (optimal gauge when omitted)
        ctx: Numeric policy for the floating amplitudes

    Raises:
        ModulusMismatchError: If |a_m||b_m| differs from |eta_m|
    """
    K = dad.spec.K
    digits = max(ctx.digits if ctx else 0, required_digits(dad.spec))
    theta = larmor_phase(params) if params is not None else Fraction(0)
    a_phases = list(a_phases) if a_phases is not None else [0] * (K + 1)
    if len(a_phases) != K + 1:
        raise InvalidParameterError(f"Expected {K + 1} pre-selection phases, got {len(a_phases)}")

    mp = mp_context(digits)
    S = to_mpf(dad.abs_sum, mp)
    moduli = [to_mpf(_modulus(e, mp), mp) for e in dad.eta]
    if a_moduli is None:
        a_moduli = [mp.sqrt(r / S) for r in moduli]
    if b_moduli is None:
        b_moduli = [mp.sqrt(r * S) for r in moduli]
    if len(a_moduli) != K + 1 or len(b_moduli) != K + 1:
        raise InvalidParameterError(f"Expected {K + 1} moduli per state")

    tolerance = mp.mpf(10) ** (10 - digits)
    a = [mp.mpc(0)] * (2 * K + 1)
    b = [mp.mpc(0)] * (2 * K + 1)
    for k in range(K + 1):
        m = spin_component(k)
        ra, rb = to_mpf(a_moduli[k], mp), to_mpf(b_moduli[k], mp)
        if abs(ra * rb - moduli[k]) > tolerance * max(moduli[k], 1):
            raise ModulusMismatchError(
                f"|a||b| = {mp.nstr(ra * rb, 15)} but |eta_{k}| = {mp.nstr(moduli[k], 15)}"
            )
        eta_k = to_mpc(dad.eta[k], mp)
        phase_eta = mp.arg(eta_k) if eta_k != 0 else mp.zero
        phase_a = to_mpf(a_phases[k], mp)
        phase_b = phase_a - phase_eta - m * to_mpf(theta, mp)
        a[m + K] = ra * mp.expj(phase_a)
        b[m + K] = rb * mp.expj(phase_b)

    return SpinStates(K, tuple(a), tuple(b))


def optimal_states(
    dad: Dad,
    params: Optional[ScenarioParams] = None,
    a_phases: Optional[Sequence[Any]] = None,
    ctx: Optional[PrecisionCtx] = None,
) -> OptimalSelection:
    """
    Pre-selection maximizing the success probability.

    z_m = |eta_m| / sum|eta| and P_best = 1/(sum|eta|)^2; the state moduli
    satisfy |a_m|^2 = C|eta_m|, |b_m|^2 = |eta_m|/C with C = 1/sum|eta| so that
    N(a) = 1. For complex weights the same optimum is used with |eta_m| as
    the complex modulus.
    """
    if not any(e != 0 for e in dad.eta):
        raise DegenerateDistributionError("A DAD with all weights zero has no optimal pre-selection")

    S = dad.abs_sum
    if isinstance(S, Fraction):
        weights = SelectionWeights(tuple(abs(e.re) / S for e in dad.eta))
        p_best = 1 / (S * S)
    else:
        digits = max(ctx.digits if ctx else 0, required_digits(dad.spec))
        mp = mp_context(digits)
        total = to_mpf(S, mp)
        weights = SelectionWeights(tuple(abs(to_mpc(e, mp)) / total for e in dad.eta))
        p_best = 1 / (total * total)

    states = assign_phases(dad, params, a_phases, ctx=ctx)
    return OptimalSelection(weights, states, p_best)


def dad_from_states(
    states: SpinStates,
    params: ScenarioParams,
    ctx: PrecisionCtx,
    alpha: Any = None,
) -> Dad:
    """
    DAD induced by a pre/post-selection pair.

    eta_k = exp(-i m omega_L d / p0) a_m b*_m for m = -k, normalized so that
    sum_k eta_k = 1 (the overall factor is absorbed into the transmitted
    amplitude). Inverse of assign_phases.

    Recovery holds to working precision, not exactly: the Larmor phase factor
    is transcendental and optimal moduli are square roots, so the weights come
    back as mpmath complex numbers at ``ctx.digits`` digits with
    ``abs_sum_error`` set.

    Args:
        states: Spin states
        params: Scenario supplying delta_x and the Larmor phase
        ctx: Numeric policy
        alpha: Target shift recorded in the spec; defaults to the first moment

    Raises:
        DegenerateDistributionError: If the products vanish or cancel
    """
    K = states.K
    if params.K != K:
        raise InvalidParameterError(f"Scenario order {params.K} does not match spin order {K}")

    mp = ctx.mp
    theta = to_mpf(larmor_phase(params), mp)
    raw = []
    for k in range(K + 1):
        m = spin_component(k)
        a_m = to_mpc(states.amplitude_a(m), mp)
        b_m = to_mpc(states.amplitude_b(m), mp)
        raw.append(mp.expj(-m * theta) * a_m * mp.conj(b_m))

    if all(v == 0 for v in raw):
        raise DegenerateDistributionError("Pre- and post-selection share no component")
    floating = PrecisionCtx.floating(ctx.digits)
    total = sum_compensated(raw, floating).value
    if total == 0:
        raise DegenerateDistributionError("Channel products cancel to zero")
    eta = tuple(v / total for v in raw)

    dx = delta_x(params)
    if alpha is None:
        alpha = sum_compensated([-k * to_mpf(dx, mp) * e for k, e in enumerate(eta)], floating).value
    moduli = [abs(e) for e in eta]
    abs_total = sum_compensated(moduli, floating)
    # each modulus is rounded once, at most one ulp of the largest term
    error = abs_total.error_bound + len(moduli) * mp.ldexp(mp.one, int(mp.mag(max(moduli))) - mp.prec)
    return Dad(DadSpec(K, dx, alpha), eta, False, abs_total.value.real, error)
