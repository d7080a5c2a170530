"""
Delay amplitude distribution (DAD) module.

This module constructs quasi-Dirac distributions of order K: weights eta_m on
the nodes x_m = -m*delta_x (m = 0..K) whose normalization and first K moments
equal those of a Dirac delta at an arbitrary, possibly complex, shift alpha.
The weights come from the closed-form Lagrange extrapolation formula; an
independent exact Vandermonde solve serves as an oracle.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, List, Optional, Sequence, Tuple

from quasidirac.errors import InvalidParameterError
from quasidirac.precision import (
    CRat,
    PrecisionCtx,
    as_complex_rational,
    as_rational,
    is_exact,
    is_mp_complex,
    mp_context,
    required_digits,
    resolve_context,
    sum_compensated,
    to_mpc,
    to_mpf,
)
from utils.config import VANDERMONDE_MAX_ORDER

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DadSpec:
    """
    Full problem statement for a DAD.

    Exact inputs (ints, Fractions, decimal strings, floats read as decimals,
    CRat, Python complex) are normalized to Fraction/CRat; mpmath numbers are
    kept as given and make the spec inexact.

    Attributes:
        K: Order of the distribution (number of nodes minus one)
        delta_x: Node spacing, positive
        alpha: Target shift, possibly complex
    """

    K: int
    delta_x: Any = Fraction(1)
    alpha: Any = CRat(0)

    def __post_init__(self):
        if isinstance(self.K, bool) or not isinstance(self.K, int) or self.K < 0:
            raise InvalidParameterError(f"Order K must be a non-negative integer, got {self.K!r}")

        delta_x = self.delta_x
        if is_exact(delta_x) and not isinstance(delta_x, complex):
            delta_x = as_rational(delta_x)
        elif is_mp_complex(delta_x):
            if delta_x.imag != 0:
                raise InvalidParameterError("delta_x must be real")
            delta_x = delta_x.real
        if not delta_x > 0:
            raise InvalidParameterError(f"delta_x must be positive, got {self.delta_x!r}")
        object.__setattr__(self, "delta_x", delta_x)

        if is_exact(self.alpha):
            object.__setattr__(self, "alpha", as_complex_rational(self.alpha))

    @classmethod
    def from_beta(cls, K: int, beta: Any, delta_x: Any = 1) -> "DadSpec":
        """Build a spec from the dimensionless shift beta = alpha/delta_x."""
        if is_exact(beta) and is_exact(delta_x):
            return cls(K, delta_x, as_complex_rational(beta) * as_rational(delta_x))
        return cls(K, delta_x, beta * delta_x)

    @classmethod
    def from_alpha_tilde(cls, K: int, alpha_tilde: Any, delta_x: Any = 1) -> "DadSpec":
        """Build a spec from alpha/(K*delta_x), the shift in units of the support width."""
        if K == 0:
            raise InvalidParameterError("alpha/(K*delta_x) is undefined for K = 0")
        if is_exact(alpha_tilde) and is_exact(delta_x):
            return cls(K, delta_x, as_complex_rational(alpha_tilde) * K * as_rational(delta_x))
        return cls(K, delta_x, alpha_tilde * K * delta_x)

    @property
    def is_exact(self) -> bool:
        return isinstance(self.delta_x, Fraction) and isinstance(self.alpha, CRat)

    @property
    def beta(self) -> Any:
        """alpha/delta_x: CRat when exact, otherwise an mpc in the context of the inexact input."""
        if self.is_exact:
            return self.alpha / self.delta_x
        mp = getattr(self.alpha, "context", None) or self.delta_x.context
        return to_mpc(self.alpha, mp) / to_mpf(self.delta_x, mp)

    @property
    def alpha_tilde(self) -> Any:
        if self.K == 0:
            raise InvalidParameterError("alpha/(K*delta_x) is undefined for K = 0")
        return self.beta / self.K

    @property
    def support(self) -> Tuple[Any, Any]:
        """The support interval [-K*delta_x, 0]."""
        return (-self.K * self.delta_x, 0 * self.delta_x)


@dataclass(frozen=True)
class Dad:
    """
    A quasi-Dirac distribution eta(x) = sum_m eta_m delta(x + m*delta_x).

    Attributes:
        spec: The problem statement
        eta: K+1 weights, CRat when exact, mpc otherwise
        exact: Whether the weights are exact rationals
        abs_sum: sum_m |eta_m|
        abs_sum_error: Rounding-error bound on abs_sum; zero when it is exact
    """

    spec: DadSpec
    eta: Tuple[Any, ...]
    exact: bool
    abs_sum: Any
    abs_sum_error: Any = Fraction(0)

    def __post_init__(self):
        if len(self.eta) != self.spec.K + 1:
            raise InvalidParameterError(
                f"A DAD of order {self.spec.K} needs {self.spec.K + 1} weights, got {len(self.eta)}"
            )

    @property
    def nodes(self) -> Tuple[Any, ...]:
        return tuple(-m * self.spec.delta_x for m in range(self.spec.K + 1))

    @property
    def is_real(self) -> bool:
        if self.exact:
            return all(e.is_real for e in self.eta)
        return all(e.imag == 0 for e in self.eta)

    @property
    def is_kronecker(self) -> bool:
        """True when a single node carries unit weight (a pure delay)."""
        live = [e for e in self.eta if e != 0]
        return len(live) == 1 and live[0] == 1

    @property
    def is_nonnegative(self) -> bool:
        """Non-negative real weights; only the Kronecker case satisfies the moment system this way."""
        if not self.is_real:
            return False
        return all((e.re if self.exact else e.real) >= 0 for e in self.eta)


def _lagrange_weights(factors: Sequence[Any], one: Any) -> List[Any]:
    """eta_m = (-1)^m prod_{j != m} factors[j] / (m! (K-m)!), via prefix/suffix products."""
    K = len(factors) - 1
    prefix = [one]
    for f in factors[:-1]:
        prefix.append(prefix[-1] * f)
    suffix = [one] * (K + 1)
    for m in range(K - 1, -1, -1):
        suffix[m] = suffix[m + 1] * factors[m + 1]

    weights = []
    for m in range(K + 1):
        w = prefix[m] * suffix[m] / (math.factorial(m) * math.factorial(K - m))
        weights.append(-w if m % 2 else w)
    return weights


def _abs_sum(spec: DadSpec, eta: Sequence[Any], exact: bool, ctx: PrecisionCtx) -> Tuple[Any, Any]:
    """sum_m |eta_m| and its error bound; complex moduli are summed at required_digits or more."""
    if exact and all(e.is_real for e in eta):
        return sum((abs(e.re) for e in eta), Fraction(0)), Fraction(0)
    digits = max(ctx.digits, required_digits(spec)) if exact else ctx.digits
    mp = mp_context(digits)
    moduli = [abs(to_mpc(e, mp)) for e in eta]
    summed = sum_compensated(moduli, PrecisionCtx.floating(digits))
    # each modulus is rounded once, at most one ulp of the largest term
    bound = summed.error_bound + len(moduli) * mp.ldexp(mp.one, int(mp.mag(max(moduli))) - mp.prec)
    return summed.value.real, bound


def eta_closed_form(spec: DadSpec, ctx: Optional[PrecisionCtx] = None) -> Dad:
    """
    Closed-form DAD weights.

    eta_m = (-1)^m prod_{j=0..K, j != m} (j + beta) / (m! (K-m)!) with
    beta = alpha/delta_x. Factorials and products use arbitrary-size integers
    and exact rationals in EXACT mode; there is no cap on K.

    Args:
        spec: Problem statement
        ctx: Numeric policy; resolved from the spec when omitted

    Returns:
        The Dad
    """
    ctx = ctx or resolve_context(spec)
    K = spec.K

    if ctx.is_exact:
        if not spec.is_exact:
            raise InvalidParameterError("Exact mode requires a rational shift and spacing")
        beta = spec.beta
        eta = _lagrange_weights([beta + j for j in range(K + 1)], CRat(1))
        return Dad(spec, tuple(eta), True, *_abs_sum(spec, eta, True, ctx))

    mp = ctx.mp
    beta = to_mpc(spec.alpha, mp) / to_mpf(spec.delta_x, mp)
    eta = _lagrange_weights([beta + j for j in range(K + 1)], mp.mpc(1))
    return Dad(spec, tuple(eta), False, *_abs_sum(spec, eta, False, ctx))


def build_dad(spec: DadSpec, ctx: Optional[PrecisionCtx] = None) -> Dad:
    """Front door: closed-form weights under the resolved numeric policy."""
    return eta_closed_form(spec, ctx or resolve_context(spec))


def _bareiss_solve(matrix: List[List[int]], rhs: List[CRat]) -> List[CRat]:
    """Fraction-free elimination on an integer matrix with an exact complex rational right-hand side."""
    n = len(matrix)
    M = [row[:] for row in matrix]
    r = list(rhs)
    prev = 1
    for k in range(n - 1):
        if M[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if M[i][k] != 0), None)
            if swap is None:
                raise InvalidParameterError("Singular moment system (repeated nodes)")
            M[k], M[swap] = M[swap], M[k]
            r[k], r[swap] = r[swap], r[k]
        pivot = M[k][k]
        for i in range(k + 1, n):
            lead = M[i][k]
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * pivot - lead * M[k][j]) // prev
            r[i] = (r[i] * pivot - r[k] * lead) / prev
            M[i][k] = 0
        prev = pivot

    if M[n - 1][n - 1] == 0:
        raise InvalidParameterError("Singular moment system (repeated nodes)")

    x: List[CRat] = [CRat(0)] * n
    for i in range(n - 1, -1, -1):
        acc = r[i]
        for j in range(i + 1, n):
            acc = acc - x[j] * M[i][j]
        x[i] = acc / M[i][i]
    return x


def _lu_solve(A: List[List[Any]], rhs: List[Any], mp: Any) -> List[Any]:
    """LU solve in mpmath; warns when the condition number exceeds 10^(digits/2)."""
    matrix = mp.matrix(A)
    try:
        hazard = mp.cond(matrix) > mp.mpf(10) ** (mp.dps / 2)
    except ZeroDivisionError:
        hazard = True
    if hazard:
        logger.warning(
            f"Vandermonde condition hazard: condition number above 10^{mp.dps / 2:.0f} at {mp.dps} digits"
        )
    try:
        solution = mp.lu_solve(matrix, mp.matrix(rhs))
    except ZeroDivisionError as e:
        raise InvalidParameterError(f"Moment system is numerically singular at {mp.dps} digits") from e
    return [mp.mpc(solution[i]) for i in range(len(rhs))]


def eta_vandermonde(spec: DadSpec, ctx: Optional[PrecisionCtx] = None) -> Dad:
    """
    DAD weights from a direct solve of the moment system.

    Solves sum_m (-m*delta_x)^n eta_m = alpha^n, n = 0..K. In EXACT mode the
    rows are scaled by q^n (delta_x = p/q) to an integer matrix and solved by
    fraction-free elimination; FLOAT mode uses mpmath's LU solver.
    Exists as an independent oracle for eta_closed_form.

    Raises:
        InvalidParameterError: If K exceeds the oracle cap, or a FLOAT solve is numerically singular
    """
    ctx = ctx or resolve_context(spec)
    K = spec.K
    if K > VANDERMONDE_MAX_ORDER:
        raise InvalidParameterError(
            f"Vandermonde oracle is limited to K <= {VANDERMONDE_MAX_ORDER}, got K = {K}"
        )

    if ctx.is_exact:
        if not spec.is_exact:
            raise InvalidParameterError("Exact mode requires a rational shift and spacing")
        p, q = spec.delta_x.numerator, spec.delta_x.denominator
        scaled_alpha = spec.alpha * q
        matrix = [[(-m * p) ** n for m in range(K + 1)] for n in range(K + 1)]
        rhs = [scaled_alpha ** n for n in range(K + 1)]
        eta = _bareiss_solve(matrix, rhs)
        return Dad(spec, tuple(eta), True, *_abs_sum(spec, eta, True, ctx))

    mp = ctx.mp
    dx = to_mpf(spec.delta_x, mp)
    alpha = to_mpc(spec.alpha, mp)
    A = [[(-m * dx) ** n for m in range(K + 1)] for n in range(K + 1)]
    rhs = [alpha ** n for n in range(K + 1)]
    eta = _lu_solve(A, rhs, mp)
    return Dad(spec, tuple(eta), False, *_abs_sum(spec, eta, False, ctx))


def moment(dad: Dad, n: int, ctx: PrecisionCtx) -> Any:
    """
    n-th moment sum_m eta_m (-m*delta_x)^n.

    Equals alpha^n for 0 <= n <= K, exactly in EXACT mode.
    """
    if isinstance(n, bool) or not isinstance(n, int) or n < 0:
        raise InvalidParameterError(f"Moment order must be a non-negative integer, got {n!r}")

    if dad.exact and ctx.is_exact:
        dx = dad.spec.delta_x
        terms = [e * (-m * dx) ** n for m, e in enumerate(dad.eta)]
        return sum_compensated(terms, ctx).value

    mp = ctx.mp
    dx = to_mpf(dad.spec.delta_x, mp)
    terms = [to_mpc(e, mp) * (-m * dx) ** n for m, e in enumerate(dad.eta)]
    return sum_compensated(terms, ctx).value


@dataclass(frozen=True)
class MomentRow:
    """One row of a moment table; ratio is None when alpha = 0 and n > 0."""

    n: int
    moment: Any
    target: Any
    ratio: Optional[Any]


def moment_table(dad: Dad, n_max: int, ctx: PrecisionCtx) -> List[MomentRow]:
    """
    Moments against alpha^n for n = 0..n_max.

    For n <= K the ratio is exactly 1 in EXACT mode; beyond K the moments
    depart from alpha^n.
    """
    if isinstance(n_max, bool) or not isinstance(n_max, int) or n_max < 0:
        raise InvalidParameterError(f"n_max must be a non-negative integer, got {n_max!r}")

    exact = dad.exact and ctx.is_exact
    rows = []
    for n in range(n_max + 1):
        value = moment(dad, n, ctx)
        if exact:
            target = dad.spec.alpha ** n
        else:
            target = to_mpc(dad.spec.alpha, ctx.mp) ** n
        if target == 0:
            ratio = None
        elif exact:
            ratio = value / target
        else:
            ratio = to_mpc(value, ctx.mp) / target
        rows.append(MomentRow(n, value, target, ratio))
    return rows


def abs_sum(dad: Dad) -> Any:
    """sum_m |eta_m|: exact for real rational weights, mpf at required_digits otherwise."""
    return dad.abs_sum
