"""
Precision module for the quasidirac package.

This module defines the numeric tower shared by every other module: exact
rationals (Rat), exact complex rationals (CRat), configurable-precision mpmath
floats, the numeric policy object (PrecisionCtx) and cancellation-safe
summation with an attached rounding-error bound.
"""

import logging
import math
import numbers
import threading
from dataclasses import dataclass, replace
from decimal import Decimal
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Any, Iterable, List, Optional, Tuple

import mpmath
from mpmath.ctx_mp import MPContext

from quasidirac.errors import InsufficientPrecisionError, InvalidParameterError, PrecisionOverflowError
from utils.config import GUARD_DIGITS, MIN_DIGITS

logger = logging.getLogger(__name__)

Rat = Fraction


def as_rational(value: Any) -> Fraction:
    """
    Convert a real input to an exact rational.

    Python floats are read through their shortest decimal representation, so
    ``-15.5`` and ``0.1`` become ``-31/2`` and ``1/10``.

    Args:
        value: int, Fraction, Decimal, float, decimal/fraction string or numbers.Rational

    Returns:
        Equivalent Fraction

    Raises:
        InvalidParameterError: If the value is not finite or not real
    """
    if isinstance(value, bool):
        raise InvalidParameterError(f"Boolean {value!r} is not a number")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise InvalidParameterError(f"Non-finite value {value!r}")
        return Fraction(repr(float(value)))
    if isinstance(value, Decimal):
        if not value.is_finite():
            raise InvalidParameterError(f"Non-finite value {value!r}")
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise InvalidParameterError(f"Cannot parse {value!r} as a rational number: {e}") from e
    if isinstance(value, CRat):
        if value.im != 0:
            raise InvalidParameterError(f"Complex value {value} where a real one is required")
        return value.re
    if isinstance(value, numbers.Rational):
        return Fraction(value.numerator, value.denominator)
    raise InvalidParameterError(f"{value!r} has no exact rational representation")


@dataclass(frozen=True, eq=False)
class CRat:
    """
    Exact complex rational re + i*im.

    Both components are normalized Fractions; instances compare equal to
    ints and Fractions when the imaginary part vanishes.
    """

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", as_rational(self.re))
        object.__setattr__(self, "im", as_rational(self.im))

    @classmethod
    def coerce(cls, value: Any) -> "CRat":
        """Build a CRat from any exact scalar, including Python complex."""
        if isinstance(value, CRat):
            return value
        if isinstance(value, complex):
            return cls(as_rational(value.real), as_rational(value.imag))
        return cls(as_rational(value), Fraction(0))

    @staticmethod
    def _other(value: Any) -> Optional["CRat"]:
        if isinstance(value, CRat):
            return value
        if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
            return CRat(value)
        if isinstance(value, complex):
            return CRat.coerce(value)
        return None

    @property
    def is_real(self) -> bool:
        return self.im == 0

    def conjugate(self) -> "CRat":
        return CRat(self.re, -self.im)

    def abs2(self) -> Fraction:
        """Exact squared modulus."""
        return self.re * self.re + self.im * self.im

    def __add__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return CRat(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return CRat(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return CRat(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        d = o.abs2()
        if d == 0:
            raise ZeroDivisionError("CRat division by zero")
        n = self * o.conjugate()
        return CRat(n.re / d, n.im / d)

    def __rtruediv__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return o / self

    def __neg__(self):
        return CRat(-self.re, -self.im)

    def __pos__(self):
        return self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return CRat(1) / (self ** -n)
        result = CRat(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        o = self._other(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"CRat({self.re}, {self.im})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        sign = "+" if self.im >= 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}i)"


def is_exact(value: Any) -> bool:
    """True when the value has an exact (complex) rational representation."""
    if isinstance(value, bool):
        return False
    return isinstance(value, (int, Fraction, CRat, Decimal, float, complex, str, numbers.Rational))


def as_complex_rational(value: Any) -> CRat:
    """Convert an exact scalar to CRat; raises InvalidParameterError otherwise."""
    if not is_exact(value):
        raise InvalidParameterError(f"{value!r} has no exact complex rational representation")
    return CRat.coerce(value)


_contexts = threading.local()


def mp_context(digits: int) -> MPContext:
    """
    Thread-private mpmath context with a fixed precision of ``digits`` decimal digits.

    Contexts are cached per thread and their precision is never changed
    after creation, so nothing here touches the process-wide ``mpmath.mp``.
    Numbers keep a reference to the context that produced them; arithmetic
    on a number rounds at that context's precision.
    """
    cache = getattr(_contexts, "by_digits", None)
    if cache is None:
        cache = _contexts.by_digits = {}
    mp = cache.get(digits)
    if mp is None:
        mp = MPContext()
        mp.dps = digits
        cache[digits] = mp
    return mp


def to_mpf(value: Any, mp: MPContext = mpmath.mp) -> mpmath.mpf:
    """Convert a real scalar to an mpf of context ``mp`` (the global context when omitted)."""
    if isinstance(value, CRat):
        value = as_rational(value)
    if isinstance(value, Fraction):
        return mp.mpf(value.numerator) / value.denominator
    if isinstance(value, (Decimal, str)):
        return mp.mpf(str(value))
    return mp.mpf(value)


def to_mpc(value: Any, mp: MPContext = mpmath.mp) -> mpmath.mpc:
    """Convert any scalar to an mpc of context ``mp`` (the global context when omitted)."""
    if isinstance(value, CRat):
        return mp.mpc(to_mpf(value.re, mp), to_mpf(value.im, mp))
    if isinstance(value, (Fraction, int, Decimal, str)):
        return mp.mpc(to_mpf(value, mp), 0)
    return mp.mpc(value)


def is_mp_real(value: Any) -> bool:
    """True for an mpf of any mpmath context."""
    return hasattr(value, "_mpf_")


def is_mp_complex(value: Any) -> bool:
    """True for an mpc of any mpmath context."""
    return hasattr(value, "_mpc_")


def re_im(value: Any) -> Tuple[Any, Any]:
    """Split any supported scalar into (real, imaginary) parts without losing exactness."""
    if isinstance(value, CRat):
        return value.re, value.im
    if isinstance(value, (int, Fraction)):
        return Fraction(value), Fraction(0)
    if is_mp_complex(value):
        return value.real, value.imag
    if isinstance(value, complex):
        return value.real, value.imag
    return value, 0


class PrecisionMode(str, Enum):
    """Numeric policy: exact rationals or mpmath floats."""

    EXACT = "exact"
    FLOAT = "float"


@dataclass(frozen=True)
class PrecisionCtx:
    """
    Numeric policy object.

    In EXACT mode every dad_core result is an exact (complex) rational;
    ``digits`` then only sets the precision of transcendental evaluations
    (envelopes, phases). In FLOAT mode all arithmetic runs in mpmath with
    ``digits`` decimal digits.

    Arithmetic happens in the thread-private context returned by ``mp``, so
    policies may be used from several threads at once.
    """

    mode: PrecisionMode = PrecisionMode.EXACT
    digits: int = 50

    def __post_init__(self):
        object.__setattr__(self, "mode", PrecisionMode(self.mode))
        if not isinstance(self.digits, int) or self.digits < MIN_DIGITS:
            raise InvalidParameterError(
                f"Working precision must be an integer >= {MIN_DIGITS} digits, got {self.digits!r}"
            )

    @classmethod
    def exact(cls, digits: int = 50) -> "PrecisionCtx":
        return cls(PrecisionMode.EXACT, digits)

    @classmethod
    def floating(cls, digits: int) -> "PrecisionCtx":
        return cls(PrecisionMode.FLOAT, digits)

    @property
    def is_exact(self) -> bool:
        return self.mode is PrecisionMode.EXACT

    def with_digits(self, digits: int) -> "PrecisionCtx":
        return replace(self, digits=digits)

    @property
    def mp(self) -> MPContext:
        """mpmath context at ``digits`` digits, private to the calling thread."""
        return mp_context(self.digits)

    def context(self, extra: int = 0) -> MPContext:
        """mpmath context at ``digits + extra`` digits, private to the calling thread."""
        return mp_context(self.digits + extra)


@dataclass(frozen=True)
class SumResult:
    """Sum of a term list with an upper bound on its accumulated rounding error."""

    value: Any
    error_bound: Any
    exact: bool


def _check_finite(x: mpmath.mpc, what: str, mp: MPContext) -> None:
    for part in (x.real, x.imag):
        if mp.isinf(part) or mp.isnan(part):
            raise PrecisionOverflowError(f"Non-finite {what} encountered during summation: {x}")


def _ulp(x: mpmath.mpf, mp: MPContext) -> mpmath.mpf:
    if not x:
        return mp.zero
    return mp.ldexp(mp.one, int(mp.mag(x)) - mp.prec)


def _neumaier(values: List[mpmath.mpf], mp: MPContext) -> Tuple[mpmath.mpf, mpmath.mpf]:
    total = mp.zero
    compensation = mp.zero
    largest = mp.zero
    for val in values:
        t = total + val
        if abs(total) >= abs(val):
            compensation += (total - t) + val
        else:
            compensation += (val - t) + total
        total = t
        largest = max(largest, abs(total), abs(val))
    bound = len(values) * _ulp(largest, mp)
    return total + compensation, bound


def sum_compensated(terms: Iterable[Any], ctx: PrecisionCtx) -> SumResult:
    """
    Sum terms with Neumaier compensation and report an error bound.

    In EXACT mode with exact terms the sum is a CRat and the bound is zero.
    Otherwise real and imaginary parts are summed separately at
    ``ctx.digits`` digits; the bound is (number of terms) x ulp(largest
    partial magnitude) per component, an upper bound that is not tight.

    Args:
        terms: Non-empty sequence of scalars
        ctx: Numeric policy

    Returns:
        SumResult with value, error_bound and exactness flag

    Raises:
        InvalidParameterError: If terms is empty
        PrecisionOverflowError: If any term or the result is inf or nan
    """
    terms = list(terms)
    if not terms:
        raise InvalidParameterError("sum_compensated needs at least one term")

    if ctx.is_exact and all(is_exact(t) for t in terms):
        total = CRat(0)
        for t in terms:
            total = total + CRat.coerce(t)
        return SumResult(total, Fraction(0), True)

    mp = ctx.mp
    values = [to_mpc(t, mp) for t in terms]
    for v in values:
        _check_finite(v, "term", mp)
    re_sum, re_bound = _neumaier([v.real for v in values], mp)
    im_sum, im_bound = _neumaier([v.imag for v in values], mp)
    result = mp.mpc(re_sum, im_sum)
    _check_finite(result, "sum", mp)
    return SumResult(result, re_bound + im_bound, False)


def ceil_log10(value: Any) -> int:
    """Smallest integer k with 10**k >= value (exact for rationals)."""
    if isinstance(value, (int, Fraction)):
        value = Fraction(value)
        if value <= 0:
            raise InvalidParameterError("ceil_log10 needs a positive value")
        k = len(str(value.numerator)) - len(str(value.denominator))
        while Fraction(10) ** k < value:
            k += 1
        while Fraction(10) ** (k - 1) >= value:
            k -= 1
        return k
    mp = mp_context(30)
    return int(mp.ceil(mp.log10(to_mpf(value, mp))))


def abs_weight_sum(K: int, beta: Any) -> Any:
    """
    Sum of |eta_m| for order K and shift beta = alpha/delta_x.

    Uses |eta_m| = prod_{j != m} |j + beta| / (m! (K-m)!), which involves no
    cancellation. Exact Fraction for real rational beta; mpf (30 digits)
    otherwise.
    """
    if is_exact(beta) and CRat.coerce(beta).is_real:
        b = as_rational(CRat.coerce(beta))
        return _product_weight_sum([abs(j + b) for j in range(K + 1)], Fraction(1))

    mp = mp_context(30)
    b = to_mpc(beta, mp)
    return _product_weight_sum([abs(j + b) for j in range(K + 1)], mp.one)


def _product_weight_sum(factors: List[Any], one: Any) -> Any:
    K = len(factors) - 1
    prefix = [one]
    for f in factors[:-1]:
        prefix.append(prefix[-1] * f)
    suffix = [one] * (K + 1)
    for m in range(K - 1, -1, -1):
        suffix[m] = suffix[m + 1] * factors[m + 1]
    total = 0 * one
    for m in range(K + 1):
        total += prefix[m] * suffix[m] / (math.factorial(m) * math.factorial(K - m))
    return total


def required_digits(spec: Any) -> int:
    """
    Working precision needed for DAD-weighted sums of unit-bounded terms.

    Returns ceil(log10 sum_m |eta_m|) + GUARD_DIGITS, never below MIN_DIGITS.

    Args:
        spec: Object with ``K`` and ``beta`` attributes (a DadSpec)

    Returns:
        Decimal digits of working precision
    """
    magnitude = _weight_magnitude(spec.K, spec.beta)
    return max(max(magnitude, 0) + GUARD_DIGITS, MIN_DIGITS)


@lru_cache(maxsize=256)
def _weight_magnitude(K: int, beta: Any) -> int:
    return ceil_log10(abs_weight_sum(K, beta))


def resolve_context(spec: Any, mode: Optional[PrecisionMode] = None, digits: Optional[int] = None) -> PrecisionCtx:
    """
    Choose the numeric policy for a spec.

    EXACT is the default whenever beta is (complex) rational and FLOAT
    otherwise. Without an explicit digit count the context gets
    required_digits(spec).

    Raises:
        InvalidParameterError: If EXACT mode is requested for an inexact shift
    """
    if mode is None:
        mode = PrecisionMode.EXACT if spec.is_exact else PrecisionMode.FLOAT
    mode = PrecisionMode(mode)
    if mode is PrecisionMode.EXACT and not spec.is_exact:
        raise InvalidParameterError("Exact mode requires a rational shift and spacing")
    if digits is None:
        digits = required_digits(spec)
    logger.debug(f"Resolved precision: mode={mode.value}, digits={digits}")
    return PrecisionCtx(mode, digits)


def format_rational(value: Any) -> str:
    """Exact 'p/q' rendering of a real rational."""
    return str(as_rational(value))


def format_decimal(value: Any, digits: int) -> str:
    """
    Deterministic decimal rendering of a real scalar with ``digits`` significant digits.

    The same input always yields the same string, which keeps golden files
    byte-stable.
    """
    if isinstance(value, complex) or is_mp_complex(value) or (isinstance(value, CRat) and not value.is_real):
        raise InvalidParameterError("format_decimal renders real values; split complex values first")
    mp = mp_context(digits + 10)
    return mp.nstr(to_mpf(value, mp), digits)


def working_context(spec: Any, ctx: PrecisionCtx) -> PrecisionCtx:
    """
    Precision gate for DAD-weighted sums.

    FLOAT mode must already carry required_digits(spec) digits; EXACT mode
    weights are exact, so the evaluation precision is simply raised.

    Raises:
        InsufficientPrecisionError: If a FLOAT context is below required_digits(spec)
    """
    needed = required_digits(spec)
    if ctx.is_exact:
        return ctx.with_digits(max(ctx.digits, needed))
    if ctx.digits < needed:
        raise InsufficientPrecisionError(needed, ctx.digits)
    return ctx
