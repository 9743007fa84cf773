"""Midpoint-radius ("ball") arithmetic with certified enclosures.

Every real quantity in this package is carried as a :class:`Ball`: an MPFR
midpoint together with a non-negative radius such that the true mathematical
value is guaranteed to lie in ``[mid - rad, mid + rad]``.  Midpoints are
computed with MPFR's correctly rounded operations at an explicit working
precision; rounding errors and the propagation of input radii are accumulated
into the radius using directed (outward) rounding, so containment is sound by
construction, not by heuristic.

Integer decisions (ceilings, floors, comparisons against integers) are only
made through the certified helpers in this module, which refuse to answer
when an enclosure straddles the relevant boundary.  Callers react to that by
escalating the working precision, never by rounding a midpoint.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

import gmpy2
from gmpy2 import mpfr, mpq, mpz

__all__ = [
    "Ball",
    "BallDomainError",
    "INDETERMINATE",
    "Indeterminate",
    "PrecisionExhaustedError",
    "PrecisionPolicy",
    "as_ball",
    "ball_add",
    "ball_div",
    "ball_exp",
    "ball_ln",
    "ball_mul",
    "ball_neg",
    "ball_pow_int",
    "ball_root",
    "ball_sub",
    "certified_ceiling",
    "certified_floor",
    "classify",
]

# Radius bookkeeping runs at this fixed low precision with outward rounding;
# radii only need a couple of correct leading bits to be sound.
_RAD_BITS = 32

_tls = threading.local()


class BallDomainError(ArithmeticError):
    """An enclosure touches a region where the operation is undefined.

    Raised e.g. for the logarithm of an enclosure that touches zero.  The
    usual remedy is to re-evaluate the offending expression at a higher
    working precision.
    """


class PrecisionExhaustedError(RuntimeError):
    """Escalation reached ``max_escalations`` without a certified result."""


class Indeterminate:
    """Singleton outcome for enclosure queries that cannot be decided."""

    _instance = None

    def __new__(cls) -> "Indeterminate":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "Indeterminate"


INDETERMINATE = Indeterminate()


def _nearest(bits: int) -> tuple[gmpy2.context, mpfr]:
    """Thread-local round-to-nearest context plus the relative half-ulp 2^-bits."""
    cache = getattr(_tls, "nearest", None)
    if cache is None:
        cache = _tls.nearest = {}
    entry = cache.get(bits)
    if entry is None:
        ctx = gmpy2.context(precision=bits, round=gmpy2.RoundToNearest)
        entry = cache[bits] = (ctx, ctx.exp2(-bits))
    return entry


def _up() -> gmpy2.context:
    ctx = getattr(_tls, "up", None)
    if ctx is None:
        ctx = _tls.up = gmpy2.context(precision=_RAD_BITS, round=gmpy2.RoundUp)
    return ctx


def _down() -> gmpy2.context:
    ctx = getattr(_tls, "down", None)
    if ctx is None:
        ctx = _tls.down = gmpy2.context(precision=_RAD_BITS, round=gmpy2.RoundDown)
    return ctx


_ZERO = mpfr(0)


class Ball:
    """An enclosure ``[mid - rad, mid + rad]`` of one real number.

    Instances are immutable; all arithmetic goes through the module-level
    ``ball_*`` functions, which take the working precision explicitly.
    """

    __slots__ = ("mid", "rad")

    def __init__(self, mid: mpfr, rad: mpfr = _ZERO):
        if rad < 0 or gmpy2.is_nan(rad):
            raise ValueError(f"ball radius must be non-negative, got {rad}")
        object.__setattr__(self, "mid", mid)
        object.__setattr__(self, "rad", rad)

    def __setattr__(self, name: str, value) -> None:
        raise AttributeError("Ball instances are immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def exact(cls, value: Union[int, float, mpfr, mpz]) -> "Ball":
        """Radius-zero ball around a value that is exactly representable."""
        if isinstance(value, mpfr):
            return cls(value)
        if isinstance(value, (int, mpz)):
            v = int(value)
            prec = max(2, v.bit_length() + 1)
            return cls(mpfr(v, precision=prec))
        if isinstance(value, float):
            return cls(mpfr(value, precision=53))
        raise TypeError(f"cannot build an exact ball from {type(value).__name__}")

    @classmethod
    def from_fraction(cls, value: Union[Fraction, mpq], bits: int) -> "Ball":
        """Tight enclosure of an exact rational at ``bits`` working precision."""
        q = mpq(value.numerator, value.denominator)
        ctx, eps = _nearest(bits)
        ctx.clear_flags()
        m = ctx.div(mpfr(q.numerator, precision=max(2, int(q.numerator).bit_length() + 1)),
                    mpfr(q.denominator, precision=max(2, int(q.denominator).bit_length() + 1)))
        if ctx.inexact:
            return cls(m, _up().mul(abs(m), eps))
        return cls(m)

    # -- accessors ---------------------------------------------------------

    def lower(self) -> mpfr:
        """Certified lower endpoint (rounded toward -inf)."""
        if self.rad == 0:
            return self.mid
        ctx = gmpy2.context(precision=self.mid.precision + _RAD_BITS,
                            round=gmpy2.RoundDown)
        return ctx.sub(self.mid, self.rad)

    def upper(self) -> mpfr:
        """Certified upper endpoint (rounded toward +inf)."""
        if self.rad == 0:
            return self.mid
        ctx = gmpy2.context(precision=self.mid.precision + _RAD_BITS,
                            round=gmpy2.RoundUp)
        return ctx.add(self.mid, self.rad)

    def widened(self, extra: mpfr) -> "Ball":
        """Same midpoint with ``extra`` (an upper bound) added to the radius."""
        return Ball(self.mid, _up().add(self.rad, extra))

    def contains(self, value: Union[int, Fraction, mpq, mpz]) -> bool:
        """Exact test whether a rational lies inside the enclosure."""
        q = mpq(value.numerator, value.denominator) if isinstance(value, Fraction) else mpq(value)
        return mpq(self.lower()) <= q <= mpq(self.upper())

    def is_strictly_positive(self) -> bool:
        return self.lower() > 0

    def __repr__(self) -> str:
        return f"Ball({self.mid!s} ± {self.rad!s})"


BallLike = Union[Ball, int, float, mpz, mpfr]


def as_ball(x: BallLike) -> Ball:
    """Coerce exactly representable scalars to radius-zero balls."""
    if isinstance(x, Ball):
        return x
    return Ball.exact(x)


def _half_ulp(ctx: gmpy2.context, eps: mpfr, m: mpfr) -> mpfr:
    """Upper bound on the rounding error of a correctly rounded midpoint."""
    if not ctx.inexact:
        return _ZERO
    return _up().mul(abs(m), eps)


# -- arithmetic ------------------------------------------------------------


def ball_add(x: BallLike, y: BallLike, bits: int) -> Ball:
    """Enclosure of x + y at ``bits`` working precision."""
    x, y = as_ball(x), as_ball(y)
    ctx, eps = _nearest(bits)
    ctx.clear_flags()
    m = ctx.add(x.mid, y.mid)
    u = _up()
    r = u.add(u.add(x.rad, y.rad), _half_ulp(ctx, eps, m))
    return Ball(m, r)


def ball_neg(x: BallLike) -> Ball:
    """Exact negation."""
    x = as_ball(x)
    return Ball(-x.mid, x.rad)


def ball_sub(x: BallLike, y: BallLike, bits: int) -> Ball:
    """Enclosure of x - y."""
    return ball_add(x, ball_neg(y), bits)


def ball_mul(x: BallLike, y: BallLike, bits: int) -> Ball:
    """Enclosure of x * y."""
    x, y = as_ball(x), as_ball(y)
    ctx, eps = _nearest(bits)
    ctx.clear_flags()
    m = ctx.mul(x.mid, y.mid)
    u = _up()
    r = _half_ulp(ctx, eps, m)
    if x.rad != 0 or y.rad != 0:
        cross = u.add(u.mul(abs(x.mid), y.rad), u.mul(abs(y.mid), x.rad))
        r = u.add(r, u.add(cross, u.mul(x.rad, y.rad)))
    return Ball(m, r)


def _inv(y: Ball, bits: int) -> Ball:
    """Enclosure of 1 / y; the enclosure of y must exclude zero."""
    ctx, eps = _nearest(bits)
    a = abs(y.mid)
    d = _down()
    lo_abs = d.sub(a, y.rad)
    if lo_abs <= 0:
        raise BallDomainError("division by an enclosure containing zero")
    ctx.clear_flags()
    m = ctx.div(mpfr(1), y.mid)
    u = _up()
    r = _half_ulp(ctx, eps, m)
    if y.rad != 0:
        # |1/t - 1/mid| <= rad / ((|mid| - rad) * |mid|) on the enclosure
        r = u.add(r, u.div(y.rad, d.mul(lo_abs, a)))
    return Ball(m, r)


def ball_div(x: BallLike, y: BallLike, bits: int) -> Ball:
    """Enclosure of x / y; the enclosure of y must exclude zero."""
    return ball_mul(x, _inv(as_ball(y), bits), bits)


def ball_pow_int(x: BallLike, k: int, bits: int) -> Ball:
    """Enclosure of x ** k for an integer exponent (negative allowed)."""
    x = as_ball(x)
    if k == 0:
        return Ball.exact(1)
    if k < 0:
        return _inv(ball_pow_int(x, -k, bits), bits)
    if x.rad == 0:
        ctx, eps = _nearest(bits)
        ctx.clear_flags()
        m = ctx.pow(x.mid, mpz(k))
        return Ball(m, _half_ulp(ctx, eps, m))
    # binary powering keeps radius growth proportional to the operation count
    result = None
    base = x
    e = k
    while e:
        if e & 1:
            result = base if result is None else ball_mul(result, base, bits)
        e >>= 1
        if e:
            base = ball_mul(base, base, bits)
    return result


def ball_ln(x: BallLike, bits: int) -> Ball:
    """Enclosure of ln(x); the enclosure of x must be strictly positive."""
    x = as_ball(x)
    lo = _down().sub(x.mid, x.rad)
    if lo <= 0:
        raise BallDomainError("logarithm of an enclosure touching zero")
    ctx, eps = _nearest(bits)
    ctx.clear_flags()
    m = ctx.log(x.mid)
    u = _up()
    r = _half_ulp(ctx, eps, m)
    if x.rad != 0:
        # mean value theorem: |ln t - ln mid| <= rad / lo
        r = u.add(r, u.div(x.rad, lo))
    return Ball(m, r)


def ball_exp(x: BallLike, bits: int) -> Ball:
    """Enclosure of exp(x)."""
    x = as_ball(x)
    ctx, eps = _nearest(bits)
    ctx.clear_flags()
    m = ctx.exp(x.mid)
    u = _up()
    r = _half_ulp(ctx, eps, m)
    if x.rad != 0:
        # |exp t - exp mid| <= exp(mid + rad) * rad
        r = u.add(r, u.mul(u.exp(u.add(x.mid, x.rad)), x.rad))
    return Ball(m, r)


def ball_root(x: BallLike, k: int, bits: int) -> Ball:
    """Enclosure of the k-th root; the enclosure of x must be strictly positive."""
    if k < 1:
        raise ValueError("root degree must be a positive integer")
    x = as_ball(x)
    d = _down()
    lo = d.sub(x.mid, x.rad)
    if lo <= 0:
        raise BallDomainError("root of an enclosure touching zero")
    ctx, eps = _nearest(bits)
    ctx.clear_flags()
    m = ctx.rootn(x.mid, k)
    u = _up()
    r = _half_ulp(ctx, eps, m)
    if x.rad != 0:
        # derivative bound (1/k) t^(1/k - 1) is largest at the lower endpoint
        deriv = u.div(u.rootn(lo, k), d.mul(mpfr(k), lo))
        r = u.add(r, u.mul(deriv, x.rad))
    return Ball(m, r)


# -- certified integer decisions --------------------------------------------


def _exact_bounds(x: Ball) -> tuple[mpq, mpq] | None:
    lo, hi = x.lower(), x.upper()
    if not (gmpy2.is_finite(lo) and gmpy2.is_finite(hi)):
        return None
    return mpq(lo), mpq(hi)


def _ceil_q(q: mpq) -> int:
    return int(-((-q.numerator) // q.denominator))


def _floor_q(q: mpq) -> int:
    return int(q.numerator // q.denominator)


def certified_ceiling(x: Ball) -> int | Indeterminate:
    """Ceiling of the enclosed value, or INDETERMINATE.

    Returns ``n`` only when the whole enclosure lies inside ``(n-1, n]``,
    so the answer is the ceiling of every point the ball may represent.
    """
    bounds = _exact_bounds(x)
    if bounds is None:
        return INDETERMINATE
    lo, hi = bounds
    n = _ceil_q(lo)
    return n if n == _ceil_q(hi) else INDETERMINATE


def certified_floor(x: Ball) -> int | Indeterminate:
    """Floor of the enclosed value, or INDETERMINATE (enclosure spans ``[n, n+1)``)."""
    bounds = _exact_bounds(x)
    if bounds is None:
        return INDETERMINATE
    lo, hi = bounds
    n = _floor_q(lo)
    return n if n == _floor_q(hi) else INDETERMINATE


def classify(x: Ball, threshold: Union[int, Fraction, mpq]) -> int | Indeterminate:
    """Certified comparison against an exact rational threshold.

    Returns -1 (entirely below), +1 (entirely above), 0 (exactly equal as a
    point), or INDETERMINATE when the enclosure overlaps the threshold.
    """
    t = mpq(threshold.numerator, threshold.denominator) if isinstance(threshold, Fraction) else mpq(threshold)
    bounds = _exact_bounds(x)
    if bounds is None:
        return INDETERMINATE
    lo, hi = bounds
    if hi < t:
        return -1
    if lo > t:
        return 1
    if lo == hi == t:
        return 0
    return INDETERMINATE


# -- precision policy --------------------------------------------------------


@dataclass(frozen=True)
class PrecisionPolicy:
    """Working-precision sizing and escalation rules.

    The sizing rule anticipates the cancellation in the filtered series: with
    exponent ``s`` and last known prime ``p``, the quantity of interest is of
    order ``(2p)^-s`` (the next prime is below ``2p``), so resolving it needs
    about ``s * log2(2p)`` bits before any guard bits.
    """

    base_bits: int = 128
    guard_bits: int = 64
    escalation_factor: float = 2.0
    max_escalations: int = 8

    def __post_init__(self) -> None:
        if self.base_bits < 2:
            raise ValueError("base_bits must be at least 2")
        if self.guard_bits < 0:
            raise ValueError("guard_bits must be non-negative")
        if self.escalation_factor <= 1:
            raise ValueError("escalation_factor must exceed 1")
        if self.max_escalations < 0:
            raise ValueError("max_escalations must be non-negative")

    def working_bits(self, s: Union[int, float, Ball], p_known: int | None = None) -> int:
        """Precision for evaluating at exponent ``s`` with last known prime ``p_known``."""
        if isinstance(s, Ball):
            s = float(s.upper())
        core = 0
        if p_known is not None:
            core = math.ceil(float(s) * math.log2(2 * p_known))
        return max(self.base_bits, core) + self.guard_bits

    def schedule(self, s: Union[int, float, Ball], p_known: int | None = None) -> Iterator[int]:
        """Yield the escalating precision sequence (``max_escalations + 1`` entries)."""
        bits = self.working_bits(s, p_known)
        for step in range(self.max_escalations + 1):
            yield math.ceil(bits * self.escalation_factor ** step)


DEFAULT_POLICY = PrecisionPolicy()
