"""Certified evaluation of zeta(s) and L(s, chi_4) for real s > 1.

Both series are evaluated with an explicit, certified truncation error that
is added to the enclosure radius:

* ``zeta_real`` truncates the Dirichlet sum at an adaptively chosen K and
  bounds the discarded tail by the integral comparison ``K^(1-s) / (s-1)``.
  That bound degrades badly as s approaches 1 (K grows like
  ``2^(bits/(s-1))``), so when the required K explodes the evaluation
  switches to Euler-Maclaurin summation, whose remainder for the completely
  monotone kernel ``x^(-s)`` is enveloped by the first omitted term.
* ``l_chi4`` uses the alternating series of the non-principal character
  modulo 4; the remainder is bounded by the first omitted term.

Powers ``k^(-s)`` are built multiplicatively: MPFR power evaluations happen
only at prime k, and every composite term costs a single ball multiplication
through its smallest prime factor.  For non-integer exponents the prime
powers go through ``exp(-s ln k)`` with a per-thread cache of ``ln k``.
"""

from __future__ import annotations

import math
import threading
from typing import Iterable, Union

import gmpy2
from gmpy2 import bincoef, mpfr, mpq, mpz

from .balls import (
    _nearest,
    _up,
    _down,
    Ball,
    BallDomainError,
    ball_add,
    ball_div,
    ball_exp,
    ball_ln,
    ball_mul,
    ball_neg,
    ball_sub,
)

__all__ = ["chi4", "l_chi4", "recip_power", "tail_upper", "zeta_real"]

_CHI4_PERIOD = (0, 1, 0, -1)

# Largest Dirichlet-sum cutoff the direct strategy will accept before the
# evaluation falls back to Euler-Maclaurin.
_DIRECT_CUTOFF_CAP = 100_000


def chi4(k: int) -> int:
    """Non-principal character modulo 4: 0 on evens, +1 on 1 mod 4, -1 on 3 mod 4."""
    return _CHI4_PERIOD[k % 4]


Exponent = Union[int, Ball]

_tls = threading.local()


def _smallest_factor_table(limit: int) -> list[int]:
    """Smallest prime factor for 0..limit; cached per thread, grown geometrically."""
    cached = getattr(_tls, "spf", None)
    if cached is not None and len(cached) > limit:
        return cached
    size = 1 << max(8, limit).bit_length()
    spf = list(range(size))
    for p in range(2, math.isqrt(size - 1) + 1):
        if spf[p] == p:
            for multiple in range(p * p, size, p):
                if spf[multiple] == multiple:
                    spf[multiple] = p
    _tls.spf = spf
    return spf


def _ln_ball(k: int, bits: int) -> Ball:
    """Cached enclosure of ln(k), re-derived when more precision is requested."""
    cache = getattr(_tls, "ln_cache", None)
    if cache is None:
        cache = _tls.ln_cache = {}
    entry = cache.get(k)
    if entry is None or entry[0] < bits:
        ball = ball_ln(Ball.exact(k), bits)
        cache[k] = (bits, ball)
        return ball
    return entry[1]


_bernoulli_cache: list[mpq] = [mpq(1)]
_bernoulli_lock = threading.Lock()


def _bernoulli(n: int) -> mpq:
    """Exact Bernoulli number B_n (B_1 = -1/2 convention)."""
    with _bernoulli_lock:
        while len(_bernoulli_cache) <= n:
            m = len(_bernoulli_cache)
            acc = mpq(0)
            for k in range(m):
                acc += bincoef(m + 1, k) * _bernoulli_cache[k]
            _bernoulli_cache.append(-acc / (m + 1))
        return _bernoulli_cache[n]


def _exponent_lower(s: Exponent) -> mpfr:
    if isinstance(s, Ball):
        return s.lower()
    return mpfr(s, precision=max(2, int(s).bit_length() + 1))


def _exponent_upper(s: Exponent) -> mpfr:
    if isinstance(s, Ball):
        return s.upper()
    return mpfr(s, precision=max(2, int(s).bit_length() + 1))


def _require_above_one(s: Exponent) -> None:
    if _exponent_lower(s) <= 1:
        raise BallDomainError("exponent enclosure must be strictly greater than 1")


def recip_power(k: int, s: Exponent, bits: int, use_ln_cache: bool = False) -> Ball:
    """Enclosure of ``k ** (-s)`` for a positive integer k.

    Integer exponents use a single correctly rounded MPFR power.  Ball
    exponents with zero radius do the same unless the ln cache is requested;
    genuine intervals route through ``exp(-s ln k)`` so that the exponent
    uncertainty is propagated.
    """
    if k < 1:
        raise ValueError("base must be a positive integer")
    base = mpfr(k, precision=max(2, k.bit_length() + 1))
    ctx, eps = _nearest(bits)
    if isinstance(s, int):
        ctx.clear_flags()
        m = ctx.pow(base, mpz(-s))
        return Ball(m, _up().mul(abs(m), eps) if ctx.inexact else mpfr(0))
    if s.rad == 0 and not use_ln_cache:
        ctx.clear_flags()
        m = ctx.pow(base, -s.mid)
        return Ball(m, _up().mul(abs(m), eps) if ctx.inexact else mpfr(0))
    return ball_exp(ball_mul(ball_neg(s), _ln_ball(k, bits), bits), bits)


def tail_upper(start: int, s: Exponent) -> mpfr:
    """Certified upper bound on ``sum_{k >= start} k^(-s)``.

    Integral comparison: the sum is below ``(start-1)^(1-s) / (s-1)``.
    Requires ``start >= 2`` and an exponent enclosure strictly above 1.
    """
    if start < 2:
        raise ValueError("tail must start at 2 or later")
    s_lo = _exponent_lower(s)
    u, d = _up(), _down()
    denom = d.sub(s_lo, 1)
    if denom <= 0:
        raise BallDomainError("tail bound requires s > 1")
    base = mpfr(start - 1, precision=max(2, (start - 1).bit_length() + 1))
    # (start-1)^(1-s) decreases in s, so the lower endpoint of s bounds it
    # from above; RoundUp on every operation keeps the direction.
    numer = u.pow(base, u.sub(mpfr(1), s_lo))
    return u.div(numer, denom)


def _power_table(ks: Iterable[int], s: Exponent, bits: int) -> dict[int, Ball]:
    """Enclosures of ``k^(-s)`` for every k in ``ks`` (ascending, factor-closed).

    Complete multiplicativity: composites are products of previously computed
    entries, so expensive power evaluations happen only at primes.  The input
    must contain, for each composite k, both its smallest prime factor p and
    the cofactor k/p (true for ranges, odd ranges, and coprime-filtered
    ranges).
    """
    ks = list(ks)
    if not ks:
        return {}
    spf = _smallest_factor_table(ks[-1])
    cache_ln = isinstance(s, Ball)
    table: dict[int, Ball] = {}
    for k in ks:
        p = spf[k]
        rest = k // p
        if rest == 1:
            table[k] = recip_power(k, s, bits, use_ln_cache=cache_ln)
        else:
            table[k] = ball_mul(table[rest], table[p], bits)
    return table


def _direct_cutoff(s: Exponent, tail_bits: int) -> int | None:
    """Smallest K with K^(1-s)/(s-1) < 2^-tail_bits, or None if over the cap."""
    s_f = float(_exponent_lower(s))
    exponent = (tail_bits * math.log(2.0) - math.log(s_f - 1.0)) / (s_f - 1.0)
    if exponent > math.log(_DIRECT_CUTOFF_CAP):
        return None
    cutoff = max(2, math.ceil(math.exp(exponent)) + 1)
    return cutoff if cutoff <= _DIRECT_CUTOFF_CAP else None


def _zeta_direct(s: Exponent, bits: int, cutoff: int) -> Ball:
    """Dirichlet sum through ``cutoff`` plus the certified integral tail."""
    ks = list(range(2, cutoff + 1))
    table = _power_table(ks, s, bits)
    total = Ball.exact(1)
    for k in ks:
        total = ball_add(total, table[k], bits)
    return total.widened(tail_upper(cutoff + 1, s))


def _zeta_euler_maclaurin(s: Exponent, bits: int, tail_bits: int) -> Ball:
    """Euler-Maclaurin evaluation with a certified enveloping remainder.

    For real s > 1 the kernel x^(-s) is completely monotone, so the
    correction series envelopes the truth and the remainder is bounded by
    the first omitted Bernoulli term (doubled here for safety margin).
    """
    m = max(1, math.ceil((tail_bits + 1) / 2))
    s_up = float(_exponent_upper(s))
    anchor = max(2, math.ceil((s_up + 2 * m) / math.pi) + 1)

    table = _power_table(range(2, anchor + 1), s, bits)
    total = Ball.exact(1)
    for k in range(2, anchor):
        total = ball_add(total, table[k], bits)

    apow = table[anchor]  # anchor^(-s)
    s_minus_1 = ball_sub(s, 1, bits) if isinstance(s, Ball) else Ball.exact(s - 1)
    integral = ball_div(ball_mul(apow, Ball.exact(anchor), bits), s_minus_1, bits)
    total = ball_add(total, integral, bits)
    total = ball_add(total, ball_div(apow, Ball.exact(2), bits), bits)

    # correction terms B_2j/(2j)! * (s)(s+1)...(s+2j-2) * anchor^(-s-2j+1)
    poch = None  # rising product up to s+2j-2
    scale = apow  # anchor^(-s-2j+1), starts at j=1 as anchor^(-s-1) after update
    anchor_sq = mpq(1, anchor * anchor)
    factorial = mpq(1)
    for j in range(1, m + 2):
        two_j = 2 * j
        factorial *= (two_j - 1) * two_j
        if j == 1:
            poch = Ball.exact(s) if isinstance(s, int) else s
            scale = ball_mul(apow, Ball.from_fraction(mpq(1, anchor), bits), bits)
        else:
            grow = ball_mul(ball_add(s, two_j - 3, bits), ball_add(s, two_j - 2, bits), bits)
            poch = ball_mul(poch, grow, bits)
            scale = ball_mul(scale, Ball.from_fraction(anchor_sq, bits), bits)
        coeff = Ball.from_fraction(_bernoulli(two_j) / factorial, bits)
        term = ball_mul(coeff, ball_mul(poch, scale, bits), bits)
        if j <= m:
            total = ball_add(total, term, bits)
        else:
            bound = _up().mul(abs(term.upper()), mpfr(2))
            total = total.widened(bound)
    return total


def zeta_real(s: Exponent, bits: int, tail_bits: int | None = None) -> Ball:
    """Enclosure of the Riemann zeta function at real ``s > 1``.

    ``bits`` is the midpoint working precision; the truncation error is
    driven below ``2^-tail_bits`` (defaulting to ``bits``) and added to the
    radius.  The strategy is chosen automatically: the plain Dirichlet sum
    with its integral tail bound where few terms suffice, Euler-Maclaurin
    where the integral bound would force an unreasonable cutoff.
    """
    _require_above_one(s)
    tail_bits = bits if tail_bits is None else tail_bits
    cutoff = _direct_cutoff(s, tail_bits)
    if cutoff is not None:
        return _zeta_direct(s, bits, cutoff)
    return _zeta_euler_maclaurin(s, bits, tail_bits)


def _lchi4_cutoff(s: Exponent, tail_bits: int) -> int:
    s_f = float(_exponent_lower(s))
    exponent = tail_bits / s_f
    if exponent > 26:
        raise ValueError(
            f"alternating cutoff 2^{exponent:.0f} is impractical; "
            "lower tail_bits or raise the exponent"
        )
    k = math.ceil(2.0 ** exponent) + 1
    if k % 2 == 0:
        k += 1
    return max(3, k)


def l_chi4(s: Exponent, bits: int, tail_bits: int | None = None) -> Ball:
    """Enclosure of ``L(s, chi_4) = 1 - 3^-s + 5^-s - 7^-s + ...`` for s > 1.

    The terms alternate with strictly decreasing magnitude, so the remainder
    after truncation is bounded by the first omitted term.
    """
    _require_above_one(s)
    tail_bits = bits if tail_bits is None else tail_bits
    cutoff = _lchi4_cutoff(s, tail_bits)  # first omitted odd index
    odds = list(range(3, cutoff, 2))
    table = _power_table(odds, s, bits)
    total = Ball.exact(1)
    for k in odds:
        term = table[k]
        total = ball_add(total, term if chi4(k) > 0 else ball_neg(term), bits)
    u = _up()
    s_lo = _exponent_lower(s)
    omitted = u.pow(mpfr(cutoff, precision=max(2, cutoff.bit_length() + 1)), -s_lo)
    return total.widened(omitted)
