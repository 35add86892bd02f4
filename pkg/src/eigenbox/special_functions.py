"""Bessel functions of the first kind, their first zeros, and unit-ball volumes.

Everything here is scalar and pure. The Bessel series is summed in
:mod:`decimal` arithmetic because the alternating terms grow like ``e**x``
and cancel; double precision loses the absolute ``1e-12`` target already
around ``x = 20``.
"""

from __future__ import annotations

import math
import numbers
from decimal import Decimal, localcontext
from functools import lru_cache

NU_MIN = -0.5
NU_MAX = 60.0
X_MAX = 100.0

# series stops once |term| < SERIES_RTOL * |partial sum|
SERIES_RTOL = Decimal("1e-18")
BISECT_WIDTH = 1e-13
SIGN_CHECK_STEP = 1e-9
SCAN_STEP = 1.0


class BesselDomainError(ValueError):
    """Order or argument outside the supported window."""


class ZeroBracketError(RuntimeError):
    """The bracket did not contain a sign change (an evaluation bug)."""


def _check_order(nu: float, upper: float = NU_MAX) -> None:
    if not (NU_MIN <= nu <= upper) or math.isnan(nu):
        raise BesselDomainError(f"order nu={nu!r} outside [{NU_MIN}, {upper}]")


def _series_sum(nu: float, x: float) -> float:
    """sum_m (-x^2/4)^m / (m! (nu+1)_m), evaluated with enough digits to survive cancellation."""
    # the largest term is ~exp(x); 0.45*x digits cover it, plus 30 for the result
    prec = 30 + int(0.45 * x) + 10
    with localcontext() as ctx:
        ctx.prec = prec
        y = Decimal(x) * Decimal(x) / 4
        dnu = Decimal(nu)
        term = Decimal(1)
        total = Decimal(1)
        m = 0
        while True:
            m += 1
            term = -term * y / (m * (dnu + m))
            total += term
            # terms only start shrinking once m(nu+m) > y
            if m * (nu + m) > x * x / 4 and abs(term) < SERIES_RTOL * abs(total):
                break
            if m > 10_000:  # pragma: no cover - unreachable for x <= 100
                raise RuntimeError("Bessel series failed to converge")
        return float(total)


def bessel_j(nu: float, x: float) -> float:
    """Bessel function of the first kind ``J_nu(x)`` for ``nu >= -1/2`` and ``0 <= x <= 100``.

    Uses the ascending series ``(x/2)^nu / Gamma(nu+1) * S(x)`` with the
    inner sum ``S`` computed by term recursion in extended precision.
    """
    _check_order(nu, NU_MAX + 1.0)  # nu+1 is needed for derivatives
    if math.isnan(x) or x < 0 or x > X_MAX:
        raise BesselDomainError(f"argument x={x!r} outside [0, {X_MAX}]")
    if x == 0.0:
        if nu == 0.0:
            return 1.0
        return 0.0 if nu > 0 else math.inf
    log_pref = nu * math.log(x / 2.0) - math.lgamma(nu + 1.0)
    return math.exp(log_pref) * _series_sum(nu, x)


def bessel_j_derivative(nu: float, x: float) -> float:
    """``J_nu'(x) = (nu/x) J_nu(x) - J_{nu+1}(x)`` for ``x > 0``."""
    return nu / x * bessel_j(nu, x) - bessel_j(nu + 1.0, x)


def zero_bracket(nu: float) -> tuple[float, float]:
    """Classical bracket sqrt((nu+1)(nu+5)) < j_{nu,1} < sqrt(2(nu+1)(nu+3))."""
    return math.sqrt((nu + 1.0) * (nu + 5.0)), math.sqrt(2.0 * (nu + 1.0) * (nu + 3.0))


@lru_cache(maxsize=4096)
def first_bessel_zero(nu: float) -> float:
    """First positive zero ``j_{nu,1}`` of ``J_nu``.

    A unit-step scan from the lower end of :func:`zero_bracket` isolates the
    first sign change and bisection narrows it to a width of ``1e-13``. One
    Newton step follows and is kept only if it stays inside the final
    interval. The result is certified by a sign change of ``J_nu`` across
    ``+-1e-9``.
    """
    _check_order(nu)
    lower, upper = zero_bracket(nu)
    # for nu >~ 16 the upper end lies past j_{nu,2}, so walk up from the lower
    # end in unit steps (zeros are more than 2.5 apart) to isolate the first one
    lo, f_lo = lower, bessel_j(nu, lower)
    if not f_lo > 0.0:
        raise ZeroBracketError(f"J_{nu}({lower}) = {f_lo} is not positive")
    while True:
        hi = min(lo + SCAN_STEP, upper)
        f_hi = bessel_j(nu, hi)
        if f_hi <= 0.0:
            break
        if hi >= upper:
            raise ZeroBracketError(f"no sign change of J_{nu} on [{lower}, {upper}]")
        lo, f_lo = hi, f_hi
    if f_hi == 0.0:
        lo = hi
    while hi - lo > BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = bessel_j(nu, mid)
        if f_mid > 0.0:
            lo = mid
        elif f_mid < 0.0:
            hi = mid
        else:
            lo = hi = mid
            break
    root = 0.5 * (lo + hi)
    f_root = bessel_j(nu, root)
    if f_root != 0.0:
        step = f_root / bessel_j_derivative(nu, root)
        polished = root - step
        if lo <= polished <= hi:
            root = polished
    if not (bessel_j(nu, root - SIGN_CHECK_STEP) > 0.0 > bessel_j(nu, root + SIGN_CHECK_STEP)):
        raise ZeroBracketError(f"sign change of J_{nu} not certified at {root}")
    return root


def unit_ball_volume(n: int) -> float:
    """Volume ``pi^(n/2) / Gamma(n/2 + 1)`` of the unit ball in R^n."""
    if not isinstance(n, numbers.Integral) or isinstance(n, bool) or not (1 <= n <= 60):
        raise ValueError(f"dimension must be an integer in [1, 60], got {n!r}")
    return math.exp(0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n + 1.0))


def dirichlet_ball_ground_state(n: int) -> float:
    """``j_{n/2-1,1}^2``: first Dirichlet eigenvalue of the unit ball in R^n."""
    return first_bessel_zero(n / 2.0 - 1.0) ** 2
