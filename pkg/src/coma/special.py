"""Regularized lower incomplete gamma function.

Series expansion below ``x = a + 1``, Lentz continued fraction above it
(the classic split: each branch converges fast on its side).
"""

import math

_EPS = 1e-10
_TINY = 1e-300
_MAX_ITER = 10_000


def _series(a: float, x: float) -> float:
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS * 1e-3:
            break
    else:
        raise ArithmeticError(f"gammainc series did not converge for a={a}, x={x}")
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _continued_fraction(a: float, x: float) -> float:
    """Upper tail Q(a, x)."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS * 1e-3:
            break
    else:
        raise ArithmeticError(f"gammainc continued fraction did not converge for a={a}, x={x}")
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gammainc(a: float, x: float) -> float:
    """``P(a, x) = gamma(a, x) / Gamma(a)`` for ``a > 0``, ``x >= 0``."""
    if not a > 0:
        raise ValueError("shape a must be positive")
    if math.isnan(x) or x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return min(1.0, _series(a, x))
    return max(0.0, 1.0 - _continued_fraction(a, x))


def gamma_cdf(x: float, shape: float, rate: float) -> float:
    """CDF of Gamma(shape, rate) at ``x``; ``x = inf`` maps to 1."""
    if x <= 0:
        return 0.0
    return gammainc(shape, rate * x)
