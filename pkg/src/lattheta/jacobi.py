"""One-dimensional Jacobi theta functions theta_2, theta_3, theta_4.

Values and derivatives in the series parameter up to order 3, with a
certified truncation error carried alongside every result.  The series

    theta_2(x) = sum_k exp(-pi (k+1/2)^2 x)
    theta_3(x) = sum_k exp(-pi k^2 x)
    theta_4(x) = sum_k (-1)^k exp(-pi k^2 x)

converge fast for x bounded away from 0; for small x we switch to the
modular identities theta_3(x) = x^{-1/2} theta_3(1/x),
theta_4(x) = x^{-1/2} theta_2(1/x), theta_2(x) = x^{-1/2} theta_4(1/x)
and differentiate them explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

DEFAULT_RTOL = 1e-13

# below this the direct series is slow; evaluate through the modular identities
SMALL_X = 0.2


@dataclass(frozen=True)
class SeriesValue:
    """A series value with a bound on the absolute truncation error."""

    value: float
    abs_error: float
    terms_used: int


def _check_args(kind: int, x: float, deriv_order: int, rtol: float) -> None:
    if kind not in (2, 3, 4):
        raise ValueError(f"theta kind must be 2, 3 or 4, got {kind}")
    if not x > 0:
        raise ValueError(f"theta argument must be positive, got {x}")
    if not 0 <= deriv_order <= 3:
        raise ValueError(f"derivative order must be in [0, 3], got {deriv_order}")
    if not rtol > 0:
        raise ValueError(f"rtol must be positive, got {rtol}")


def _series(kind: int, x: float, n: int, rtol: float) -> SeriesValue:
    """Direct summation with a geometric tail majorant.

    Terms are c_k * (-lam_k)^n * exp(-lam_k x) with lam_k = pi k^2 or
    pi (k+1/2)^2.  Successive term ratios decay like exp(-pi x (2k+1)),
    so once the ratio drops below 1/2 the tail is bounded by a geometric
    series.
    """
    if kind == 2:
        lam = lambda k: math.pi * (k + 0.5) ** 2
        sgn = lambda k: 1.0
        k0 = 0
        sym = 2.0  # k and -k-1 pair up
        total = 0.0
    else:
        lam = lambda k: math.pi * k * k
        sgn = (lambda k: 1.0) if kind == 3 else (lambda k: -1.0 if k % 2 else 1.0)
        k0 = 1
        sym = 2.0  # k and -k pair up
        total = 1.0 if n == 0 else 0.0

    terms = 1 if kind != 2 else 0
    k = k0
    prev_mag = math.inf
    while True:
        lk = lam(k)
        term = sgn(k) * (-lk) ** n * math.exp(-lk * x) if n else sgn(k) * math.exp(-lk * x)
        mag = abs(term)
        total += sym * term
        terms += 1
        # ratio of successive term magnitudes, including the polynomial factor
        ratio = ((lam(k + 1) / lk) ** n if lk > 0 else math.inf) * math.exp(-(lam(k + 1) - lk) * x)
        if ratio < 0.5 and sym * mag * ratio < 0.25 * rtol * max(abs(total), 1e-300):
            tail = sym * mag * ratio / (1.0 - ratio)
            return SeriesValue(total, tail, terms)
        if mag > prev_mag and mag == 0.0:
            return SeriesValue(total, 0.0, terms)
        prev_mag = mag if lk > 0 else prev_mag
        k += 1
        if k > 10_000:  # unreachable for x > 0; defensive
            raise RuntimeError("theta series failed to converge")


# coefficients of d^n/dx^n [x^{-1/2} phi(1/x)] as sums c * x^{-p} phi^{(m)}(1/x)
_MODULAR_RULES = {
    0: [(1.0, 0.5, 0)],
    1: [(-0.5, 1.5, 0), (-1.0, 2.5, 1)],
    2: [(0.75, 2.5, 0), (3.0, 3.5, 1), (1.0, 4.5, 2)],
    3: [(-15.0 / 8.0, 3.5, 0), (-45.0 / 4.0, 4.5, 1), (-7.5, 5.5, 2), (-1.0, 6.5, 3)],
}

_MODULAR_PARTNER = {2: 4, 3: 3, 4: 2}


def jacobi_theta(kind: int, x: float, deriv_order: int = 0, rtol: float = DEFAULT_RTOL) -> SeriesValue:
    """Evaluate theta_kind(x) or one of its x-derivatives (orders 0..3).

    Returns the value together with a certified bound on the absolute
    truncation error.
    """
    _check_args(kind, x, deriv_order, rtol)
    if x >= SMALL_X:
        return _series(kind, x, deriv_order, rtol)

    # small x: theta_kind(x) = x^{-1/2} phi(1/x) with phi the partner kind
    partner = _MODULAR_PARTNER[kind]
    u = 1.0 / x
    value = 0.0
    err = 0.0
    terms = 0
    for c, p, m in _MODULAR_RULES[deriv_order]:
        sub = _series(partner, u, m, rtol)
        w = c * x ** (-p)
        value += w * sub.value
        err += abs(w) * sub.abs_error
        terms += sub.terms_used
    return SeriesValue(value, err, terms)


def elliptic_ratio(x: float, rtol: float = DEFAULT_RTOL) -> float:
    """The ratio theta_2(x) / theta_3(x), strictly inside (0, 1) and decreasing."""
    if not x > 0:
        raise ValueError(f"argument must be positive, got {x}")
    num = jacobi_theta(2, x, 0, rtol)
    den = jacobi_theta(3, x, 0, rtol)
    return num.value / den.value
