"""The body-centred-orthorhombic energy family and its certification machinery.

The reduced energy of the BCO lattice L_{y,t} at Gaussian parameter alpha is

    E~_t(y; alpha) = f_3(y) + rho_{t,alpha} f_2(y),
    f_i(y) = theta_i(alpha y) theta_i(alpha / y),
    rho_{t,alpha} = theta_2(t^2 alpha) / theta_3(t^2 alpha),

with the full energy E_t(y, alpha) = theta_3(t^2 alpha) E~_t(y; alpha).
The certification algorithm walks y upward from 1 in steps licensed by a
global third-derivative bound K_alpha, proving E~ is increasing on (1, sqrt 3]
when it succeeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .jacobi import DEFAULT_RTOL, elliptic_ratio, jacobi_theta

SQRT3 = math.sqrt(3.0)

# step-underflow threshold for the certification walk
MIN_STEP = 1e-12
# sign-test slack: derivative values are lowered by this multiple of the
# propagated series error before testing a_i >= 0, b_i > 0
EVAL_SLACK = 10.0


@dataclass(frozen=True)
class BcoPoint:
    y: float
    t: float
    alpha: float

    def __post_init__(self):
        if self.y < 1:
            raise ValueError("BCO parameter y must be >= 1 (y <-> 1/y symmetry)")
        if self.t <= 0 or self.alpha <= 0:
            raise ValueError("t and alpha must be positive")


@dataclass(frozen=True)
class Certificate:
    alpha: float
    t: float
    steps: list
    verdict: str
    k_alpha: float
    reason: str = ""

    @property
    def final_y(self) -> float:
        return self.steps[-1][0] if self.steps else 1.0


def _fi_with_error(i: int, alpha: float, y: float, deriv_order: int, rtol: float):
    """(value, error bound) of the deriv_order-th y-derivative of
    f_i(y) = theta_i(alpha y) theta_i(alpha / y)."""
    if i not in (2, 3):
        raise ValueError("f_i is defined for i in {2, 3}")
    if y <= 0:
        raise ValueError("y must be positive")
    a = alpha
    u, v = a * y, a / y
    tu = [jacobi_theta(i, u, k, rtol) for k in range(deriv_order + 1)]
    tv = [jacobi_theta(i, v, k, rtol) for k in range(deriv_order + 1)]
    vp, vpp, vppp = -a / y ** 2, 2 * a / y ** 3, -6 * a / y ** 4

    # terms as (coefficient, order at u, order at v)
    if deriv_order == 0:
        terms = [(1.0, 0, 0)]
    elif deriv_order == 1:
        terms = [(a, 1, 0), (vp, 0, 1)]
    elif deriv_order == 2:
        terms = [(a * a, 2, 0), (2 * a * vp, 1, 1), (vp * vp, 0, 2), (vpp, 0, 1)]
    elif deriv_order == 3:
        terms = [
            (a ** 3, 3, 0),
            (3 * a * a * vp, 2, 1),
            (3 * a * vp * vp, 1, 2),
            (3 * a * vpp, 1, 1),
            (vp ** 3, 0, 3),
            (3 * vp * vpp, 0, 2),
            (vppp, 0, 1),
        ]
    else:
        raise ValueError("derivative order must be in [0, 3]")
    value = sum(c * tu[p].value * tv[q].value for c, p, q in terms)
    err = sum(
        abs(c) * (abs(tu[p].value) * tv[q].abs_error + tu[p].abs_error * (abs(tv[q].value) + tv[q].abs_error))
        for c, p, q in terms
    )
    return value, err


def f_i(i: int, alpha: float, y: float, deriv_order: int = 0, rtol: float = DEFAULT_RTOL) -> float:
    """f_{i,alpha}(y) = theta_i(alpha y) theta_i(alpha/y) or a y-derivative (0..3)."""
    return _fi_with_error(i, alpha, y, deriv_order, rtol)[0]


def rho_t(t: float, alpha: float, rtol: float = DEFAULT_RTOL) -> float:
    """rho_{t,alpha} = theta_2(t^2 alpha) / theta_3(t^2 alpha)."""
    if t <= 0 or alpha <= 0:
        raise ValueError("t and alpha must be positive")
    return elliptic_ratio(t * t * alpha, rtol)


def _e_tilde_with_error(y: float, t: float, alpha: float, deriv_order: int, rtol: float):
    r = rho_t(t, alpha, rtol)
    v3, e3 = _fi_with_error(3, alpha, y, deriv_order, rtol)
    v2, e2 = _fi_with_error(2, alpha, y, deriv_order, rtol)
    return v3 + r * v2, e3 + r * e2 + 1e-14 * abs(v2)


def e_tilde(p: BcoPoint, deriv_order: int = 0, rtol: float = DEFAULT_RTOL) -> float:
    """The reduced energy E~_t(y; alpha) or a y-derivative (orders 0..2)."""
    if not 0 <= deriv_order <= 2:
        raise ValueError("e_tilde derivative order must be in [0, 2]")
    return _e_tilde_with_error(p.y, p.t, p.alpha, deriv_order, rtol)[0]


def e_tilde_d3(p: BcoPoint, rtol: float = DEFAULT_RTOL) -> float:
    """Third y-derivative of the reduced energy (used to validate K_alpha)."""
    return _e_tilde_with_error(p.y, p.t, p.alpha, 3, rtol)[0]


def energy(y: float, t: float, alpha: float, rtol: float = DEFAULT_RTOL) -> float:
    """Full BCO energy E_t(y, alpha) = theta_3(t^2 alpha) * E~_t(y; alpha)."""
    pref = jacobi_theta(3, t * t * alpha, 0, rtol).value
    return pref * e_tilde(BcoPoint(y=y, t=t, alpha=alpha), 0, rtol)


def _h1_parts(alpha: float, rtol: float):
    """(N, D) with h_alpha(1) = N / D.

    N = alpha th3'' th3 - alpha th3'^2 + th3 th3', D the theta_2 analogue
    with the opposite sign.  For small alpha both collapse to exponentially
    small remainders of large cancelling terms, so below x = 1/2 they are
    evaluated through the modular identities,

        N = x^-3 p p' + x^-4 (p p'' - p'^2),      p = theta_3(1/x),
        D = -x^-3 q q' - x^-4 (q q'' - q'^2),     q = theta_4(1/x),

    which are exact and keep every factor at its own scale.
    """
    x = alpha
    if x >= 0.5:
        t3 = [jacobi_theta(3, x, k, rtol).value for k in range(3)]
        t2 = [jacobi_theta(2, x, k, rtol).value for k in range(3)]
        num = x * t3[2] * t3[0] - x * t3[1] ** 2 + t3[0] * t3[1]
        den = -x * t2[2] * t2[0] + x * t2[1] ** 2 - t2[0] * t2[1]
        return num, den
    u = 1.0 / x
    p = [jacobi_theta(3, u, k, rtol).value for k in range(3)]
    q = [jacobi_theta(4, u, k, rtol).value for k in range(3)]
    num = x ** -3 * p[0] * p[1] + x ** -4 * (p[0] * p[2] - p[1] ** 2)
    den = -(x ** -3 * q[0] * q[1] + x ** -4 * (q[0] * q[2] - q[1] ** 2))
    return num, den


def _log_dh1(alpha: float, rtol: float) -> float:
    """log(1 - h_alpha(1)), stable down to very small alpha.

    Writes D - N through theta_3(s)^2 + theta_4(s)^2 = 2 theta_3(2s)^2:
        D - N = -x^-3 * 4 g g' - x^-4 * (8 g'^2 + 8 g g'' - 2 (p'^2 + q'^2)),
    with g = theta_3 at 2/x and p, q = theta_3, theta_4 at 1/x.
    """
    x = alpha
    u = 1.0 / x
    g = [jacobi_theta(3, 2 * u, k, rtol).value for k in range(3)]
    p1 = jacobi_theta(3, u, 1, rtol).value
    q1 = jacobi_theta(4, u, 1, rtol).value
    diff = -(x ** -3) * 4 * g[0] * g[1] - x ** -4 * (
        8 * g[1] ** 2 + 8 * g[0] * g[2] - 2 * (p1 ** 2 + q1 ** 2))
    _, den = _h1_parts(x, rtol)
    return math.log(diff) - math.log(den)


def h_alpha(y: float, alpha: float, rtol: float = DEFAULT_RTOL) -> float:
    """h_alpha(y) = (f_3(y) - f_3(1)) / (f_2(1) - f_2(y)) for y > 1; the y -> 1
    limit is the closed second-derivative form and is requested with y = 1."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if y < 1:
        raise ValueError("h_alpha is defined for y >= 1")
    if y == 1:
        num, den = _h1_parts(alpha, rtol)
        return num / den
    num = f_i(3, alpha, y, 0, rtol) - f_i(3, alpha, 1.0, 0, rtol)
    den = f_i(2, alpha, 1.0, 0, rtol) - f_i(2, alpha, y, 0, rtol)
    return num / den


def _log_drho(z: float, rtol: float) -> float:
    """log(1 - rho(z)) where rho(z) = theta_2(z)/theta_3(z), underflow-free.

    For small z, 1 - rho(z) = (theta_3 - theta_4)(1/z) / theta_3(1/z) with
    theta_3 - theta_4 = 4 sum_{j>=0} exp(-pi (2j+1)^2 u).
    """
    if z >= 0.5:
        t2 = jacobi_theta(2, z, 0, rtol).value
        t3 = jacobi_theta(3, z, 0, rtol).value
        return math.log(t3 - t2) - math.log(t3)
    u = 1.0 / z
    # log of 4 * sum exp(-pi (2j+1)^2 u), factored on the leading term
    corr = sum(math.exp(-math.pi * ((2 * j + 1) ** 2 - 1) * u) for j in range(1, 6))
    log_diff = math.log(4.0) - math.pi * u + math.log1p(corr)
    return log_diff - math.log(jacobi_theta(3, u, 0, rtol).value)


def t0(alpha: float, tol: float = 1e-10, rtol: float = DEFAULT_RTOL) -> float:
    """The crossing t0(alpha) where rho_{t,alpha} = h_alpha(1); rho decreases in
    t, so y = 1 stops being a local minimum of E~ exactly below t0.

    Solved in the deficit variable log(1 - .), which stays resolvable when
    both sides are within double-precision rounding of 1.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if alpha >= 0.5:
        target = h_alpha(1.0, alpha, rtol)
        resid = lambda t: rho_t(t, alpha, rtol) - target
    else:
        target_log = _log_dh1(alpha, rtol)
        resid = lambda t: target_log - _log_drho(t * t * alpha, rtol)
    lo, hi = 1e-3, 10.0
    if resid(lo) < 0 or resid(hi) > 0:
        raise RuntimeError(f"t0 bracket failed on [{lo}, {hi}] at alpha={alpha}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if resid(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def alpha1(tol: float = 1e-6) -> float:
    """Root of alpha -> h_alpha(1) - rho_{1,alpha} in [1, 5] (approx. 2.38)."""
    g = lambda a: h_alpha(1.0, a) - rho_t(1.0, a)
    lo, hi = 1.0, 5.0
    if g(lo) < 0 or g(hi) > 0:
        raise RuntimeError("alpha1 bracket failed on [1, 5]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def k_alpha(alpha: float, rtol: float = DEFAULT_RTOL) -> float:
    """The global bound K_alpha on |E~_t'''(y; alpha)| over y in [1, sqrt 3]:
    for i in {2, 3}, with arguments alpha and alpha/sqrt(3),

      a^3 |th_i'''(a)| th_i(b) + a^3 th_i(a) |th_i'''(b)| + 3 a^3 th_i''(a) |th_i'(b)|
      + 5 a^2 |th_i'(a)| |th_i'(b)| + 3 a^2 |th_i'(a)| th_i''(b) + 6 a th_i(a) th_i(b)
      + 2 a^2 |th_i'(a)| th_i(b) + 2 a^2 th_i(a) |th_i'(b)| + 4 a^2 th_i(a) th_i''(b).
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    a = alpha
    b = alpha / SQRT3
    total = 0.0
    for i in (2, 3):
        ta = [jacobi_theta(i, a, k, rtol).value for k in range(4)]
        tb = [jacobi_theta(i, b, k, rtol).value for k in range(4)]
        total += (
            a ** 3 * abs(ta[3]) * tb[0]
            + a ** 3 * ta[0] * abs(tb[3])
            + 3 * a ** 3 * ta[2] * abs(tb[1])
            + 5 * a ** 2 * abs(ta[1]) * abs(tb[1])
            + 3 * a ** 2 * abs(ta[1]) * tb[2]
            + 6 * a * ta[0] * tb[0]
            + 2 * a ** 2 * abs(ta[1]) * tb[0]
            + 2 * a ** 2 * ta[0] * abs(tb[1])
            + 4 * a ** 2 * ta[0] * tb[2]
        )
    return total


def certify_increasing(alpha: float, t: float, rtol: float = DEFAULT_RTOL) -> Certificate:
    """Walk y from 1 toward sqrt(3) in steps licensed by the K_alpha bound.

    At each iterate, a_i = E~'(y_i) and b_i = E~''(y_i); while a_i >= 0 and
    b_i > 0 (after lowering both by the evaluation-error slack) the step

        y_{i+1} = y_i + (b_i + sqrt(b_i^2 + 2 K_alpha a_i)) / K_alpha

    keeps E~' positive on the covered interval.  Verdict is
    certified_increasing when the walk passes sqrt(3), inconclusive when a
    sign test fails or the step underflows.
    """
    if alpha <= 0 or t <= 0:
        raise ValueError("alpha and t must be positive")
    K = k_alpha(alpha, rtol)
    steps = []
    y = 1.0
    for _ in range(100_000):
        a_val, a_err = _e_tilde_with_error(y, t, alpha, 1, rtol)
        b_val, b_err = _e_tilde_with_error(y, t, alpha, 2, rtol)
        if y == 1.0:
            a_val = 0.0  # exact critical point by the y <-> 1/y symmetry
        steps.append((y, a_val, b_val))
        a_safe = a_val - EVAL_SLACK * a_err
        b_safe = b_val - EVAL_SLACK * b_err
        if y == 1.0:
            a_safe = 0.0
        if a_safe < 0:
            return Certificate(alpha, t, steps, "inconclusive", K,
                               reason=f"E~'({y:.6f}) not certifiably nonnegative")
        if b_safe <= 0:
            return Certificate(alpha, t, steps, "inconclusive", K,
                               reason=f"E~''({y:.6f}) not certifiably positive")
        step = (b_safe + math.sqrt(b_safe * b_safe + 2 * K * a_safe)) / K
        if step < MIN_STEP:
            return Certificate(alpha, t, steps, "inconclusive", K, reason="step underflow")
        y += step
        if y >= SQRT3:
            a_fin = _e_tilde_with_error(y, t, alpha, 1, rtol)[0]
            b_fin = _e_tilde_with_error(y, t, alpha, 2, rtol)[0]
            steps.append((y, a_fin, b_fin))
            return Certificate(alpha, t, steps, "certified_increasing", K)
    return Certificate(alpha, t, steps, "inconclusive", K, reason="iteration cap reached")


def g_alpha_argmin(alpha: float, tol: float = 1e-8, rtol: float = DEFAULT_RTOL):
    """Argmin of g_alpha = f_3 + f_2 on [1, 4] and g_alpha''(1).

    Golden-section narrows the bracket, then the minimum is polished by
    bisecting g' (the function is too flat near its minimum for value-only
    comparison at tight tolerances).  Returns (argmin, g''(1)); the argmin is
    sqrt(3) for every alpha and g''(1) < 0.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    g = lambda y: f_i(3, alpha, y, 0, rtol) + f_i(2, alpha, y, 0, rtol)
    gp = lambda y: f_i(3, alpha, y, 1, rtol) + f_i(2, alpha, y, 1, rtol)
    inv_phi = (math.sqrt(5) - 1) / 2
    lo, hi = 1.0, 4.0
    c = hi - inv_phi * (hi - lo)
    d = lo + inv_phi * (hi - lo)
    fc, fd = g(c), g(d)
    while hi - lo > 1e-3:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - inv_phi * (hi - lo)
            fc = g(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + inv_phi * (hi - lo)
            fd = g(d)
    # derivative bisection inside a widened bracket
    lo, hi = max(1.0, lo - 0.05), min(4.0, hi + 0.05)
    if gp(lo) > 0 or gp(hi) < 0:
        raise RuntimeError("derivative bracket lost")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gp(mid) < 0:
            lo = mid
        else:
            hi = mid
    gpp1 = f_i(3, alpha, 1.0, 2, rtol) + f_i(2, alpha, 1.0, 2, rtol)
    return 0.5 * (lo + hi), gpp1


_THM14_FAMILIES = ("U2", "U3", "U4", "Q", "P34", "P23")


def thm14_scan(c_list, alpha: float, which: str, t_grid) -> list:
    """Values of the orthorhombic product family along the diagonal flow
    A_t = diag(c_i^t): U_i(t) = prod theta_i(c_i^t alpha), Q = U2/U3,
    P34 = U3*U4, P23 = U2*U3.  Requires prod(c_i) = 1 with not all c_i = 1."""
    import numpy as np

    c = np.asarray(c_list, dtype=float)
    if abs(float(np.prod(c)) - 1.0) > 1e-12:
        raise ValueError("the c_i must have product 1")
    if np.all(np.abs(c - 1.0) < 1e-12):
        raise ValueError("not all c_i may equal 1")
    if which not in _THM14_FAMILIES:
        raise ValueError(f"family must be one of {_THM14_FAMILIES}")

    def value(tt: float) -> float:
        args = c ** tt * alpha
        th = {i: math.prod(jacobi_theta(i, float(x), 0).value for x in args) for i in (2, 3, 4)}
        if which == "U2":
            return th[2]
        if which == "U3":
            return th[3]
        if which == "U4":
            return th[4]
        if which == "Q":
            return th[2] / th[3]
        if which == "P34":
            return th[3] * th[4]
        return th[2] * th[3]

    return [(float(tt), value(float(tt))) for tt in t_grid]
