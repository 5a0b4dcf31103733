"""Sine/cosine integrals, their hyperbolic cousins and exponential integrals.

Conventions (real arguments only)::

    Si(x)  = int_0^x sin(u)/u du
    Ci(x)  = EULER_GAMMA + ln x + int_0^x (cos u - 1)/u du        (x > 0)
    Shi(x) = int_0^x sinh(u)/u du
    Chi(x) = EULER_GAMMA + ln x + int_0^x (cosh u - 1)/u du       (x > 0)
    Ei(x)  = Chi(x) + Shi(x),   E1(x) = Shi(x) - Chi(x)           (x > 0)

Power series are used for ``|x| <= SERIES_CUTOFF``.  Beyond it the
trigonometric pair comes from a continued fraction for E1(ix) and the
hyperbolic pair from Ei and E1.

The auxiliary pair

    P(x) = Shi(x) cosh(x) - Chi(x) sinh(x) = (e^-x Ei(x) + e^x E1(x)) / 2
    Q(x) = Chi(x) cosh(x) - Shi(x) sinh(x) = (e^-x Ei(x) - e^x E1(x)) / 2

stays O(1/x) while each product on the left grows like e^{2x}; it is the
only safe way to evaluate the diffusion coefficients once Lambda*t is large.
"""
from __future__ import annotations

import cmath
import math
import sys
from dataclasses import dataclass

from .errors import ConvergenceError, DomainError, RangeError

EULER_GAMMA = 0.57721566490153286061

SERIES_CUTOFF = 12.0
# Ei power series has only positive terms; it stays accurate well past 12.
EI_SERIES_CUTOFF = 40.0
# Below this P/Q are formed directly; above it through scaled Ei/E1.
AUX_DIRECT_CUTOFF = 2.0
OVERFLOW_X = math.log(sys.float_info.max)

_FPMIN = 1e-300
_EPS = 2.0 * sys.float_info.epsilon


@dataclass(frozen=True)
class Accuracy:
    abs_tol: float = 1e-12
    max_terms: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


DEFAULT_ACCURACY = Accuracy()


def _check_finite(x, name):
    if not math.isfinite(x):
        raise DomainError(f"{name}: argument must be finite, got {x}")


def _check_positive(x, name):
    _check_finite(x, name)
    if x <= 0.0:
        raise DomainError(f"{name}: argument must be > 0, got {x}")


def _done(term, total, acc):
    return abs(term) <= acc.abs_tol * 1e-4 * max(1.0, abs(total))


# ---------------------------------------------------------------------------
# power series
# ---------------------------------------------------------------------------

def _si_series(x, acc):
    x2 = x * x
    term = x  # (-1)^k x^(2k+1) / (2k+1)!
    total = x
    for k in range(1, acc.max_terms):
        term *= -x2 / ((2 * k) * (2 * k + 1))
        contrib = term / (2 * k + 1)
        total += contrib
        if _done(contrib, total, acc):
            return total
    raise ConvergenceError("Si series did not converge", total)


def _cin_series(x, acc):
    """sum_{k>=1} (-1)^k x^(2k) / (2k (2k)!) = int_0^x (cos u - 1)/u du."""
    x2 = x * x
    term = 1.0
    total = 0.0
    for k in range(1, acc.max_terms):
        term *= -x2 / ((2 * k - 1) * (2 * k))
        contrib = term / (2 * k)
        total += contrib
        if _done(contrib, total, acc):
            return total
    raise ConvergenceError("Ci series did not converge", total)


def _shi_series(x, acc):
    x2 = x * x
    term = x
    total = x
    for k in range(1, acc.max_terms):
        term *= x2 / ((2 * k) * (2 * k + 1))
        contrib = term / (2 * k + 1)
        total += contrib
        if _done(contrib, total, acc):
            return total
    raise ConvergenceError("Shi series did not converge", total)


def _chin_series(x, acc):
    x2 = x * x
    term = 1.0
    total = 0.0
    for k in range(1, acc.max_terms):
        term *= x2 / ((2 * k - 1) * (2 * k))
        contrib = term / (2 * k)
        total += contrib
        if _done(contrib, total, acc):
            return total
    raise ConvergenceError("Chi series did not converge", total)


def _ein_series(x, acc):
    """sum_{k>=1} x^k / (k k!), valid for any real x."""
    term = 1.0
    total = 0.0
    for k in range(1, acc.max_terms):
        term *= x / k
        contrib = term / k
        total += contrib
        if _done(contrib, total, acc):
            return total
    raise ConvergenceError("Ei series did not converge", total)


# ---------------------------------------------------------------------------
# continued fractions and asymptotic expansions
# ---------------------------------------------------------------------------

def _e1_imag_cf(x, acc):
    """E1(i x) for x > ~2 by modified Lentz evaluation of the continued fraction."""
    b = complex(1.0, x)
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(2, acc.max_terms + 2):
        a = -float((i - 1) * (i - 1))
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return cmath.exp(complex(0.0, -x)) * h
    raise ConvergenceError("E1(ix) continued fraction did not converge")


def _scaled_e1_cf(x, acc):
    """e^x E1(x) for x > 1 by continued fraction."""
    b = x + 1.0
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, acc.max_terms + 1):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ConvergenceError("E1 continued fraction did not converge")


def _asymptotic_pair(x):
    """Even and odd parts of sum_k k!/x^(k+1), truncated at the smallest term.

    e^-x Ei(x) ~ even + odd and e^x E1(x) ~ even - odd.
    """
    even = 0.0
    odd = 0.0
    term = 1.0 / x
    k = 0
    while True:
        if k % 2 == 0:
            even += term
        else:
            odd += term
        nxt = term * (k + 1) / x
        if nxt >= term or nxt < _EPS * 1e-3 * even:
            break
        term = nxt
        k += 1
    return even, odd


# ---------------------------------------------------------------------------
# public functions
# ---------------------------------------------------------------------------

def si(x: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """Sine integral Si(x); odd in x, tends to pi/2."""
    _check_finite(x, "si")
    ax = abs(x)
    if ax <= SERIES_CUTOFF:
        val = _si_series(ax, acc)
    else:
        val = math.pi / 2 + _e1_imag_cf(ax, acc).imag
    return -val if x < 0 else val


def ci(x: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """Cosine integral Ci(x) for x > 0."""
    _check_positive(x, "ci")
    if x <= SERIES_CUTOFF:
        return EULER_GAMMA + math.log(x) + _cin_series(x, acc)
    return -_e1_imag_cf(x, acc).real


def e1(x: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """Exponential integral E1(x) = int_x^inf e^-u/u du, x > 0."""
    _check_positive(x, "e1")
    if x <= 1.0:
        return -EULER_GAMMA - math.log(x) - _ein_series(-x, acc)
    return math.exp(-x) * _scaled_e1_cf(x, acc)


def scaled_e1(x: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """e^x E1(x), finite for every x > 0."""
    _check_positive(x, "scaled_e1")
    if x <= 1.0:
        return math.exp(x) * e1(x, acc)
    if x > EI_SERIES_CUTOFF:
        even, odd = _asymptotic_pair(x)
        return even - odd
    return _scaled_e1_cf(x, acc)


def ei(x: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """Exponential integral Ei(x) (principal value) for x > 0."""
    _check_positive(x, "ei")
    if x > OVERFLOW_X:
        raise RangeError(f"ei: overflow for x = {x}")
    if x <= EI_SERIES_CUTOFF:
        return EULER_GAMMA + math.log(x) + _ein_series(x, acc)
    even, odd = _asymptotic_pair(x)
    return math.exp(x) * (even + odd)


def scaled_ei(x: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """e^-x Ei(x), finite for every x > 0."""
    _check_positive(x, "scaled_ei")
    if x <= EI_SERIES_CUTOFF:
        return math.exp(-x) * (EULER_GAMMA + math.log(x) + _ein_series(x, acc))
    even, odd = _asymptotic_pair(x)
    return even + odd


def shi(x: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """Hyperbolic sine integral Shi(x); odd in x."""
    _check_finite(x, "shi")
    ax = abs(x)
    if ax > OVERFLOW_X:
        raise RangeError(f"shi: overflow for |x| = {ax}")
    if ax <= SERIES_CUTOFF:
        val = _shi_series(ax, acc)
    else:
        val = 0.5 * (ei(ax, acc) + e1(ax, acc))
    return -val if x < 0 else val


def chi(x: float, acc: Accuracy = DEFAULT_ACCURACY) -> float:
    """Hyperbolic cosine integral Chi(x) for x > 0."""
    _check_positive(x, "chi")
    if x > OVERFLOW_X:
        raise RangeError(f"chi: overflow for x = {x}")
    if x <= SERIES_CUTOFF:
        return EULER_GAMMA + math.log(x) + _chin_series(x, acc)
    return 0.5 * (ei(x, acc) - e1(x, acc))


def aux_pq(x: float, acc: Accuracy = DEFAULT_ACCURACY) -> tuple[float, float]:
    """Return (P(x), Q(x)) without exponential cancellation.

    P(0) = 0 and Q has the same logarithmic singularity as Chi at 0.
    """
    _check_finite(x, "aux_pq")
    if x < 0.0:
        raise DomainError(f"aux_pq: argument must be >= 0, got {x}")
    if x == 0.0:
        return 0.0, -math.inf
    if x <= AUX_DIRECT_CUTOFF:
        s, c = shi(x, acc), chi(x, acc)
        return s * math.cosh(x) - c * math.sinh(x), c * math.cosh(x) - s * math.sinh(x)
    if x > EI_SERIES_CUTOFF:
        even, odd = _asymptotic_pair(x)
        return even, odd
    a, b = scaled_ei(x, acc), scaled_e1(x, acc)
    return 0.5 * (a + b), 0.5 * (a - b)
