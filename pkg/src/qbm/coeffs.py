"""Time-dependent master-equation coefficients at zero temperature.

All four coefficients come from integrating the dissipation and noise
kernels of an Ohmic bath with Lorentzian cutoff ``L = lambda_cut``::

    dW2(t)  frequency shift          gamma(t)  dissipation
    D(t)    normal diffusion          f(t)      anomalous diffusion

Stable oscillator closed forms (exact for every t >= 0)::

    dW2 = -2 g0 L^3/(L^2+W^2) [1 - e^{-Lt}(cos Wt - (W/L) sin Wt)]
    gam =    g0 L^2/(L^2+W^2) [1 - e^{-Lt}(cos Wt + (L/W) sin Wt)]
    D   = (2 M g0/pi) L^2 W/(L^2+W^2) [(L/W) cos(Wt) P(Lt) - sin(Wt) Q(Lt) + Si(Wt)]
    f   = 2 g0 L^2/(L^2+W^2) [(L/W) sin(Wt) P(Lt) + cos(Wt) Q(Lt) - Ci(Wt) - ln(L/W)]

where P, Q are the cancellation-free Shi/Chi combinations from
:func:`qbm.specfun.aux_pq`.  Dropping the P/Q terms gives the late-time
forms valid once ``L t > 1`` *and* ``W t`` is not small; those are what the
fringe-visibility estimates use.

The inverted oscillator (``W -> iW``) is served by :func:`coefficients_at`
with the late-time set, and by :func:`inverted_exact` with the full
analytic continuation of the expressions above.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, asdict

import numpy as np

from . import specfun
from .errors import ConfigurationError, DomainError
from .params import BathSpec, SystemSpec

log = logging.getLogger(__name__)

WEAK_COUPLING_LIMIT = 0.1
# inverted late-time f(t) is refused below this many bare periods (Chi ~ log t)
INVERTED_T_FLOOR = 1e-12


@dataclass(frozen=True)
class CoefficientSample:
    t: float
    delta_omega_sq: float
    gamma: float
    d_normal: float
    f_anom: float
    weak_coupling: bool = True

    def as_dict(self):
        return asdict(self)


def _check_time(t):
    if not math.isfinite(t):
        raise DomainError(f"time must be finite, got {t}")
    if t < 0.0:
        raise DomainError(f"time must be >= 0, got {t}")


def _require_stable(sys: SystemSpec, name: str):
    if sys.inverted:
        raise ConfigurationError(f"{name} is defined for the stable oscillator only")


def weak_coupling_ok(sys: SystemSpec, bath: BathSpec) -> bool:
    return bath.gamma0 / sys.omega <= WEAK_COUPLING_LIMIT


def _lorentz(sys, bath):
    L, W = bath.lambda_cut, sys.omega
    return L * L / (L * L + W * W)


# ---------------------------------------------------------------------------
# stable oscillator, exact closed forms
# ---------------------------------------------------------------------------

def delta_omega_sq(t: float, sys: SystemSpec, bath: BathSpec) -> float:
    _check_time(t)
    _require_stable(sys, "delta_omega_sq")
    L, W = bath.lambda_cut, sys.omega
    env = math.exp(-L * t)
    return -2.0 * bath.gamma0 * L * _lorentz(sys, bath) * (
        1.0 - env * (math.cos(W * t) - (W / L) * math.sin(W * t))
    )


def gamma_t(t: float, sys: SystemSpec, bath: BathSpec) -> float:
    _check_time(t)
    _require_stable(sys, "gamma_t")
    L, W = bath.lambda_cut, sys.omega
    if t == 0.0:
        return 0.0
    # 1 - e^{-x}(cos + (L/W) sin) cancels to O(t^2) at small t
    x, w = L * t, W * t
    if x < 0.5:
        bracket = _gamma_bracket_small(x, w)
    else:
        bracket = 1.0 - math.exp(-x) * (math.cos(w) + (L / W) * math.sin(w))
    return bath.gamma0 * _lorentz(sys, bath) * bracket


def _gamma_bracket_small(x, w):
    """1 - e^{-x}(cos w + (x/w) sin w) for small x, without cancellation.

    The bracket is -Re[(1 - i x/w)(e^z - 1)] with z = -x + i w; the
    leading z term cancels exactly, so e^z - 1 is summed as a series.
    """
    z = complex(-x, w)
    # Re[(1 - i x/w) z] = 0 exactly, so sum e^z - 1 - z from the z^2 term on
    term = z
    em1 = complex(0.0, 0.0)
    for n in range(2, 60):
        term *= z / n
        em1 += term
        if abs(term) < 1e-18 * abs(em1):
            break
    return -(complex(1.0, -x / w) * em1).real


def d_normal(t: float, sys: SystemSpec, bath: BathSpec) -> float:
    """Normal diffusion D(t); exact for all t, cancellation-safe for large L t."""
    _check_time(t)
    _require_stable(sys, "d_normal")
    if t == 0.0:
        return 0.0
    L, W = bath.lambda_cut, sys.omega
    p, q = specfun.aux_pq(L * t)
    w = W * t
    bracket = (L / W) * math.cos(w) * p - math.sin(w) * q + specfun.si(w)
    return (2.0 * sys.mass * bath.gamma0 / math.pi) * W * _lorentz(sys, bath) * bracket


def f_anom(t: float, sys: SystemSpec, bath: BathSpec) -> float:
    """Anomalous diffusion f(t); exact for all t."""
    _check_time(t)
    _require_stable(sys, "f_anom")
    if t == 0.0:
        return 0.0
    L, W = bath.lambda_cut, sys.omega
    p, q = specfun.aux_pq(L * t)
    w = W * t
    bracket = (L / W) * math.sin(w) * p + math.cos(w) * q - specfun.ci(w) - math.log(L / W)
    return 2.0 * bath.gamma0 * _lorentz(sys, bath) * bracket


# ---------------------------------------------------------------------------
# stable oscillator, late-time forms (memory transient dropped)
# ---------------------------------------------------------------------------

def d_normal_late(t: float, sys: SystemSpec, bath: BathSpec) -> float:
    """D(t) with the P/Q transient dropped: (2 M g0/pi) L^2 W/(L^2+W^2) Si(Wt)."""
    _check_time(t)
    W = sys.omega
    return (2.0 * sys.mass * bath.gamma0 / math.pi) * W * _lorentz(sys, bath) * specfun.si(W * t)


def f_anom_late(t: float, sys: SystemSpec, bath: BathSpec) -> float:
    """f(t) with the P/Q transient dropped; log-divergent (integrably) at t -> 0."""
    _check_time(t)
    if t == 0.0:
        raise DomainError("late-time f(t) diverges logarithmically at t = 0")
    L, W = bath.lambda_cut, sys.omega
    return 2.0 * bath.gamma0 * _lorentz(sys, bath) * (-specfun.ci(W * t) - math.log(L / W))


# ---------------------------------------------------------------------------
# inverted oscillator
# ---------------------------------------------------------------------------

def _inverted_prefactor(sys, bath):
    sys.check_against(bath)
    L, W = bath.lambda_cut, sys.omega
    return L * L / (L * L - W * W)


def inverted_late(t: float, sys: SystemSpec, bath: BathSpec) -> CoefficientSample:
    """Late-time coefficient set for the upside-down oscillator.

    dW2 and gamma are the W -> iW plateaus; D and f keep only the Shi/Chi
    pieces.  Note that for W -> iW the dropped P/Q terms grow like
    cosh(Wt)/t and are *not* small; see :func:`inverted_exact`.
    """
    _check_time(t)
    c = _inverted_prefactor(sys, bath)
    L, W, g0 = bath.lambda_cut, sys.omega, bath.gamma0
    if W * t < INVERTED_T_FLOOR:
        raise DomainError(
            f"inverted f(t) diverges as t -> 0; refusing t = {t} < {INVERTED_T_FLOOR / W}"
        )
    w = W * t
    return CoefficientSample(
        t=t,
        delta_omega_sq=-2.0 * g0 * L * c,
        gamma=g0 * c,
        d_normal=(2.0 * sys.mass * g0 / math.pi) * W * c * specfun.shi(w),
        f_anom=-2.0 * g0 * c * (specfun.chi(w) + math.log(L / W)),
        weak_coupling=weak_coupling_ok(sys, bath),
    )


def inverted_exact(t: float, sys: SystemSpec, bath: BathSpec) -> CoefficientSample:
    """Exact W -> iW continuation of the stable closed forms.

    Equals the defining integrals with cos(Ws) -> cosh(Ws) and
    sin(Ws)/W -> sinh(Ws)/W for every t >= 0.
    """
    _check_time(t)
    c = _inverted_prefactor(sys, bath)
    L, W, g0, M = bath.lambda_cut, sys.omega, bath.gamma0, sys.mass
    if t == 0.0:
        return CoefficientSample(0.0, 0.0, 0.0, 0.0, 0.0, weak_coupling_ok(sys, bath))
    x, w = L * t, W * t
    # e^{-x} cosh w and e^{-x} sinh w without overflow (W < L)
    ec = 0.5 * (math.exp(w - x) + math.exp(-w - x))
    es = 0.5 * (math.exp(w - x) - math.exp(-w - x))
    p, q = specfun.aux_pq(x)
    ch, sh = math.cosh(w), math.sinh(w)
    return CoefficientSample(
        t=t,
        delta_omega_sq=-2.0 * g0 * L * c * (1.0 - (ec + (W / L) * es)),
        gamma=g0 * c * (1.0 - (ec + (L / W) * es)),
        d_normal=(2.0 * M * g0 / math.pi) * c * (L * ch * p + W * sh * q - W * specfun.shi(w)),
        f_anom=2.0 * g0 * c * ((L / W) * sh * p + ch * q - specfun.chi(w) - math.log(L / W)),
        weak_coupling=weak_coupling_ok(sys, bath),
    )


# ---------------------------------------------------------------------------
# bundles
# ---------------------------------------------------------------------------

def coefficients_at(t: float, sys: SystemSpec, bath: BathSpec) -> CoefficientSample:
    """All four coefficients at time ``t``, dispatched on orientation."""
    _check_time(t)
    ok = weak_coupling_ok(sys, bath)
    if not ok:
        log.warning("gamma0/omega = %.3g exceeds the weak-coupling limit %.2g",
                    bath.gamma0 / sys.omega, WEAK_COUPLING_LIMIT)
    if sys.inverted:
        return inverted_late(t, sys, bath)
    return CoefficientSample(
        t=t,
        delta_omega_sq=delta_omega_sq(t, sys, bath),
        gamma=gamma_t(t, sys, bath),
        d_normal=d_normal(t, sys, bath),
        f_anom=f_anom(t, sys, bath),
        weak_coupling=ok,
    )


def asymptotic_coefficients(sys: SystemSpec, bath: BathSpec) -> CoefficientSample:
    """Plateau values reached for L t >> 1 and W t >> 1 (stable only)."""
    if sys.inverted:
        raise ConfigurationError("the inverted oscillator has no coefficient plateau")
    L, W, g0 = bath.lambda_cut, sys.omega, bath.gamma0
    c = _lorentz(sys, bath)
    return CoefficientSample(
        t=math.inf,
        delta_omega_sq=-2.0 * g0 * L * c,
        gamma=g0 * c,
        d_normal=sys.mass * g0 * W * c,
        f_anom=-2.0 * g0 * c * math.log(L / W),
        weak_coupling=weak_coupling_ok(sys, bath),
    )


def coefficient_table(times, sys: SystemSpec, bath: BathSpec) -> dict[str, np.ndarray]:
    """Evaluate :func:`coefficients_at` on a grid; returns column arrays."""
    rows = [coefficients_at(float(t), sys, bath) for t in np.asarray(times, dtype=float)]
    return {
        "t": np.array([r.t for r in rows]),
        "delta_omega_sq": np.array([r.delta_omega_sq for r in rows]),
        "gamma": np.array([r.gamma for r in rows]),
        "d_normal": np.array([r.d_normal for r in rows]),
        "f_anom": np.array([r.f_anom for r in rows]),
    }
