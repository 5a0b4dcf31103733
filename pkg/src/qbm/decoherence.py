"""Fringe-visibility exponent A_int(t) and decoherence times.

The exponent obeys

    dA/dt = 4 D(t) k_p^2 - 4 f(t) k_p (k_x - beta k_p)

and the decoherence time is the first t with A(t) = 1.  Three choices of
(D, f) are available through ``model``:

``late``     Si/Ci forms with the memory transient dropped (default).
``exact``    full closed forms including the transient near t ~ 1/Lambda.
``plateau``  the t -> infinity values.

The late model has a logarithmic (integrable) singularity of f at t = 0,
and its A(t) dips slightly negative while Lambda t is of order one.
"""
from __future__ import annotations

import enum
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import coeffs
from .errors import ConfigurationError, ConvergenceError, DomainError
from .params import BathSpec, SystemSpec
from .specfun import EULER_GAMMA

log = logging.getLogger(__name__)

ROOT_REL_TOL = 1e-6


class RateModel(str, enum.Enum):
    LATE = "late"
    EXACT = "exact"
    PLATEAU = "plateau"


@dataclass(frozen=True)
class SuperpositionSpec:
    """Two packets at +-(l0, p0), each of width delta."""

    l0: float
    p0: float = 0.0
    delta: float = 1.0

    def __post_init__(self):
        for name in ("l0", "p0", "delta"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")
        if self.l0 < 0:
            raise ConfigurationError("l0 must be >= 0")
        if self.delta <= 0:
            raise ConfigurationError("delta must be > 0")
        if self.l0 == 0 and self.p0 == 0:
            raise ConfigurationError("l0 and p0 cannot both vanish")

    @property
    def a_max(self) -> float:
        return self.l0 ** 2 / self.delta ** 2 + self.delta ** 2 * self.p0 ** 2


@dataclass(frozen=True)
class FringeConfig:
    k_p: float
    k_x: float
    beta: float = 0.0

    @classmethod
    def frozen(cls, sup: SuperpositionSpec) -> "FringeConfig":
        """Fringes held at their initial spacing: k_p = l0, k_x = 1/(2 l0), beta = 0."""
        if sup.l0 == 0:
            raise ConfigurationError("frozen fringes need l0 > 0")
        return cls(k_p=sup.l0, k_x=1.0 / (2.0 * sup.l0), beta=0.0)


@dataclass(frozen=True)
class VisibilityTrajectory:
    times: np.ndarray
    a_int: np.ndarray
    a_max: float
    saturation_time: float
    bound_crossing_time: float | None = None
    model: str = RateModel.LATE.value


@dataclass(frozen=True)
class NoDecoherence:
    """Returned when A_int stays below threshold up to the horizon."""

    horizon: float
    a_int_at_horizon: float

    def __bool__(self):
        return False


@dataclass(frozen=True)
class RegimeEstimate:
    value: float
    in_regime: bool
    detail: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value)


# ---------------------------------------------------------------------------
# rate and its integral
# ---------------------------------------------------------------------------

def _coefficient_pair(t, sys, bath, model):
    if model is RateModel.LATE:
        return coeffs.d_normal_late(t, sys, bath), coeffs.f_anom_late(t, sys, bath)
    if model is RateModel.EXACT:
        return coeffs.d_normal(t, sys, bath), coeffs.f_anom(t, sys, bath)
    plat = coeffs.asymptotic_coefficients(sys, bath)
    return plat.d_normal, plat.f_anom


def a_int_rate(t: float, fringe: FringeConfig, sys: SystemSpec, bath: BathSpec,
               model: RateModel | str = RateModel.LATE, anomalous: bool = True) -> float:
    """dA_int/dt = 4 D k_p^2 - 4 f k_p (k_x - beta k_p).

    The rate is taken as 0 at t = 0 for the late and exact models (both
    coefficients are defined as integrals over an empty interval there).
    """
    model = RateModel(model)
    if sys.inverted:
        raise ConfigurationError("fringe visibility is defined for the stable oscillator")
    if not math.isfinite(t) or t < 0:
        raise DomainError(f"t must be finite and >= 0, got {t}")
    if fringe.k_p == 0.0:
        return 0.0
    if t == 0.0 and model is not RateModel.PLATEAU:
        return 0.0
    d, f = _coefficient_pair(t, sys, bath, model)
    if not anomalous:
        f = 0.0
    k_p = fringe.k_p
    return 4.0 * d * k_p * k_p - 4.0 * f * k_p * (fringe.k_x - fringe.beta * k_p)


def _integrate_rate(rate, a, b):
    if b <= a:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(rate, a, b, epsabs=1e-13, epsrel=1e-11, limit=500)
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"A_int quadrature on [{a:g}, {b:g}]: {exc}") from exc
    return val


def _cumulative(rate, times):
    out = np.zeros(len(times))
    for i in range(1, len(times)):
        out[i] = out[i - 1] + _integrate_rate(rate, times[i - 1], times[i])
    return out


def evolve_a_int(tspan, grid_points: int, fringe: FringeConfig, sys: SystemSpec,
                 bath: BathSpec, sup: SuperpositionSpec,
                 model: RateModel | str = RateModel.LATE,
                 anomalous: bool = True) -> VisibilityTrajectory:
    """A_int on a uniform grid over ``tspan = (0, t_end)``.

    A_int is not clipped at ``a_max``; the first grid time where it
    exceeds the bound is recorded instead.
    """
    t0, t1 = float(tspan[0]), float(tspan[1])
    if t0 != 0.0:
        raise DomainError("tspan must start at 0")
    if not t1 > 0:
        raise DomainError("tspan must end after 0")
    if grid_points < 2:
        raise ConfigurationError("grid_points must be >= 2")
    model = RateModel(model)
    times = np.linspace(0.0, t1, grid_points)

    def rate(t):
        return a_int_rate(t, fringe, sys, bath, model, anomalous)

    a_int = _cumulative(rate, times)
    over = np.nonzero(a_int > sup.a_max)[0]
    crossing = float(times[over[0]]) if len(over) else None
    if crossing is not None:
        log.info("A_int exceeds a_max = %.4g at t = %.4g", sup.a_max, crossing)
    sat = 1.0 / bath.gamma0 if bath.gamma0 > 0 else math.inf
    return VisibilityTrajectory(times, a_int, sup.a_max, sat, crossing, model.value)


def decoherence_time(fringe: FringeConfig, sys: SystemSpec, bath: BathSpec,
                     sup: SuperpositionSpec, t_max: float,
                     model: RateModel | str = RateModel.LATE,
                     threshold: float = 1.0, anomalous: bool = True):
    """Smallest t with A_int(t) = threshold, or :class:`NoDecoherence`.

    The search horizon is min(t_max, 1/gamma0).  A_int is scanned on a
    mixed geometric/linear grid to bracket the first crossing, then the
    bracket is narrowed by bisection and finished with secant steps to a
    relative tolerance of 1e-6 in t.
    """
    if not t_max > 0:
        raise DomainError("t_max must be > 0")
    model = RateModel(model)
    horizon = min(t_max, 1.0 / bath.gamma0) if bath.gamma0 > 0 else t_max

    def rate(t):
        return a_int_rate(t, fringe, sys, bath, model, anomalous)

    grid = np.unique(np.concatenate([
        [0.0],
        np.geomspace(horizon * 1e-7, horizon, 160),
        np.linspace(0.0, horizon, 241)[1:],
    ]))
    prev_t, prev_a = 0.0, 0.0
    for t in grid[1:]:
        a = prev_a + _integrate_rate(rate, prev_t, t)
        if a >= threshold:
            return _refine_root(rate, prev_t, prev_a, t, a, threshold)
        prev_t, prev_a = t, a
    return NoDecoherence(horizon=horizon, a_int_at_horizon=prev_a)


def _refine_root(rate, lo, a_lo, hi, a_hi, threshold):
    base_t, base_a = lo, a_lo

    def value_at(t):
        return base_a + _integrate_rate(rate, base_t, t) - threshold

    g_lo, g_hi = a_lo - threshold, a_hi - threshold
    # bisection until the bracket is narrow, then secant inside it
    while hi - lo > 1e-3 * hi:
        mid = 0.5 * (lo + hi)
        g_mid = value_at(mid)
        if g_mid >= 0:
            hi, g_hi = mid, g_mid
        else:
            lo, g_lo = mid, g_mid
    for _ in range(50):
        if g_hi == g_lo:
            break
        t_new = hi - g_hi * (hi - lo) / (g_hi - g_lo)
        if not lo < t_new < hi:
            t_new = 0.5 * (lo + hi)
        g_new = value_at(t_new)
        if g_new >= 0:
            step = hi - t_new
            hi, g_hi = t_new, g_new
        else:
            step = t_new - lo
            lo, g_lo = t_new, g_new
        if step <= ROOT_REL_TOL * 1e-2 * t_new or abs(g_new) < 1e-13 or hi - lo <= ROOT_REL_TOL * hi:
            return float(t_new)
    return float(0.5 * (lo + hi))


# ---------------------------------------------------------------------------
# closed-form estimates
# ---------------------------------------------------------------------------

def td_high_frequency(sys: SystemSpec, bath: BathSpec, sup: SuperpositionSpec) -> RegimeEstimate:
    """1/(2 M l0^2 gamma0 Lambda); in regime while M l0^2 gamma0 <= 1."""
    product = sys.mass * sup.l0 ** 2 * bath.gamma0
    value = 1.0 / (2.0 * product * bath.lambda_cut)
    return RegimeEstimate(value, product <= 1.0, {"m_l0sq_gamma0": product})


def td_underdamped_bound(bath: BathSpec) -> float:
    return 1.0 / (8.0 * bath.gamma0)


def td_macroscopic(sys: SystemSpec, bath: BathSpec, sup: SuperpositionSpec) -> RegimeEstimate:
    """(1/(2 l0 Omega)) sqrt(pi/(M gamma0)), valid when the D term dominates.

    The regime flag compares (M l0^2/2pi)(Omega t)^2 against
    |t (ln Lambda t + gamma_E - 1)| at the estimated time.
    """
    W, M, L0 = sys.omega, sys.mass, sup.l0
    value = math.sqrt(math.pi / (M * bath.gamma0)) / (2.0 * L0 * W)
    d_term = M * L0 ** 2 / (2.0 * math.pi) * (W * value) ** 2
    f_term = abs(value * (math.log(bath.lambda_cut * value) + EULER_GAMMA - 1.0))
    ratio = d_term / f_term if f_term > 0 else math.inf
    return RegimeEstimate(value, ratio >= 1.0, {"d_over_f_term": ratio})


def a_int_short_time(t: float, sys: SystemSpec, bath: BathSpec, sup: SuperpositionSpec) -> float:
    """Small-Omega t form of A_int for 1/Lambda < t < 1/Omega (frozen fringes).

    Obtained by integrating the late-model rate with Si(x) ~ x and
    Ci(x) ~ gamma_E + ln x.
    """
    if not t > 0:
        raise DomainError("t must be > 0")
    L, W, g0 = bath.lambda_cut, sys.omega, bath.gamma0
    c = L * L / (L * L + W * W)
    diffusive = sys.mass * sup.l0 ** 2 / (2.0 * math.pi) * (W * t) ** 2
    anomalous = 0.5 * t * (math.log(L * t) + EULER_GAMMA - 1.0)
    return 8.0 * c * g0 * (diffusive + anomalous)

