"""Gaussian-ansatz evolution of the upside-down oscillator in a zero-temperature bath.

The reduced density matrix is kept in the form

    rho(S, d) = N exp(-(2a - C) d^2) exp(-(2a + C) S^2) exp(-4 i b S d)

with S = (x + x')/2 and d = (x - x')/2.  The width of the off-diagonal
Gaussian, ``2a - C``, measures how much coherence survives.

Two right-hand sides are provided:

``hpz``      projection of the master equation onto the ansatz (default):
             a' = 4ab - g (2a-C) + D + 2bf
             b' = -2a^2 + 2b^2 + C^2/2 + (Wsq + dW2)/2 - 2bg - f (2a+C)
             C' = 4Cb + 2(2a-C) g - 2D - 4bf
             with Wsq = -Omega^2 for the inverted potential.
``printed``  the same a' and C' with
             b' = -2(a^2 - 2b^2 - C^2/2) - (Weff + dW2)/2 - 2bg - (2a-C) f
             and Weff = -Omega^2.

Internally the state is integrated as (ln(2a-C), ln(2a+C), b, ln N), so
both widths stay positive by construction; the sum width obeys
d(2a+C)/dt = 4b (2a+C) in both systems and N' = 2Nb.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import coeffs
from .errors import AnsatzBreakdownError, ConfigurationError, DomainError, StiffnessError
from .params import BathSpec, SystemSpec

log = logging.getLogger(__name__)

# ln(2a - C) below this is treated as loss of positivity
LOG_WIDTH_FLOOR = math.log(1e-280)


class AnsatzSystem(str, enum.Enum):
    HPZ = "hpz"
    PRINTED = "printed"


class CoefficientSet(str, enum.Enum):
    LATE = "late"    # Shi/Chi forms valid for Lambda t > 1
    EXACT = "exact"  # full continuation including the P/Q transient


class WarmUp(str, enum.Enum):
    RAMP = "ramp"    # linear ramp from 0 to the t = 1/Lambda values
    RAW = "raw"      # late forms used down to t -> 0
    ZERO = "zero"    # coefficients switched on at t = 1/Lambda


@dataclass(frozen=True)
class GaussianState:
    a: float
    b: float
    c: float
    n: float
    t: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "c", "n", "t"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"state field {name} is not finite")
        if not (self.width_minus > 0 and self.width_plus > 0):
            raise DomainError(
                f"state is not normalizable: 2a-C = {self.width_minus:g}, 2a+C = {self.width_plus:g}"
            )

    @property
    def width_minus(self) -> float:
        return 2.0 * self.a - self.c

    @property
    def width_plus(self) -> float:
        return 2.0 * self.a + self.c

    @classmethod
    def minimum_uncertainty(cls, delta: float = 1.0) -> "GaussianState":
        """Pure Gaussian of width delta: a = 1/(2 delta^2), b = C = 0, unit trace."""
        if not delta > 0:
            raise ConfigurationError("delta must be > 0")
        a = 0.5 / delta ** 2
        return cls(a=a, b=0.0, c=0.0, n=math.sqrt(2.0 * a / math.pi))


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = math.inf
    t_end: float = 30.0
    method: str = "DOP853"

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ConfigurationError("tolerances must be > 0")
        if not self.max_step > 0:
            raise ConfigurationError("max_step must be > 0")
        if not (math.isfinite(self.t_end) and self.t_end >= 0):
            raise ConfigurationError("t_end must be finite and >= 0")


@dataclass(frozen=True)
class InvertedTrajectory:
    t: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    n: np.ndarray
    system: str = AnsatzSystem.HPZ.value
    coefficients: str = CoefficientSet.LATE.value
    warmup: str = WarmUp.RAMP.value
    # the widths as integrated; a and c alone lose 2a + C to cancellation once b grows
    width_minus: np.ndarray | None = None
    width_plus: np.ndarray | None = None

    def __len__(self):
        return len(self.t)

    def state(self, i: int) -> GaussianState:
        return GaussianState(float(self.a[i]), float(self.b[i]), float(self.c[i]),
                             float(self.n[i]), float(self.t[i]))

    @property
    def width(self) -> np.ndarray:
        if self.width_minus is not None:
            return self.width_minus
        return 2.0 * self.a - self.c


# ---------------------------------------------------------------------------
# coefficients along the trajectory
# ---------------------------------------------------------------------------

class _Coefficients:
    """(dW2, gamma, D, f) at time t with the chosen set and warm-up."""

    def __init__(self, sys, bath, cset, warmup):
        self.sys, self.bath = sys, bath
        self.cset, self.warmup = CoefficientSet(cset), WarmUp(warmup)
        self.memory_time = 1.0 / bath.lambda_cut
        self.t_floor = coeffs.INVERTED_T_FLOOR / sys.omega
        self._at_memory = self._sample(self.memory_time)

    def _sample(self, t):
        if self.cset is CoefficientSet.EXACT:
            s = coeffs.inverted_exact(t, self.sys, self.bath)
        else:
            s = coeffs.inverted_late(max(t, self.t_floor), self.sys, self.bath)
        return np.array([s.delta_omega_sq, s.gamma, s.d_normal, s.f_anom])

    def __call__(self, t):
        if self.bath.gamma0 == 0.0:
            return np.zeros(4)
        if self.cset is CoefficientSet.EXACT or self.warmup is WarmUp.RAW or t >= self.memory_time:
            return self._sample(t)
        if self.warmup is WarmUp.ZERO:
            return np.zeros(4)
        return (t / self.memory_time) * self._at_memory


def _check_system(sys: SystemSpec, bath: BathSpec):
    if not sys.inverted:
        raise ConfigurationError("the ansatz evolution is for the inverted orientation")
    if sys.mass != 1.0:
        raise ConfigurationError("the ansatz equations assume M = 1; rescale units instead")
    sys.check_against(bath)


def ansatz_rhs(state: GaussianState, sys: SystemSpec, bath: BathSpec,
               system: AnsatzSystem | str = AnsatzSystem.HPZ,
               coefficients: CoefficientSet | str = CoefficientSet.LATE,
               warmup: WarmUp | str = WarmUp.RAMP,
               forced=None) -> tuple[float, float, float, float]:
    """Time derivatives (a', b', C', N') at ``state``.

    ``forced`` replaces the bath coefficients by a fixed tuple
    (dW2, gamma, D, f), e.g. zeros for the isolated oscillator.
    """
    _check_system(sys, bath)
    if forced is None:
        dw2, gam, d, f = _Coefficients(sys, bath, coefficients, warmup)(state.t)
    else:
        dw2, gam, d, f = forced
    return _rhs_abcn(state.a, state.b, state.c, state.n, dw2, gam, d, f,
                     sys.omega, AnsatzSystem(system))


def _rhs_widths(minus, plus, b, dw2, gam, d, f, omega, system):
    """Derivatives of (2a-C, 2a+C, b).

    Working in the two widths keeps b' free of the cancellation between
    -2a^2 and C^2/2, which are each of order (2a-C)^2 at late times.
    """
    minus_dot = 4 * (b - gam) * minus + 4 * d + 8 * b * f
    plus_dot = 4 * b * plus
    potential = 0.5 * (-omega ** 2 + dw2)
    if system is AnsatzSystem.HPZ:
        # -2a^2 + C^2/2 = -(2a-C)(2a+C)/2
        b_dot = -0.5 * minus * plus + 2 * b * b + potential - 2 * b * gam - f * plus
    else:
        # -2a^2 + 4b^2 + C^2 with a, C in terms of the widths
        quad = (minus * minus - 6 * minus * plus + plus * plus) / 8.0
        b_dot = quad + 4 * b * b - potential - 2 * b * gam - minus * f
    return minus_dot, plus_dot, b_dot


def _rhs_abcn(a, b, c, n, dw2, gam, d, f, omega, system):
    minus_dot, plus_dot, b_dot = _rhs_widths(2 * a - c, 2 * a + c, b, dw2, gam, d, f,
                                             omega, system)
    return 0.25 * (plus_dot + minus_dot), b_dot, 0.5 * (plus_dot - minus_dot), 2 * n * b


# ---------------------------------------------------------------------------
# evolution
# ---------------------------------------------------------------------------

def evolve(state0: GaussianState, sys: SystemSpec, bath: BathSpec,
           cfg: IntegratorConfig = IntegratorConfig(), grid=None,
           system: AnsatzSystem | str = AnsatzSystem.HPZ,
           coefficients: CoefficientSet | str = CoefficientSet.LATE,
           warmup: WarmUp | str = WarmUp.RAMP,
           forced=None) -> InvertedTrajectory:
    """Integrate the ansatz from ``state0.t`` to ``cfg.t_end``.

    Parameters
    ----------
    grid : array_like, optional
        Output times; defaults to 301 uniform points.
    forced : tuple, optional
        Fixed (dW2, gamma, D, f) instead of the bath coefficients.

    Raises
    ------
    AnsatzBreakdownError
        2a - C reached zero; carries the failure time.
    StiffnessError
        The step size collapsed.
    """
    _check_system(sys, bath)
    system = AnsatzSystem(system)
    t0, t_end = state0.t, cfg.t_end
    if t_end < t0:
        raise ConfigurationError("t_end precedes the initial time")
    if grid is None:
        grid = np.linspace(t0, t_end, 301) if t_end > t0 else np.array([t0])
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0 or np.any(np.diff(grid) <= 0):
        raise ConfigurationError("grid must be a strictly increasing 1-D array")
    if grid[0] < t0 or grid[-1] > t_end:
        raise ConfigurationError("grid must lie inside [t0, t_end]")

    if forced is not None:
        fixed = np.asarray(forced, dtype=float)
        coef = lambda t: fixed  # noqa: E731
        kinks = []
    else:
        coef = _Coefficients(sys, bath, coefficients, warmup)
        kinks = [coef.memory_time] if coef.cset is CoefficientSet.LATE else []

    omega = sys.omega

    def rhs(t, y):
        log_minus, log_plus, b, _ = y
        minus, plus = math.exp(log_minus), math.exp(log_plus)
        dw2, gam, d, f = coef(t)
        minus_dot, _, b_dot = _rhs_widths(minus, plus, b, dw2, gam, d, f, omega, system)
        return [minus_dot / minus, 4 * b, b_dot, 2 * b]

    # positivity is structural in log variables; a collapse shows up as ln(2a-C) diving
    def collapse(t, y):
        return y[0] - LOG_WIDTH_FLOOR
    collapse.terminal = True
    collapse.direction = -1

    y = np.array([math.log(state0.width_minus), math.log(state0.width_plus), state0.b,
                  math.log(state0.n)])
    stops = sorted({t0, t_end, *[k for k in kinks if t0 < k < t_end]})
    out_t, out_y = [], []
    if grid[0] == t0:
        out_t.append(t0)
        out_y.append(y.copy())
    for lo, hi in zip(stops[:-1], stops[1:]):
        sol = solve_ivp(rhs, (lo, hi), y, method=cfg.method, dense_output=True,
                        rtol=cfg.rel_tol, atol=cfg.abs_tol, max_step=cfg.max_step,
                        events=collapse)
        if sol.status == 1:
            t_fail = float(sol.t_events[0][0])
            raise AnsatzBreakdownError(f"2a - C collapsed to 0 at t = {t_fail:.6g}", t_fail=t_fail)
        if sol.status != 0:
            t_fail = float(sol.t[-1]) if len(sol.t) else lo
            raise StiffnessError(f"integrator stopped at t = {t_fail:.6g}: {sol.message}", t_fail=t_fail)
        inside = grid[(grid > lo) & (grid <= hi)]
        if len(inside):
            out_t.extend(inside)
            out_y.extend(sol.sol(inside).T)
        y = sol.y[:, -1]
    return _pack(out_t, out_y, system, coef, forced)


def _pack(out_t, out_y, system, coef, forced):
    Y = np.array(out_y).reshape(-1, 4)
    minus, plus, b, n = np.exp(Y[:, 0]), np.exp(Y[:, 1]), Y[:, 2], np.exp(Y[:, 3])
    cset = "forced" if forced is not None else coef.cset.value
    warm = "none" if forced is not None else coef.warmup.value
    return InvertedTrajectory(
        t=np.array(out_t, dtype=float),
        a=0.25 * (plus + minus), b=b, c=0.5 * (plus - minus), n=n,
        system=system.value, coefficients=cset, warmup=warm,
        width_minus=minus, width_plus=plus,
    )


def width_series(traj: InvertedTrajectory) -> tuple[np.ndarray, np.ndarray]:
    """(t, 2a - C) along a trajectory."""
    if len(traj) == 0:
        raise ConfigurationError("empty trajectory")
    return traj.t.copy(), traj.width


def wigner_of_state(state: GaussianState, x, p):
    """Wigner function of the ansatz state at (x, p).

    (1/pi) sqrt((2a+C)/(2a-C)) exp(-(2a+C) x^2) exp(-(p + 2bx)^2 / (2a-C));
    the ridge p = -2bx follows the local momentum of the phase exp(-i b x^2).
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    minus, plus = state.width_minus, state.width_plus
    return (math.sqrt(plus / minus) / math.pi) * np.exp(-plus * x * x) \
        * np.exp(-(p + 2.0 * state.b * x) ** 2 / minus)


def isolated_solution(t, omega: float, delta: float = 1.0):
    """Closed-form (a, b) for the pure Gaussian in the bare inverted potential.

    With psi ~ exp(-alpha x^2) the Schroedinger equation gives the Riccati
    flow alpha' = -2i alpha^2 - i omega^2/2, solved by
    alpha = (omega/2) tan(arctan(2 alpha0/omega) - i omega t).
    """
    t = np.asarray(t, dtype=float)
    alpha0 = 0.5 / delta ** 2
    alpha = 0.5 * omega * np.tan(math.atan(2.0 * alpha0 / omega) - 1j * omega * t)
    return alpha.real, alpha.imag
