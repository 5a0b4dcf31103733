"""Wigner function of the symmetric two-packet superposition at t = 0.

Two packets ``N exp(-(x -+ l0)^2 / 2 delta^2) exp(+-i p0 x)`` give

    W_{1,2} = (Nt^2/pi)(d1/d2) exp(-(x -+ xc)^2/d1^2) exp(-d2^2 (p -+ pc - beta (x -+ xc))^2)

plus an interference term oscillating as cos(2 k_p p + 2 (k_x - beta k_p) x).
Two interference envelopes are offered:

``envelope``  Gaussian envelope exp(-x^2/d1^2) exp(-d2^2 (p - beta x)^2); this
              is what the two packets actually produce and integrates with
              the direct terms to exactly 1.
``printed``   prefactor d2^2 (p - beta x)^2 with no Gaussian factor.  It is
              kept for comparison only; it has no finite peak.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .decoherence import FringeConfig, SuperpositionSpec
from .errors import ConfigurationError

INTERFERENCE_FORMS = ("envelope", "printed")


@dataclass(frozen=True)
class WignerCat:
    sup: SuperpositionSpec
    x_c: float
    p_c: float
    delta1: float
    delta2: float
    fringe: FringeConfig
    form: str = "envelope"

    def __post_init__(self):
        if self.form not in INTERFERENCE_FORMS:
            raise ConfigurationError(f"form must be one of {INTERFERENCE_FORMS}, got {self.form!r}")
        if self.delta1 <= 0 or self.delta2 <= 0:
            raise ConfigurationError("packet widths must be > 0")

    @classmethod
    def initial(cls, sup: SuperpositionSpec, form: str = "envelope") -> "WignerCat":
        """t = 0 parameters: d1 = d2 = delta, (xc, pc) = (l0, p0), k_p = l0, k_x = p0."""
        fringe = FringeConfig(k_p=sup.l0, k_x=sup.p0, beta=0.0)
        return cls(sup, sup.l0, sup.p0, sup.delta, sup.delta, fringe, form)

    @property
    def norm_sq(self) -> float:
        """Nt^2 = 1 / (2 (1 + exp(-a_max)))."""
        return 0.5 / (1.0 + math.exp(-self.sup.a_max))


def wigner_components(x, p, cat: WignerCat):
    """Return (w1, w2, w_int) at the phase-space points (x, p); broadcasts."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    d1, d2, beta = cat.delta1, cat.delta2, cat.fringe.beta
    amp = cat.norm_sq / math.pi * (d1 / d2)

    def packet(sign):
        dx = x - sign * cat.x_c
        dp = p - sign * cat.p_c - beta * dx
        return amp * np.exp(-dx ** 2 / d1 ** 2) * np.exp(-(d2 * dp) ** 2)

    k_p, k_x = cat.fringe.k_p, cat.fringe.k_x
    fringe = np.cos(2.0 * k_p * p + 2.0 * (k_x - beta * k_p) * x)
    shear = p - beta * x
    if cat.form == "envelope":
        w_int = 2.0 * amp * np.exp(-x ** 2 / d1 ** 2) * np.exp(-(d2 * shear) ** 2) * fringe
    else:
        w_int = 2.0 * amp * d2 ** 2 * shear ** 2 * fringe
    return packet(1.0), packet(-1.0), w_int


def _peak(fn, box, n=121):
    """Maximum of fn over a box: grid scan then Nelder-Mead polish."""
    (x0, x1), (p0, p1) = box
    xs = np.linspace(x0, x1, n)
    ps = np.linspace(p0, p1, n)
    X, P = np.meshgrid(xs, ps, indexing="ij")
    vals = fn(X, P)
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    res = optimize.minimize(lambda z: -float(fn(z[0], z[1])), [xs[i], ps[j]],
                            method="Nelder-Mead",
                            options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 2000})
    return max(float(vals[i, j]), -float(res.fun))


def a_int_from_peaks(cat: WignerCat) -> float:
    """-log of (1/2) |W_int|_peak / sqrt(W1_peak W2_peak), peaks located numerically."""
    if cat.sup.a_max <= 0:
        raise ConfigurationError("degenerate superposition: a_max = 0")
    if cat.form == "printed":
        raise ConfigurationError("the printed interference term grows without bound and has no peak")
    xr = abs(cat.x_c) + 6.0 * cat.delta1
    pr = abs(cat.p_c) + abs(cat.fringe.beta) * xr + 6.0 / cat.delta2
    box = ((-xr, xr), (-pr, pr))

    def comp(k):
        return lambda x, p: np.abs(wigner_components(x, p, cat)[k])

    w1, w2, wi = (_peak(comp(k), box) for k in range(3))
    return -math.log(0.5 * wi / math.sqrt(w1 * w2))


def total_probability(cat: WignerCat, nodes: int = 400) -> float:
    """Integral of w1 + w2 + w_int by tensor Gauss-Legendre.

    Domain: |x| <= l0 + 8 delta, |p| <= |p0| + 8/delta.
    """
    sup = cat.sup
    xr = sup.l0 + 8.0 * sup.delta
    pr = abs(sup.p0) + 8.0 / sup.delta
    g, w = np.polynomial.legendre.leggauss(nodes)
    xs, wx = xr * g, xr * w
    ps, wp = pr * g, pr * w
    X, P = np.meshgrid(xs, ps, indexing="ij")
    w1, w2, wi = wigner_components(X, P, cat)
    return float(wx @ (w1 + w2 + wi) @ wp)
