import logging
import math

import numpy as np
import pytest
from scipy.special import sici

from qbm.decoherence import (FringeConfig, NoDecoherence, RateModel, SuperpositionSpec, a_int_rate,
                             a_int_short_time, decoherence_time, evolve_a_int, td_high_frequency,
                             td_macroscopic, td_underdamped_bound)
from qbm.errors import ConfigurationError, DomainError
from qbm.params import BathSpec, SystemSpec

SYS = SystemSpec(1.0)
BATH = BathSpec(0.05, 100.0)
SUP = SuperpositionSpec(1.0)
FR = FringeConfig.frozen(SUP)
EULER = 0.5772156649015329


def late_antiderivative(t, omega, bath, l0, mass=1.0):
    """A_int of the late model with frozen fringes, integrated by hand.

    int_0^t Si(W s) ds = t Si(W t) + (cos W t - 1)/W
    int_0^t Ci(W s) ds = t Ci(W t) - sin(W t)/W
    """
    if t == 0:
        return 0.0
    L, g0 = bath.lambda_cut, bath.gamma0
    c = L * L / (L * L + omega * omega)
    si, ci = sici(omega * t)
    d_part = 4 * l0 ** 2 * (2 * mass * g0 * c * omega / math.pi) * (t * si + (math.cos(omega * t) - 1) / omega)
    f_part = 4 * g0 * c * (t * ci - math.sin(omega * t) / omega + t * math.log(L / omega))
    return d_part + f_part


# ---------------------------------------------------------------------------
# rate
# ---------------------------------------------------------------------------

def test_plateau_rate_value():
    # 4 D_inf - 2 f_inf with k_p = 1, k_x = 1/2
    assert math.isclose(a_int_rate(1.0, FR, SYS, BATH, model="plateau"), 1.120922, rel_tol=2e-6)


def test_late_rate_approaches_plateau():
    plat = a_int_rate(0.0, FR, SYS, BATH, model="plateau")
    late = a_int_rate(2000.0, FR, SYS, BATH, model="late")
    exact = a_int_rate(2000.0, FR, SYS, BATH, model="exact")
    assert abs(late - plat) < 2e-3 * plat
    # the memory transient decays like 1/(Omega t)
    assert abs(exact - late) < 1e-3 * plat


def test_rate_zero_cases():
    assert a_int_rate(5.0, FringeConfig(0.0, 1.0), SYS, BATH) == 0.0
    assert a_int_rate(0.0, FR, SYS, BATH, model="late") == 0.0
    assert a_int_rate(0.0, FR, SYS, BATH, model="exact") == 0.0


def test_rate_guards():
    with pytest.raises(ConfigurationError):
        a_int_rate(1.0, FR, SystemSpec(1.0, orientation="inverted"), BATH)
    with pytest.raises(DomainError):
        a_int_rate(-1.0, FR, SYS, BATH)
    with pytest.raises(ValueError):
        a_int_rate(1.0, FR, SYS, BATH, model="quadratic")


def test_superposition_guards():
    assert SuperpositionSpec(1.0, 1.0, 1.0).a_max == 2.0
    assert SUP.a_max == 1.0
    for bad in [dict(l0=-1.0), dict(l0=1.0, delta=0.0), dict(l0=0.0, p0=0.0), dict(l0=math.nan)]:
        with pytest.raises(ConfigurationError):
            SuperpositionSpec(**bad)
    with pytest.raises(ConfigurationError):
        FringeConfig.frozen(SuperpositionSpec(0.0, p0=1.0))


# ---------------------------------------------------------------------------
# evolve_a_int
# ---------------------------------------------------------------------------

def test_late_a_int_matches_hand_integral():
    tr = evolve_a_int((0.0, 20.0), 81, FR, SYS, BATH, SUP, model="late")
    assert tr.a_int[0] == 0.0
    for t, a in zip(tr.times[1:], tr.a_int[1:]):
        ref = late_antiderivative(t, 1.0, BATH, 1.0)
        assert abs(a - ref) <= 1e-9 * max(1.0, abs(ref)), (t, a, ref)


def test_late_a_int_matches_hand_integral_other_params():
    sys2, bath2, sup2 = SystemSpec(2.5, mass=1.0), BathSpec(0.01, 400.0), SuperpositionSpec(3.0)
    tr = evolve_a_int((0.0, 5.0), 26, FringeConfig.frozen(sup2), sys2, bath2, sup2)
    ref = [late_antiderivative(t, 2.5, bath2, 3.0) for t in tr.times]
    assert np.allclose(tr.a_int, ref, rtol=1e-9, atol=1e-12)


def test_high_frequency_growth_is_linear():
    sys_, sup = SystemSpec(100.0), SuperpositionSpec(1.0)
    tr = evolve_a_int((0.0, 0.2), 41, FringeConfig.frozen(sup), sys_, BATH, sup)
    # A ~ 2 l0^2 M gamma0 Lambda t once the oscillation has averaged out
    slope = 2 * 1.0 * 1.0 * BATH.gamma0 * BATH.lambda_cut
    i = 30
    assert abs(tr.a_int[i] / (slope * tr.times[i]) - 1) < 0.15
    assert tr.bound_crossing_time is not None and 0.08 < tr.bound_crossing_time < 0.15


def test_monotone_start_exact_model():
    tr = evolve_a_int((0.0, 0.1), 101, FR, SYS, BATH, SUP, model="exact")
    assert np.all(np.diff(tr.a_int) > 0)


def test_late_model_dips_at_start():
    # the late f(t) is large and positive for Lambda t < 1 and A_int goes slightly negative
    tr = evolve_a_int((0.0, 0.02), 41, FR, SYS, BATH, SUP, model="late")
    assert tr.a_int[1:].min() < 0
    assert tr.a_int[-1] > 0


def test_monotone_start_default_model():
    # stated property for the default model; the late model violates it while Lambda t < 1
    tr = evolve_a_int((0.0, 0.1), 101, FR, SYS, BATH, SUP)
    assert np.all(np.diff(tr.a_int) > 0)


def test_bound_crossing_recorded(caplog):
    with caplog.at_level(logging.INFO, logger="qbm.decoherence"):
        tr = evolve_a_int((0.0, 5.0), 51, FR, SYS, BATH, SUP, model="plateau")
    assert tr.a_max == 1.0
    assert tr.bound_crossing_time == pytest.approx(tr.times[np.argmax(tr.a_int > 1.0)])
    assert "a_max" in caplog.text
    assert tr.saturation_time == pytest.approx(20.0)


def test_evolve_guards():
    with pytest.raises(DomainError):
        evolve_a_int((0.1, 1.0), 11, FR, SYS, BATH, SUP)
    with pytest.raises(DomainError):
        evolve_a_int((0.0, 0.0), 11, FR, SYS, BATH, SUP)
    with pytest.raises(ConfigurationError):
        evolve_a_int((0.0, 1.0), 1, FR, SYS, BATH, SUP)


# ---------------------------------------------------------------------------
# decoherence time
# ---------------------------------------------------------------------------

def test_high_frequency_case():
    sys_ = SystemSpec(100.0)
    td = decoherence_time(FR, sys_, BATH, SUP, 10.0)
    assert abs(td / 0.1 - 1) < 0.3
    assert td == pytest.approx(0.105876, rel=1e-4)


@pytest.mark.parametrize("g0", [1e-3, 5e-3, 1e-2])
def test_underdamped_case_below_bound(g0):
    bath = BathSpec(g0, 100.0)
    td = decoherence_time(FR, SYS, bath, SUP, 1 / g0)
    assert td and td <= td_underdamped_bound(bath)


def test_macroscopic_case():
    sup = SuperpositionSpec(10.0)
    td = decoherence_time(FringeConfig.frozen(sup), SYS, BATH, sup, 20.0)
    assert abs(td / 0.396 - 1) < 0.3
    assert td == pytest.approx(0.35082, rel=1e-4)


def test_threshold_root_is_accurate():
    sys_ = SystemSpec(100.0)
    td = decoherence_time(FR, sys_, BATH, SUP, 10.0, threshold=0.5)
    tr = evolve_a_int((0.0, td), 2, FR, sys_, BATH, SUP)
    assert abs(tr.a_int[-1] - 0.5) < 1e-6


def test_plateau_without_anomalous_term():
    from qbm.coeffs import asymptotic_coefficients
    d_inf = asymptotic_coefficients(SYS, BATH).d_normal
    td = decoherence_time(FR, SYS, BATH, SUP, 100.0, model="plateau", anomalous=False)
    assert math.isclose(td, 1 / (4 * d_inf), rel_tol=1e-6)
    assert td == pytest.approx(5.0005, rel=1e-4)


def test_no_decoherence():
    res = decoherence_time(FR, SYS, BathSpec(0.0, 100.0), SUP, 3.0)
    assert isinstance(res, NoDecoherence) and not res
    assert res.horizon == 3.0 and res.a_int_at_horizon == 0.0
    weak = decoherence_time(FringeConfig.frozen(SuperpositionSpec(0.01)), SYS, BathSpec(1e-4, 100.0),
                            SuperpositionSpec(0.01), 50.0)
    assert isinstance(weak, NoDecoherence) and 0 < weak.a_int_at_horizon < 1
    with pytest.raises(DomainError):
        decoherence_time(FR, SYS, BATH, SUP, 0.0)


def test_horizon_capped_by_saturation_time():
    res = decoherence_time(FR, SYS, BATH, SUP, 1e6, threshold=1e9)
    assert isinstance(res, NoDecoherence) and res.horizon == pytest.approx(20.0)


# ---------------------------------------------------------------------------
# closed-form estimates
# ---------------------------------------------------------------------------

def test_high_frequency_estimate_values():
    sys_ = SystemSpec(100.0)
    est = td_high_frequency(sys_, BATH, SUP)
    assert est.value == pytest.approx(0.1) and est.in_regime
    assert td_high_frequency(SystemSpec(100.0, mass=2.0), BATH, SUP).value == pytest.approx(0.05)
    far = td_high_frequency(sys_, BATH, SuperpositionSpec(10.0))
    assert far.value == pytest.approx(0.001) and not far.in_regime
    assert float(est) == est.value


def test_underdamped_bound_values():
    assert td_underdamped_bound(BATH) == pytest.approx(2.5)
    assert td_underdamped_bound(BathSpec(1e-3, 100.0)) == pytest.approx(125.0)
    # the bound sits below the saturation time 1/gamma0
    for g0 in (1e-4, 1e-2, 0.5):
        assert td_underdamped_bound(BathSpec(g0, 100.0)) < 1 / g0


def test_macroscopic_estimate():
    sup = SuperpositionSpec(10.0)
    est = td_macroscopic(SYS, BATH, sup)
    assert est.value == pytest.approx(0.39633, rel=1e-4) and est.in_regime
    # scales as 1/l0 and 1/sqrt(gamma0)
    assert td_macroscopic(SYS, BATH, SuperpositionSpec(20.0)).value == pytest.approx(est.value / 2)
    assert td_macroscopic(SYS, BathSpec(0.2, 100.0), sup).value == pytest.approx(est.value / 2)
    assert not td_macroscopic(SYS, BATH, SuperpositionSpec(0.1)).in_regime


def test_short_time_form_matches_late_model():
    sup = SuperpositionSpec(1.0)
    for t in (0.03, 0.1, 0.3):
        ref = late_antiderivative(t, 1.0, BATH, 1.0)
        assert abs(a_int_short_time(t, SYS, BATH, sup) / ref - 1) < 0.1, t
    with pytest.raises(DomainError):
        a_int_short_time(0.0, SYS, BATH, sup)


def test_short_time_form_as_stated():
    # (8 L^2/(L^2+W^2)) gamma0 [(M l0^2/2pi)(W t)^2 + t (ln L t + gamma_E - 1)]
    # against the numerically integrated default model on 1/Lambda < t < 1/Omega
    L, W, g0 = 100.0, 1.0, 0.05
    c = L * L / (L * L + W * W)
    for t in np.geomspace(0.03, 0.3, 5):
        stated = 8 * c * g0 * ((W * t) ** 2 / (2 * math.pi) + t * (math.log(L * t) + EULER - 1))
        tr = evolve_a_int((0.0, float(t)), 2, FR, SYS, BATH, SUP)
        assert abs(stated / tr.a_int[-1] - 1) <= 0.1, (t, stated, tr.a_int[-1])


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def test_regime_consistency_sweep():
    # Omega = Lambda, M l0^2 gamma0 <= 1: numerical t_D within 30% of 1/(2 M l0^2 gamma0 Lambda)
    misses = []
    for p in np.linspace(0.01, 1.0, 100):
        bath = BathSpec(float(p), 100.0)
        sys_ = SystemSpec(100.0)
        td = decoherence_time(FR, sys_, bath, SUP, 10.0)
        est = td_high_frequency(sys_, bath, SUP)
        assert est.in_regime
        if not (td and abs(td / est.value - 1) <= 0.3):
            misses.append((round(float(p), 3), td, est.value))
    assert not misses, f"{len(misses)}/100 outside 30%: first {misses[:3]}"


def test_underdamped_bound_sweep():
    rng = np.random.default_rng(11)
    for _ in range(100):
        g0 = 10 ** rng.uniform(-4, -2)
        lam = rng.uniform(50.0, 500.0)
        bath = BathSpec(g0, lam)
        td = decoherence_time(FR, SYS, bath, SUP, 1 / g0)
        if td:
            assert td <= td_underdamped_bound(bath), (g0, lam, td)


def test_model_enum_roundtrip():
    assert RateModel("exact") is RateModel.EXACT
