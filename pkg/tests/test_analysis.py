import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tcmps.analysis import (BoundViolation, FitError, PowerLawFit, SaturationWarning, bound_check,
                            delta_norm, estimate_p0, exponent_crossover_report, fit_power_law_1d,
                            fit_power_law_2d, infidelity_bound, predict_infidelity, table_rows)

# product-state reference exponents and depth used for the bound table
XI_T, D_XI_T = 0.975, 0.014
UPS_T, D_UPS_T = 0.954, 0.039
D_TABLE = 128**2
# The prefactor is not published; fix the reference power inside the fit range
# and choose the prefactor so that I(P0) = 0.15, then pick its error so that
# the lower row at P0 is 0.075.
P0_REF = 1e-3
LAM_T = 0.15 / (P0_REF**XI_T * D_TABLE**UPS_T)
D_LAM_T = LAM_T * (1 - 0.5 * P0_REF**D_XI_T * D_TABLE**D_UPS_T)


def table_fit():
    return PowerLawFit(LAM_T, (XI_T, UPS_T), (D_LAM_T, D_XI_T, D_UPS_T), np.eye(3))


def synthetic_1d(seed=0):
    rng = np.random.default_rng(seed)
    p = np.logspace(-3, -1, 20)
    return p, 0.5 * p**1.38 * (1 + 0.05 * rng.standard_normal(20))


# -- 1-D fits -------------------------------------------------------------------


def test_exact_power_law_recovered():
    p = np.logspace(-4, -2, 6)
    f = fit_power_law_1d(zip(p, 0.7 * p**1.2))
    assert f.xi == pytest.approx(1.2, abs=1e-12)
    assert f.prefactor == pytest.approx(0.7, rel=1e-10)
    assert f.d_xi < 1e-10
    assert f.fit_domain["P"] == [p.min(), p.max()]


def test_synthetic_noisy_fit_against_frozen_oracle():
    # frozen from an independent statsmodels OLS on the same data
    p, i = synthetic_1d()
    f = fit_power_law_1d(zip(p, i))
    assert f.xi == pytest.approx(1.3740871754858346, abs=1e-12)
    assert f.d_xi == pytest.approx(0.007191477034380119, rel=1e-9)
    assert f.prefactor == pytest.approx(0.48166152046274846, rel=1e-10)
    assert abs(f.xi - 1.38) < 0.1


def test_weighted_fit_uses_errors():
    p = np.logspace(-3, -1, 8)
    i = 0.5 * p**1.38
    f = fit_power_law_1d([(a, b, 0.05 * b) for a, b in zip(p, i)], weighted=True)
    assert f.xi == pytest.approx(1.38, abs=1e-10)
    with pytest.raises(FitError):
        fit_power_law_1d([(a, b) for a, b in zip(p, i)], weighted=True)


@given(c=st.floats(1e-2, 1e2), seed=st.integers(0, 1000))
@settings(max_examples=30, deadline=None)
def test_scale_equivariance(c, seed):
    p, i = synthetic_1d(seed)
    i = np.clip(i, 1e-12, 0.99)
    f = fit_power_law_1d(zip(p, i))
    g = fit_power_law_1d(zip(c * p, i))
    assert g.xi == pytest.approx(f.xi, abs=1e-9)
    assert g.prefactor == pytest.approx(f.prefactor * c ** (-f.xi), rel=1e-8)


@pytest.mark.parametrize("pts", [
    [(1e-3, 0.1), (2e-3, 0.2)],
    [(1e-3, 0.1), (1e-3, 0.2), (1e-3, 0.3)],
    [(0.0, 0.1), (1e-3, 0.2), (2e-3, 0.3)],
    [(1e-3, 0.0), (2e-3, 0.2), (3e-3, 0.3)],
    [(1e-3, 1.0), (2e-3, 0.2), (3e-3, 0.3)],
])
def test_1d_fit_rejects_bad_input(pts):
    with pytest.raises(FitError):
        fit_power_law_1d(pts)


# -- 2-D fits -----------------------------------------------------------------


def synthetic_2d(seed=1):
    rng = np.random.default_rng(seed)
    pts = []
    for n in (8, 10, 12):
        for p in np.logspace(-3, -2, 5):
            pts.append((p, n * n, 0.3 * p**1.1 * (n * n) ** 0.9 * (1 + 0.05 * rng.standard_normal())))
    return pts


def test_2d_fit_against_frozen_oracle():
    f = fit_power_law_2d(synthetic_2d())
    assert f.xi == pytest.approx(1.0936411835648512, abs=1e-12)
    assert f.upsilon == pytest.approx(0.8781450273447173, abs=1e-12)
    assert f.prefactor == pytest.approx(math.exp(-1.1361840776400305), rel=1e-10)
    assert f.d_xi == pytest.approx(0.010276046480235815, rel=1e-9)
    assert f.d_upsilon == pytest.approx(0.02522646755348844, rel=1e-9)
    # prefactor error by the delta method on log(Lambda)
    assert f.d_prefactor == pytest.approx(f.prefactor * 0.13002336476381196, rel=1e-9)
    assert f.fit_domain["N"] == [8, 12]


def test_2d_fit_exact_and_validation():
    pts = [(p, d, 0.01 * p * d**0.5) for p in (1e-3, 2e-3, 4e-3) for d in (64, 100)]
    f = fit_power_law_2d(pts)
    assert f.exponents == pytest.approx((1.0, 0.5), abs=1e-12)
    with pytest.raises(FitError):
        fit_power_law_2d([(p, 64, 0.1 * p) for p in (1e-3, 2e-3, 3e-3, 4e-3)])
    with pytest.raises(FitError):
        fit_power_law_2d(pts[:3])


def test_fit_json_roundtrip():
    f = fit_power_law_2d(synthetic_2d())
    g = PowerLawFit.from_json(f.to_json())
    assert g.prefactor == f.prefactor
    assert g.exponents == f.exponents
    assert g.std_errors == pytest.approx(f.std_errors)
    assert np.allclose(g.covariance, f.covariance)


# -- prediction -----------------------------------------------------------------


def test_table_rows_reproduce_published_values():
    rows = table_rows(table_fit(), D_TABLE, P0_REF)
    central = [round(r["I_central"], 3) for r in rows]
    lower = [round(r["I_lower"], 3) for r in rows]
    assert central == [0.113, 0.15, 0.186]
    assert lower == [0.057, 0.075, 0.093]


def test_estimate_p0_inverts_prediction():
    fit = table_fit()
    p0 = estimate_p0(fit, 0.15, D_TABLE)
    assert p0 == pytest.approx(P0_REF, rel=1e-12)
    assert predict_infidelity(fit, p0, D_TABLE).infidelity == pytest.approx(0.15, rel=1e-12)


@given(target=st.floats(1e-4, 0.85), d=st.floats(1.0, 1e5))
@settings(max_examples=50)
def test_estimate_p0_round_trip(target, d):
    fit = fit_power_law_2d(synthetic_2d())
    p0 = estimate_p0(fit, target, d)
    assert predict_infidelity(fit, p0, d).infidelity == pytest.approx(target, rel=1e-12)


def test_estimate_p0_errors():
    fit = table_fit()
    with pytest.raises(FitError):
        estimate_p0(fit, 1.5)
    bad = PowerLawFit(1.0, (-0.5,), (0.0, 0.0), np.eye(2))
    with pytest.raises(FitError):
        estimate_p0(bad, 0.1)


def test_prediction_ordering_and_saturation():
    fit = table_fit()
    pred = predict_infidelity(fit, 2e-3, D_TABLE)
    assert pred.lower < pred.infidelity < pred.upper
    assert not pred.saturated
    with pytest.warns(SaturationWarning):
        big = predict_infidelity(fit, 1.0, D_TABLE)
    assert big.saturated
    assert big.infidelity == 1.0 and big.upper == 1.0
    with pytest.raises(FitError):
        predict_infidelity(fit, 0.0)


def test_no_warning_below_saturation():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        predict_infidelity(table_fit(), 1e-3, D_TABLE)


# -- operator bounds ------------------------------------------------------------


def test_delta_norm_zero_noise():
    u = np.linalg.qr(np.random.default_rng(0).normal(size=(4, 4)))[0]
    d = delta_norm(u, [u, u, u])
    assert d.frobenius == pytest.approx(0, abs=1e-14)
    assert d.spectral == pytest.approx(0, abs=1e-14)
    with pytest.raises(ValueError):
        delta_norm(u, [])


@given(y=st.floats(-3.0, 3.0))
def test_delta_norm_single_rotation(y):
    # ||I - RZ(y)||_F = sqrt(2) |1 - e^{i y/2}| = 2 sqrt(2) |sin(y/4)|
    rz = np.diag([np.exp(-0.5j * y), np.exp(0.5j * y)])
    d = delta_norm(np.eye(2), [rz])
    assert d.frobenius == pytest.approx(2 * math.sqrt(2) * abs(math.sin(y / 4)), abs=1e-12)
    assert d.spectral == pytest.approx(2 * abs(math.sin(y / 4)), abs=1e-12)


def test_infidelity_bound_values():
    assert infidelity_bound(0.0) == 0.0
    assert infidelity_bound(0.1) == pytest.approx(0.19)
    assert infidelity_bound(1.0) == 1.0
    assert infidelity_bound(3.0) == 1.0


def test_bound_check_trivial_cases():
    rep = bound_check(1.0, 1.0, 0.0)
    assert rep.ok and rep.variance_margin == 0.0
    # delta >= 1 makes the infidelity bound vacuous
    assert bound_check(0.0, 0.0, 1.0).ok
    with pytest.raises(BoundViolation):
        bound_check(0.5, 0.9, 0.2)
    bad = bound_check(0.5, 0.9, 0.01, strict=False)
    assert not bad.ok and len(bad.failures()) == 3


def test_crossover_identical_data_not_significant():
    p, i = synthetic_1d()
    pts = list(zip(p, i))
    rep = exponent_crossover_report({"alpha": pts, "sigma": pts})
    assert rep.difference == 0.0 and not rep.significant
    assert len(rep.lines()) == 3


def test_crossover_detects_steeper_alpha():
    p = np.logspace(-3, -2, 6)
    rng = np.random.default_rng(2)
    noise = 1 + 0.02 * rng.standard_normal((2, 6))
    rep = exponent_crossover_report({"alpha": list(zip(p, 2 * p**1.4 * noise[0])),
                                     "sigma": list(zip(p, 0.5 * p * noise[1]))})
    assert rep.significant and rep.z_score > 2
