import math

import pytest
from scipy import integrate

from errors import ParameterError, RegimeError
from theory import (
    FiniteExit,
    InstantaneousExit,
    IntegralVerdict,
    MeanFiniteness,
    classify_regime,
    drift_passage_time,
    integral_test_large_time,
    integral_test_small_time,
    nu_exponent,
    relative_stability_norm,
    tail_integral,
)


def test_nu_exponent():
    assert nu_exponent(1.0, 0.0) == pytest.approx(1.0)
    assert nu_exponent(1.5, 0.2) == pytest.approx(2 / 3 - 0.2)


def test_nu_exponent_gate():
    with pytest.raises(RegimeError, match="kappa < 1/alpha"):
        nu_exponent(1.0, 1.0)
    with pytest.raises(RegimeError):
        nu_exponent(1.5, 0.7)


def test_nu_exponent_rejects_bad_alpha():
    with pytest.raises(ParameterError):
        nu_exponent(2.0, 0.0)


def test_classify_curvilinear_case():
    report = classify_regime(1.5, 0.5)
    assert report.instantaneous_exit == InstantaneousExit.RULED_OUT
    assert report.finite_exit == FiniteExit.ALMOST_SURE
    assert report.mean_T_finite == MeanFiniteness.UNDETERMINED
    assert report.nu == pytest.approx(1 / 6)


def test_classify_small_kappa():
    report = classify_regime(0.8, 0.4)
    assert report.instantaneous_exit == InstantaneousExit.RULED_OUT
    assert report.mean_T_finite == MeanFiniteness.YES
    assert report.nu == pytest.approx(0.85)


def test_classify_beyond_gate():
    report = classify_regime(1.5, 1.0)
    assert report.instantaneous_exit == InstantaneousExit.UNDETERMINED
    assert report.finite_exit == FiniteExit.ALMOST_SURE
    assert report.nu is None


def test_regime_report_record():
    record = classify_regime(1.5, 0.5).as_record()
    assert record["instantaneous_exit"] == "ruled_out"
    assert record["mean_T_finite"] == "undetermined"
    assert set(record) == {"alpha", "kappa", "instantaneous_exit", "finite_exit", "mean_T_finite", "nu"}


@pytest.mark.parametrize(
    "alpha, kappa, small, large",
    [
        (1.5, 0.5, IntegralVerdict.FINITE, IntegralVerdict.INFINITE),
        (1.5, 0.8, IntegralVerdict.INFINITE, IntegralVerdict.FINITE),
        (1.5, 1.0, IntegralVerdict.INFINITE, IntegralVerdict.FINITE),
        # kappa * alpha = 1 diverges at both ends
        (0.5, 2.0, IntegralVerdict.INFINITE, IntegralVerdict.INFINITE),
    ],
)
def test_integral_tests(alpha, kappa, small, large):
    assert integral_test_small_time(alpha, kappa) == small
    assert integral_test_large_time(alpha, kappa) == large


def test_tail_integral_matches_quadrature():
    value = tail_integral(1.5, 0.4, 0.0, 1.0, c=2.0)
    reference, _ = integrate.quad(lambda x: 2.0 * x ** (-0.6), 0.0, 1.0)
    assert value == pytest.approx(reference, rel=1e-6)

    value = tail_integral(1.5, 1.0, 1.0, math.inf)
    reference, _ = integrate.quad(lambda x: x ** (-1.5), 1.0, math.inf)
    assert value == pytest.approx(reference, rel=1e-6)


def test_tail_integral_log_case():
    assert tail_integral(1.0, 1.0, 1.0, math.e) == pytest.approx(1.0)
    assert tail_integral(1.0, 1.0, 0.0, 1.0) == math.inf


def test_tail_integral_validation():
    with pytest.raises(ParameterError):
        tail_integral(1.5, 0.5, 1.0, 0.5)


def test_relative_stability_norm():
    assert relative_stability_norm(5.0, 0.0) == pytest.approx(5.0)
    assert relative_stability_norm(4.0, 0.5) == pytest.approx(16.0)
    assert relative_stability_norm(1.0, 0.9) == pytest.approx(1.0)


def test_relative_stability_norm_gate():
    with pytest.raises(RegimeError):
        relative_stability_norm(1.0, 1.0)
    with pytest.raises(ParameterError):
        relative_stability_norm(0.0, 0.5)


def test_drift_passage_time():
    # b t = r t**kappa at t = (r / b)**(1 / (1 - kappa))
    assert drift_passage_time(1e-3, 0.0, 1.0) == pytest.approx(1e-3)
    assert drift_passage_time(2.0, 0.5, 4.0) == pytest.approx(0.25)
    with pytest.raises(ParameterError):
        drift_passage_time(1.0, 0.0, 0.0)
