"""
Closed-form regime classification for stable passage times.

With Levy tail c * x**-alpha the small-time and large-time integral tests
reduce to integrals of x**(-kappa * alpha); everything here is arithmetic on
(alpha, kappa). The boundary kappa * alpha = 1 sits on the divergent side of
both tests since the integral of 1/x diverges at either end.
"""

import math
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict

from errors import ParameterError, RegimeError


class InstantaneousExit(str, Enum):
    RULED_OUT = "ruled_out"
    UNDETERMINED = "undetermined"


class FiniteExit(str, Enum):
    ALMOST_SURE = "almost_sure"


class MeanFiniteness(str, Enum):
    YES = "yes"
    UNDETERMINED = "undetermined"


class IntegralVerdict(str, Enum):
    FINITE = "finite"
    INFINITE = "infinite"


class RegimeReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha: float
    kappa: float
    instantaneous_exit: InstantaneousExit
    finite_exit: FiniteExit = FiniteExit.ALMOST_SURE
    mean_T_finite: MeanFiniteness
    nu: Optional[float] = None

    def as_record(self) -> dict:
        return self.model_dump(mode="json")


def _check_stable_index(alpha: float, kappa: float) -> None:
    if not 0.0 < alpha < 2.0:
        raise ParameterError(f"alpha must lie in (0, 2), got {alpha}")
    if kappa < 0.0:
        raise ParameterError(f"kappa must be nonnegative, got {kappa}")


def nu_exponent(alpha: float, kappa: float) -> float:
    _check_stable_index(alpha, kappa)
    if kappa >= 1.0 / alpha:
        raise RegimeError(
            f"the limit law needs kappa < 1/alpha (here kappa={kappa}, 1/alpha={1.0 / alpha:.6g}); "
            "otherwise the sup functional Y is not finite"
        )
    return 1.0 / alpha - kappa


def tail_integral(alpha: float, kappa: float, lower: float, upper: float, c: float = 1.0) -> float:
    """Integral of c * x**(-kappa*alpha) over [lower, upper], math.inf when divergent"""
    if not 0.0 <= lower < upper:
        raise ParameterError("need 0 <= lower < upper")
    if c <= 0.0:
        raise ParameterError("tail constant must be positive")
    p = kappa * alpha
    if p == 1.0:
        if lower == 0.0 or math.isinf(upper):
            return math.inf
        return c * (math.log(upper) - math.log(lower))
    if lower == 0.0 and p > 1.0:
        return math.inf
    if math.isinf(upper):
        if p < 1.0:
            return math.inf
        return c * lower ** (1.0 - p) / (p - 1.0)
    return c * (upper ** (1.0 - p) - lower ** (1.0 - p)) / (1.0 - p)


def integral_test_small_time(alpha: float, kappa: float) -> IntegralVerdict:
    """Finiteness of the integral over (0, 1] of the Levy tail at x**kappa"""
    _check_stable_index(alpha, kappa)
    value = tail_integral(alpha, kappa, 0.0, 1.0)
    return IntegralVerdict.FINITE if math.isfinite(value) else IntegralVerdict.INFINITE


def integral_test_large_time(alpha: float, kappa: float) -> IntegralVerdict:
    """Finiteness of the integral over [1, inf) of the Levy tail at x**kappa"""
    _check_stable_index(alpha, kappa)
    value = tail_integral(alpha, kappa, 1.0, math.inf)
    return IntegralVerdict.FINITE if math.isfinite(value) else IntegralVerdict.INFINITE


def classify_regime(alpha: float, kappa: float) -> RegimeReport:
    _check_stable_index(alpha, kappa)
    ruled_out = kappa < 0.5 or integral_test_small_time(alpha, kappa) == IntegralVerdict.FINITE
    return RegimeReport(
        alpha=alpha,
        kappa=kappa,
        instantaneous_exit=InstantaneousExit.RULED_OUT if ruled_out else InstantaneousExit.UNDETERMINED,
        # small-time limsup is infinite for kappa < 1/alpha, large-time limsup otherwise
        finite_exit=FiniteExit.ALMOST_SURE,
        mean_T_finite=MeanFiniteness.YES if kappa < 0.5 else MeanFiniteness.UNDETERMINED,
        nu=1.0 / alpha - kappa if kappa < 1.0 / alpha else None,
    )


def relative_stability_norm(r: float, kappa: float) -> float:
    if r <= 0.0:
        raise ParameterError(f"r must be positive, got {r}")
    if not 0.0 <= kappa < 1.0:
        raise RegimeError(f"relative stability norming needs 0 <= kappa < 1, got kappa={kappa}")
    return r ** (1.0 / (1.0 - kappa))


def drift_passage_time(r: float, kappa: float, drift_b: float) -> float:
    """Exit time of the pure drift path b*t from |x| <= r*t**kappa: (r/b)**(1/(1-kappa))"""
    if drift_b <= 0.0:
        raise ParameterError(f"drift must be positive, got {drift_b}")
    return relative_stability_norm(r / drift_b, kappa)
