"""
Samplers and tail formulas for stable laws and power-law (Pareto) jumps.

Stable draws use the Chambers-Mallows-Stuck transform in the S1
parametrization (scipy.stats.levy_stable's default). The uniform and
exponential deviates are explicit arguments, so every sampler here is a pure
function of its inputs; the *_variates helpers draw the deviates from a
numpy Generator and delegate.
"""

import math

import numpy as np
from pydantic import Field
from scipy import special

from errors import DomainError, ParameterError, UnsupportedParametrizationError
from schemas import ParamsModel

HALF_PI = math.pi / 2.0


class StableParams(ParamsModel):
    """Index, skew and scale of an S1 stable law.

    alpha = 2 is the Gaussian validation mode (variance 2 * scale**2).
    """

    alpha: float = Field(gt=0, le=2)
    beta: float = Field(0.0, ge=-1, le=1)
    scale: float = Field(1.0, gt=0)

    @property
    def is_gaussian(self) -> bool:
        return self.alpha == 2.0


class PowerLawJumpParams(ParamsModel):
    """Exact Pareto jump law: P(|xi| > x) = (x / cutoff) ** -alpha, x >= cutoff"""

    alpha: float = Field(gt=0, le=2)
    balance_c: float = Field(0.5, ge=0, le=1)
    cutoff: float = Field(1.0, gt=0)


def balance_to_skew(balance_c: float) -> float:
    if not 0.0 <= balance_c <= 1.0:
        raise ParameterError(f"balance_c must lie in [0, 1], got {balance_c}")
    return 2.0 * balance_c - 1.0


def skew_to_balance(beta: float) -> float:
    if not -1.0 <= beta <= 1.0:
        raise ParameterError(f"beta must lie in [-1, 1], got {beta}")
    return (beta + 1.0) / 2.0


def require_supported(alpha: float, beta: float) -> None:
    if alpha == 1.0 and beta != 0.0:
        raise UnsupportedParametrizationError(
            "alpha = 1 with beta != 0 needs logarithmic centering and is not supported"
        )


def _as_scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def sample_stable(params: StableParams, u, e):
    """Chambers-Mallows-Stuck transform of (u, e) into S1 stable draws.

    u: uniform deviate(s) strictly inside (-pi/2, pi/2)
    e: exponential(1) deviate(s), strictly positive
    Scalars in give a float out; arrays in give an array of the same shape.
    """
    u_arr = np.asarray(u, dtype=float)
    e_arr = np.asarray(e, dtype=float)
    if np.any(np.abs(u_arr) >= HALF_PI):
        raise ParameterError("uniform deviate must lie strictly inside (-pi/2, pi/2)")
    if np.any(e_arr <= 0.0):
        raise ParameterError("exponential deviate must be positive")

    alpha, beta = params.alpha, params.beta
    if params.is_gaussian:
        x = 2.0 * np.sqrt(e_arr) * np.sin(u_arr)
    elif alpha == 1.0:
        require_supported(alpha, beta)
        x = np.tan(u_arr)
    else:
        zeta = beta * math.tan(HALF_PI * alpha)
        shift = math.atan(zeta) / alpha
        factor = (1.0 + zeta * zeta) ** (1.0 / (2.0 * alpha))
        head = np.sin(alpha * (u_arr + shift)) / np.cos(u_arr) ** (1.0 / alpha)
        # rounding can push the cosine a hair below zero near the endpoints
        tail_base = np.maximum(np.cos(u_arr - alpha * (u_arr + shift)), 0.0) / e_arr
        x = factor * head * tail_base ** ((1.0 - alpha) / alpha)

    return _as_scalar_or_array(params.scale * x)


def stable_variates(params: StableParams, size, rng: np.random.Generator) -> np.ndarray:
    low = np.nextafter(-HALF_PI, 0.0)
    # the affine map inside uniform() can round up onto the endpoint
    u = np.minimum(rng.uniform(low, HALF_PI, size=size), np.nextafter(HALF_PI, 0.0))
    e = rng.standard_exponential(size=size)
    # standard_exponential can return exactly 0 with probability ~2**-53
    e = np.maximum(e, np.finfo(float).tiny)
    return np.asarray(sample_stable(params, u, e))


def sample_powerlaw_jump(params: PowerLawJumpParams, u_mag, u_sign):
    """Pareto magnitude cutoff * u_mag ** (-1/alpha), positive iff u_sign < balance_c"""
    u_mag_arr = np.asarray(u_mag, dtype=float)
    u_sign_arr = np.asarray(u_sign, dtype=float)
    if np.any((u_mag_arr <= 0.0) | (u_mag_arr >= 1.0)):
        raise ParameterError("magnitude deviate must lie in (0, 1)")
    if np.any((u_sign_arr <= 0.0) | (u_sign_arr >= 1.0)):
        raise ParameterError("sign deviate must lie in (0, 1)")

    magnitude = params.cutoff * u_mag_arr ** (-1.0 / params.alpha)
    sign = np.where(u_sign_arr < params.balance_c, 1.0, -1.0)
    return _as_scalar_or_array(sign * magnitude)


def powerlaw_jumps(params: PowerLawJumpParams, size, rng: np.random.Generator) -> np.ndarray:
    # Generator.random() is [0, 1); map 0 to the open interval
    u_mag = 1.0 - rng.random(size=size)
    u_sign = rng.random(size=size)
    u_sign = np.where(u_sign == 0.0, 0.5, u_sign)
    return np.asarray(sample_powerlaw_jump(params, u_mag, u_sign))


def powerlaw_tail(params: PowerLawJumpParams, x: float) -> float:
    if x < params.cutoff:
        return 1.0
    return (x / params.cutoff) ** (-params.alpha)


def jump_mean(params: PowerLawJumpParams) -> float:
    """E xi: finite for alpha > 1, zero by symmetry when balance_c = 0.5"""
    alpha = params.alpha
    if params.balance_c == 0.5:
        return 0.0
    if alpha <= 1.0:
        raise UnsupportedParametrizationError(
            f"jumps with alpha={alpha} <= 1 have no mean unless balance_c = 0.5"
        )
    mean_magnitude = params.cutoff * alpha / (alpha - 1.0)
    return (2.0 * params.balance_c - 1.0) * mean_magnitude


def jump_centering(params: PowerLawJumpParams) -> float:
    """Per-step centering A_n / n for the domain-of-attraction limit.

    Zero for alpha < 1, the mean of xi for alpha > 1. alpha = 1 is only
    admitted symmetric; otherwise the centering is logarithmic.
    """
    alpha = params.alpha
    if alpha < 1.0:
        return 0.0
    if alpha == 1.0:
        if params.balance_c != 0.5:
            raise UnsupportedParametrizationError(
                "alpha = 1 jumps need logarithmic centering unless balance_c = 0.5"
            )
        return 0.0
    return jump_mean(params)


def attraction_scale(alpha: float) -> float:
    """S1 scale of the limit of S_n / n**(1/alpha) for unit-cutoff Pareto jumps.

    The limit has tail P(|X| > x) ~ x**-alpha, matching C_alpha * sigma**alpha.
    """
    if not 0.0 < alpha < 2.0:
        raise ParameterError(f"alpha must lie in (0, 2), got {alpha}")
    if alpha == 1.0:
        c_alpha = 2.0 / math.pi
    else:
        c_alpha = (1.0 - alpha) / (special.gamma(2.0 - alpha) * math.cos(HALF_PI * alpha))
    return float(c_alpha ** (-1.0 / alpha))


def stable_levy_tail(x: float, alpha: float, c_plus: float, c_minus: float):
    """Levy measure tails (c+ x^-alpha, c- x^-alpha, (c+ + c-) x^-alpha)"""
    if not 0.0 < alpha < 2.0:
        raise ParameterError(f"alpha must lie in (0, 2), got {alpha}")
    if c_plus < 0.0 or c_minus < 0.0 or c_plus + c_minus <= 0.0:
        raise ParameterError("tail constants must be nonnegative with a positive sum")
    if x <= 0.0:
        raise DomainError(f"the Levy tail is singular at 0 and undefined below it, got x={x}")
    decay = x ** (-alpha)
    return c_plus * decay, c_minus * decay, (c_plus + c_minus) * decay
