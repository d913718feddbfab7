"""
Sample paths: Levy flights, their rescaled interpolations, and grid-sampled
stable (optionally drifted) processes.

Stable paths are built from exact increments: over a cell of length dt the
increment is dt**(1/alpha) times a standard stable draw, so the marginals on
the grid carry no discretization error. Only path functionals (running sups,
exit times) see the grid.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from distributions import PowerLawJumpParams, StableParams, jump_centering, powerlaw_jumps, stable_variates
from errors import ParameterError, StructuralError
from schemas import ParamsModel


class ModelTag(str, Enum):
    FLIGHT = "flight"
    INTERPOLATED_FLIGHT = "interpolated_flight"
    STABLE = "stable"
    STABLE_WITH_DRIFT = "stable_with_drift"


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing times starting at 0.

    The single time {0} is admitted so a degenerate path can be built by
    hand; the simulators all require at least one step.
    """

    times: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise StructuralError("a time grid needs at least the time 0")
        if not np.all(np.isfinite(times)):
            raise ParameterError("grid times must be finite")
        if times[0] != 0.0:
            raise ParameterError(f"grid must start at 0, got {times[0]}")
        if np.any(np.diff(times) <= 0.0):
            raise ParameterError("grid times must be strictly increasing")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)

    @classmethod
    def uniform(cls, horizon: float, steps: int) -> "TimeGrid":
        if horizon <= 0 or steps < 1:
            raise ParameterError("uniform grid needs horizon > 0 and steps >= 1")
        return cls(np.linspace(0.0, horizon, steps + 1))

    @classmethod
    def geometric(cls, t_min: float, t_max: float, steps: int) -> "TimeGrid":
        """0 followed by `steps` log-spaced times from t_min to t_max.

        Scaling by any integer power of the ratio maps the grid onto itself
        (apart from the ends), which keeps scaled comparisons consistent.
        """
        if not 0.0 < t_min < t_max or steps < 2:
            raise ParameterError("geometric grid needs 0 < t_min < t_max and steps >= 2")
        return cls(np.concatenate(([0.0], np.geomspace(t_min, t_max, steps))))

    @classmethod
    def integers(cls, n: int) -> "TimeGrid":
        return cls(np.arange(n + 1, dtype=float))

    def __len__(self) -> int:
        return self.times.size

    @property
    def steps(self) -> int:
        return self.times.size - 1

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def coarsen_indices(self, stride: int) -> np.ndarray:
        """0 plus every stride-th index counted back from the last one"""
        if stride < 1:
            raise ParameterError("stride must be >= 1")
        kept = np.arange(self.times.size - 1, 0, -stride)[::-1]
        return np.concatenate(([0], kept)).astype(int)

    def coarsen(self, stride: int) -> "TimeGrid":
        return TimeGrid(self.times[self.coarsen_indices(stride)])

    def scaled(self, factor: float) -> "TimeGrid":
        if factor <= 0:
            raise ParameterError("grid scale factor must be positive")
        return TimeGrid(self.times * factor)


@dataclass(frozen=True, eq=False)
class Path:
    grid: TimeGrid
    values: np.ndarray
    model_tag: ModelTag

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.grid.times.shape:
            raise StructuralError(
                f"{values.size} values for a grid of {len(self.grid)} times"
            )
        if values[0] != 0.0:
            raise ParameterError("every path starts at 0")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "model_tag", ModelTag(self.model_tag))

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def endpoint(self) -> float:
        return float(self.values[-1])

    def value_at(self, t):
        """Linear interpolation between grid points"""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0.0) or np.any(t_arr > self.grid.horizon):
            raise ParameterError("interpolation time outside the grid")
        out = np.interp(t_arr, self.times, self.values)
        return float(out) if out.ndim == 0 else out

    def coarsen(self, stride: int) -> "Path":
        """Sub-skeleton observed on the coarsened grid (same driving randomness)"""
        idx = self.grid.coarsen_indices(stride)
        return Path(TimeGrid(self.times[idx]), self.values[idx], self.model_tag)


class DriftParams(ParamsModel):
    """Stable process plus linear drift drift_b * t.

    stable=None is the degenerate scale-0 case: a deterministic pure drift.
    """

    drift_b: float
    stable: Optional[StableParams] = None

    @property
    def bounded_variation(self) -> bool:
        return self.stable is None or self.stable.alpha < 1.0


def walk_from_jumps(jumps) -> Path:
    jumps = np.asarray(jumps, dtype=float)
    if jumps.ndim != 1 or jumps.size == 0:
        raise ParameterError("a walk needs at least one jump")
    values = np.concatenate(([0.0], np.cumsum(jumps)))
    return Path(TimeGrid.integers(jumps.size), values, ModelTag.FLIGHT)


def simulate_walk(n: int, jump_params: PowerLawJumpParams, rng: np.random.Generator,
                  center: bool = False) -> Path:
    """Levy flight S_0 = 0, S_n = xi_1 + ... + xi_n on the grid {0, ..., n}.

    center=True subtracts the domain-of-attraction centering from every jump.
    """
    if n < 1:
        raise ParameterError(f"a walk needs n >= 1 steps, got {n}")
    jumps = powerlaw_jumps(jump_params, n, rng)
    if center:
        jumps = jumps - jump_centering(jump_params)
    return walk_from_jumps(jumps)


def rescale_walk(path: Path, alpha: float) -> Path:
    """Map S_j at step j to S_j / n**(1/alpha) at time j/n, n the walk length"""
    if path.model_tag != ModelTag.FLIGHT:
        raise StructuralError(f"rescale_walk needs a flight path, got {path.model_tag.value}")
    if not 0.0 < alpha < 2.0:
        raise ParameterError(f"alpha must lie in (0, 2), got {alpha}")
    n = path.grid.steps
    if n < 1:
        raise StructuralError("cannot rescale a walk with no steps")
    grid = TimeGrid(path.times / n)
    return Path(grid, path.values / n ** (1.0 / alpha), ModelTag.INTERPOLATED_FLIGHT)


def _stable_values(params: StableParams, grid: TimeGrid, rng: np.random.Generator) -> np.ndarray:
    if grid.steps < 1:
        raise StructuralError("a simulated path needs at least one grid step")
    dt = np.diff(grid.times)
    increments = dt ** (1.0 / params.alpha) * stable_variates(params, dt.size, rng)
    return np.concatenate(([0.0], np.cumsum(increments)))


def simulate_stable_path(params: StableParams, grid: TimeGrid, rng: np.random.Generator) -> Path:
    return Path(grid, _stable_values(params, grid, rng), ModelTag.STABLE)


def simulate_drifted_path(params: DriftParams, grid: TimeGrid, rng: np.random.Generator) -> Path:
    values = params.drift_b * grid.times
    if params.stable is not None:
        values = values + _stable_values(params.stable, grid, rng)
    elif grid.steps < 1:
        raise StructuralError("a simulated path needs at least one grid step")
    return Path(grid, values, ModelTag.STABLE_WITH_DRIFT)
