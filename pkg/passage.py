"""
Exit detection from the regions {(t, x): t > 0, |x| <= r * t**kappa}.

Exits are declared at the first observed time where |x| / t**kappa > r;
excursions between grid points are invisible, so grid exit times never
undershoot the exit time of the observed skeleton. t = 0 is never tested.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np
from pydantic import Field

from errors import ParameterError, StructuralError
from paths import ModelTag, Path
from schemas import ParamsModel


class Region(ParamsModel):
    r: float = Field(gt=0)
    kappa: float = Field(0.0, ge=0)

    def boundary(self, t):
        t_arr = np.asarray(t, dtype=float)
        out = self.r * t_arr ** self.kappa
        return float(out) if out.ndim == 0 else out


class Side(str, Enum):
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class ExitRecord:
    """One replication's passage out of a region (or its censoring).

    For walks exit_time is the step index. Censored records sit at the
    horizon with zero overshoot and no side.

    "Outside" means |x| / t**kappa > r, evaluated as that ratio. Within one
    ulp of the boundary this can differ from |x| > r * t**kappa; a censored
    record guarantees only that every observed ratio is <= r, and an exit
    position only that its ratio is > r.
    """

    exit_time: float
    exit_position: float
    overshoot: float
    side: Optional[Side]
    censored: bool
    horizon: float

    def __post_init__(self):
        if self.horizon <= 0:
            raise ParameterError("horizon must be positive")
        if self.exit_time < 0:
            raise ParameterError("exit time must be nonnegative")
        if self.censored:
            if self.exit_time != self.horizon:
                raise ParameterError("a censored record sits at its horizon")
            if self.side is not None or self.overshoot != 0.0:
                raise ParameterError("a censored record has no side and no overshoot")
        else:
            if self.side is None:
                raise ParameterError("an exit record needs a side")
            if not self.overshoot > 0.0:
                raise ParameterError("an exit record has positive overshoot")
            if self.exit_time > self.horizon:
                raise ParameterError("exit after the horizon")
        if self.side is not None:
            object.__setattr__(self, "side", Side(self.side))

    @property
    def time_or_inf(self) -> float:
        return math.inf if self.censored else self.exit_time


def _first_exit(times: np.ndarray, values: np.ndarray, region: Region) -> ExitRecord:
    positive = times[1:]
    observed = values[1:]
    # same comparison as running_sup, so the sandwich inclusions hold exactly
    outside = np.abs(observed) / positive ** region.kappa > region.r
    horizon = float(times[-1])
    if not outside.any():
        return ExitRecord(
            exit_time=horizon,
            exit_position=float(values[-1]),
            overshoot=0.0,
            side=None,
            censored=True,
            horizon=horizon,
        )
    i = int(np.argmax(outside))
    position = float(observed[i])
    bound = region.boundary(float(positive[i]))
    # the ratio can round above r while the difference rounds to zero
    overshoot = max(abs(position) - bound, float(np.spacing(bound)))
    return ExitRecord(
        exit_time=float(positive[i]),
        exit_position=position,
        overshoot=overshoot,
        side=Side.UPPER if position > 0 else Side.LOWER,
        censored=False,
        horizon=horizon,
    )


def first_exit_walk(path: Path, region: Region) -> ExitRecord:
    """Least n >= 1 with |S_n| > r * n**kappa, censored at the walk length"""
    if path.model_tag != ModelTag.FLIGHT:
        raise StructuralError(f"first_exit_walk needs a flight path, got {path.model_tag.value}")
    if path.grid.steps < 1:
        raise StructuralError("the walk has no steps")
    return _first_exit(path.times, path.values, region)


def first_exit_grid(path: Path, region: Region) -> ExitRecord:
    """Least grid time t_i > 0 with |X_{t_i}| > r * t_i**kappa, censored at the last time"""
    if path.model_tag == ModelTag.FLIGHT:
        raise StructuralError("use first_exit_walk for flight paths")
    if path.grid.steps < 1:
        raise StructuralError("the path has no positive grid time")
    return _first_exit(path.times, path.values, region)


def running_sup(path: Path, kappa: float) -> np.ndarray:
    """sup over grid times 0 < s <= t_i of |X_s| / s**kappa, one entry per t_i > 0"""
    if kappa < 0:
        raise ParameterError(f"kappa must be nonnegative, got {kappa}")
    if path.grid.steps < 1:
        raise StructuralError("running sup needs a positive time point")
    ratios = np.abs(path.values[1:]) / path.times[1:] ** kappa
    return np.maximum.accumulate(ratios)


def sandwich_violations(path: Path, region: Region) -> int:
    """Grid times where {T > t} ⊆ {sup <= r} ⊆ {T >= t} fails; always 0"""
    if path.model_tag == ModelTag.FLIGHT:
        record = first_exit_walk(path, region)
    else:
        record = first_exit_grid(path, region)
    times = path.times[1:]
    sup_below = running_sup(path, region.kappa) <= region.r
    survives = record.time_or_inf > times
    reached = record.time_or_inf >= times
    first = survives & ~sup_below
    second = sup_below & ~reached
    return int(np.count_nonzero(first | second))


@dataclass(frozen=True, eq=False)
class SurvivalCurve:
    times: np.ndarray
    survival: np.ndarray
    flagged: np.ndarray  # censored records were dropped at these times
    at_risk: np.ndarray  # records entering the estimate at each time

    @property
    def any_flagged(self) -> bool:
        return bool(self.flagged.any())


def survival_curve(exit_records: Iterable[ExitRecord], t_grid: Sequence[float]) -> SurvivalCurve:
    """Fraction of records with exit_time > t for each t in t_grid.

    A censored record counts as surviving up to its horizon; beyond it the
    record is dropped from the estimate and that time is flagged. Times where
    every record has been dropped give NaN.
    """
    records = list(exit_records)
    if not records:
        raise StructuralError("survival curve of an empty record collection")
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or np.any(np.diff(t) <= 0.0):
        raise ParameterError("t_grid must be a nonempty increasing sequence")

    exit_times = np.array([rec.exit_time for rec in records])
    censored = np.array([rec.censored for rec in records])

    # a censored record is known to survive through its own horizon
    alive = np.where(censored[None, :], t[:, None] <= exit_times[None, :], exit_times[None, :] > t[:, None])
    dropped = censored[None, :] & (t[:, None] > exit_times[None, :])
    at_risk = (~dropped).sum(axis=1)
    survivors = (alive & ~dropped).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        survival = np.where(at_risk > 0, survivors / np.maximum(at_risk, 1), np.nan)
    return SurvivalCurve(
        times=t,
        survival=survival,
        flagged=dropped.any(axis=1),
        at_risk=at_risk,
    )
