"""
Pydantic models: the shared frozen base for parameter types and the run
configuration documents, one model per experiment.
"""

from enum import Enum
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, model_validator

from errors import ParameterError

DEFAULT_CHUNK_SIZE = 64
MAX_SEED = 2**64 - 1


def describe_validation_error(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<document>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


class ParamsModel(BaseModel):
    """Frozen parameter value; invalid values raise ParameterError"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    def __init__(self, **data):
        try:
            super().__init__(**data)
        except ValidationError as exc:
            raise ParameterError(
                f"invalid {type(self).__name__}: {describe_validation_error(exc)}"
            ) from exc


# ============ Experiment configs ============
class ExperimentName(str, Enum):
    LIMIT_LAW = "limit_law"
    SCALING_COLLAPSE = "scaling_collapse"
    PHASE_DIAGRAM = "phase_diagram"
    RELATIVE_STABILITY = "relative_stability"
    SURVIVAL = "survival"
    TAIL_RECOVERY = "tail_recovery"
    WALK_CONVERGENCE = "walk_convergence"
    WALK_LIMIT_LAW = "walk_limit_law"
    SANDWICH = "sandwich"


class GridKind(str, Enum):
    UNIFORM = "uniform"
    GEOMETRIC = "geometric"


class RadiusLimit(str, Enum):
    SMALL = "small_r"
    LARGE = "large_r"


StableIndex = Annotated[float, Field(gt=0, lt=2)]
PositiveReal = Annotated[float, Field(gt=0)]


class ExperimentBase(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: int = Field(ge=0, le=MAX_SEED)
    n_reps: int = Field(gt=0)
    output_path: Optional[str] = None
    chunk_size: int = Field(DEFAULT_CHUNK_SIZE, gt=0)


class LimitLawConfig(ExperimentBase):
    experiment_name: Literal["limit_law"]
    alpha: StableIndex
    beta: float = Field(0.0, ge=-1, le=1)
    kappa: float = Field(0.0, ge=0)
    r: PositiveReal = 1.0
    y_reps: Optional[int] = Field(None, gt=0)  # defaults to n_reps
    grid_steps: int = Field(2**14, ge=8)
    horizon: PositiveReal = 50.0
    t_min_fraction: float = Field(2.0**-14, gt=0, lt=1)
    coarsen_stride: int = Field(4, ge=2)
    r_values: List[PositiveReal] = Field(default_factory=list)
    censoring_cap: float = Field(0.01, ge=0, le=1)


class ScalingCollapseConfig(ExperimentBase):
    experiment_name: Literal["scaling_collapse"]
    alpha: StableIndex
    beta: float = Field(0.0, ge=-1, le=1)
    lambda_values: List[PositiveReal] = Field(default_factory=lambda: [1.0 / 16.0, 16.0], min_length=1)
    grid_steps: int = Field(16, gt=0)


class PhaseDiagramConfig(ExperimentBase):
    experiment_name: Literal["phase_diagram"]
    alpha_grid: List[StableIndex] = Field(min_length=1)
    kappa_grid: List[Annotated[float, Field(ge=0)]] = Field(min_length=1)
    epsilon_grid: List[PositiveReal] = Field(min_length=1)
    beta: float = Field(0.0, ge=-1, le=1)
    r: PositiveReal = 1.0
    grid_steps: int = Field(1024, ge=2)
    grid_t_min: Optional[PositiveReal] = None  # defaults to min(epsilon_grid)
    grid_t_min_values: List[PositiveReal] = Field(default_factory=list)  # refinement sweep

    @model_validator(mode="after")
    def _grid_below_epsilons(self):
        smallest = min(self.epsilon_grid)
        if self.grid_t_min is not None and self.grid_t_min > smallest:
            raise ValueError("grid_t_min must not exceed the smallest epsilon")
        if any(t > smallest for t in self.grid_t_min_values):
            raise ValueError("grid_t_min_values must not exceed the smallest epsilon")
        return self


class RelativeStabilityConfig(ExperimentBase):
    experiment_name: Literal["relative_stability"]
    alpha: StableIndex
    beta: float = Field(0.0, ge=-1, le=1)
    scale: float = Field(1.0, ge=0)  # 0 suppresses the stable component
    drift_b: PositiveReal = 1.0
    kappa: float = Field(0.0, ge=0)
    limit: RadiusLimit = RadiusLimit.SMALL
    r_values: List[PositiveReal] = Field(min_length=1)
    grid_steps: int = Field(4096, ge=2)
    horizon_factor: float = Field(4.0, gt=1)
    t_min_fraction: float = Field(2.0**-10, gt=0, lt=1)

    @model_validator(mode="before")
    @classmethod
    def _default_radii(cls, data):
        if isinstance(data, dict) and "r_values" not in data:
            large = data.get("limit") in (RadiusLimit.LARGE, RadiusLimit.LARGE.value)
            data = {**data, "r_values": [1e2, 1e3, 1e4] if large else [1e-2, 1e-3, 1e-4]}
        return data

    @property
    def radii(self) -> List[float]:
        """r_values ordered toward the limit: decreasing for small_r, increasing for large_r"""
        return sorted(self.r_values, reverse=self.limit == RadiusLimit.SMALL)


class SurvivalConfig(ExperimentBase):
    experiment_name: Literal["survival"]
    alpha: StableIndex
    beta: float = Field(0.0, ge=-1, le=1)
    kappa: float = Field(0.0, ge=0)
    r: PositiveReal = 1.0
    horizon: PositiveReal = 50.0
    grid_steps: int = Field(4096, ge=2)
    grid_kind: GridKind = GridKind.UNIFORM
    t_min_fraction: float = Field(2.0**-12, gt=0, lt=1)  # geometric grids only
    t_points: int = Field(40, ge=2)
    terminal_threshold: float = Field(0.01, gt=0, lt=1)


class TailRecoveryConfig(ExperimentBase):
    experiment_name: Literal["tail_recovery"]
    alpha: float = Field(gt=0, le=2)
    balance_c: float = Field(0.5, ge=0, le=1)
    cutoff: PositiveReal = 1.0
    k: int = Field(1000, gt=0)
    k_values: List[Annotated[int, Field(gt=0)]] = Field(default_factory=list)
    tolerance: PositiveReal = 0.15

    @model_validator(mode="after")
    def _k_below_sample(self):
        if max([self.k, *self.k_values]) >= self.n_reps:
            raise ValueError("every k must be smaller than n_reps (the sample size)")
        return self


class WalkConvergenceConfig(ExperimentBase):
    experiment_name: Literal["walk_convergence"]
    alpha: StableIndex
    balance_c: float = Field(0.5, ge=0, le=1)
    n_values: List[Annotated[int, Field(gt=0)]] = Field(default_factory=lambda: [16, 64, 256, 1024], min_length=2)


class WalkLimitLawConfig(ExperimentBase):
    experiment_name: Literal["walk_limit_law"]
    alpha: StableIndex
    balance_c: float = Field(0.5, ge=0, le=1)
    kappa: float = Field(0.0, ge=0)
    r_values: List[PositiveReal] = Field(default_factory=lambda: [2.0, 8.0, 32.0], min_length=1)
    horizon: PositiveReal = 20.0  # in units of r**(1/nu) steps
    y_reps: Optional[int] = Field(None, gt=0)  # defaults to n_reps
    grid_steps: int = Field(4096, ge=8)
    t_min_fraction: float = Field(2.0**-14, gt=0, lt=1)


class SandwichCell(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: StableIndex
    kappa: float = Field(ge=0)
    r: PositiveReal


class SandwichConfig(ExperimentBase):
    experiment_name: Literal["sandwich"]
    cells: List[SandwichCell] = Field(min_length=1)
    beta: float = Field(0.0, ge=-1, le=1)
    horizon: PositiveReal = 10.0
    grid_steps: int = Field(1024, ge=2)
    grid_kind: GridKind = GridKind.GEOMETRIC
    t_min_fraction: float = Field(2.0**-12, gt=0, lt=1)


ExperimentConfig = Annotated[
    Union[
        LimitLawConfig,
        ScalingCollapseConfig,
        PhaseDiagramConfig,
        RelativeStabilityConfig,
        SurvivalConfig,
        TailRecoveryConfig,
        WalkConvergenceConfig,
        WalkLimitLawConfig,
        SandwichConfig,
    ],
    Field(discriminator="experiment_name"),
]

experiment_config_adapter = TypeAdapter(ExperimentConfig)
