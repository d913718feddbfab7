"""
Replication engine and the verification experiments.

Every replication draws from its own generator keyed by
(seed, family, replication), so a report depends only on the config, never
on the worker count or on how replications are chunked across workers.
Families keep independent samples inside one experiment apart.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from itertools import product
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from distributions import (
    PowerLawJumpParams,
    StableParams,
    attraction_scale,
    balance_to_skew,
    jump_centering,
    powerlaw_jumps,
    powerlaw_tail,
    require_supported,
    stable_variates,
)
from errors import CensoringError, EstimatorError, NumericalError, ParameterError, RegimeError
from passage import (
    ExitRecord,
    Region,
    first_exit_grid,
    first_exit_walk,
    running_sup,
    sandwich_violations,
    survival_curve,
)
from paths import (
    DriftParams,
    Path,
    TimeGrid,
    rescale_walk,
    simulate_drifted_path,
    simulate_stable_path,
    simulate_walk,
)
from schemas import (
    ExperimentName,
    GridKind,
    LimitLawConfig,
    PhaseDiagramConfig,
    RadiusLimit,
    RelativeStabilityConfig,
    SandwichConfig,
    ScalingCollapseConfig,
    SurvivalConfig,
    TailRecoveryConfig,
    WalkConvergenceConfig,
    WalkLimitLawConfig,
)
from theory import classify_regime, drift_passage_time, nu_exponent

logger = logging.getLogger(__name__)

KS_LEVEL = 0.05
KS_SAFETY_FACTOR = 2.0
HIGH_CENSORING_FRACTION = 0.5
MAIN_GROUP = "main"
RULED_OUT_CEILING = 0.02
INSTANT_EXIT_FLOOR = 0.95
INSTANT_EXIT_KAPPA_ALPHA = 1.5


# ============ Empirical distributions and statistics ============
@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    values: np.ndarray  # sorted ascending
    censored: int = 0

    def __post_init__(self):
        values = np.sort(np.asarray(self.values, dtype=float).ravel())
        if values.size == 0:
            raise ParameterError("an empirical distribution needs at least one value")
        if np.isnan(values).any():
            raise ParameterError("NaN in sample")
        if self.censored < 0:
            raise ParameterError("censoring count must be nonnegative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, values, censored: int = 0) -> "EmpiricalDistribution":
        return cls(values=values, censored=censored)

    @property
    def size(self) -> int:
        return self.values.size


def ks_distance(a: EmpiricalDistribution, b: EmpiricalDistribution) -> float:
    """Exact two-sample KS statistic sup_x |F_a(x) - F_b(x)|.

    Both step functions are evaluated at every sample point of the merged
    sample (searchsorted is the vectorized merge); the sup is attained there.
    """
    if a.censored or b.censored:
        raise CensoringError("KS distance is undefined for samples with censored mass")
    merged = np.concatenate((a.values, b.values))
    cdf_a = np.searchsorted(a.values, merged, side="right") / a.size
    cdf_b = np.searchsorted(b.values, merged, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_critical_value(n: int, m: int, level: float = KS_LEVEL) -> float:
    """Asymptotic two-sample critical value c(level) * sqrt((n + m) / (n m))"""
    if n < 1 or m < 1:
        raise ParameterError("sample sizes must be positive")
    return float(stats.kstwobign.isf(level) * math.sqrt((n + m) / (n * m)))


def ks_threshold(n: int, m: int) -> float:
    return KS_SAFETY_FACTOR * ks_critical_value(n, m)


def hill_estimator(sample: EmpiricalDistribution, k: int) -> float:
    """k / sum_{i=1..k} log(x_(n-i+1) / x_(n-k)), descending order statistics"""
    x = sample.values
    n = x.size
    if not 1 <= k < n:
        raise ParameterError(f"Hill estimator needs 1 <= k < n, got k={k}, n={n}")
    if x[0] <= 0.0:
        raise ParameterError("Hill estimator needs positive values")
    threshold = x[n - k - 1]
    total = float(np.sum(np.log(x[n - k:] / threshold)))
    if total <= 0.0:
        raise EstimatorError("the top k order statistics are all equal; tail index undefined")
    return k / total


def binomial_half_width(p: float, n: int, level: float = 0.95) -> float:
    z = stats.norm.ppf(0.5 + level / 2.0)
    return float(z * math.sqrt(p * (1.0 - p) / n))


# ============ Replication engine ============
def replication_rng(seed: int, replication: int, family: int = 0) -> np.random.Generator:
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(family, replication))
    return np.random.Generator(np.random.PCG64(sequence))


def _run_chunk(task: Callable, seed: int, family: int, start: int, stop: int) -> list:
    return [task(replication_rng(seed, rep, family), rep) for rep in range(start, stop)]


def run_replications(task: Callable, n_reps: int, seed: int, family: int = 0,
                     workers: int = 1, chunk_size: int = 64) -> list:
    """Run task(rng, rep) for rep in range(n_reps); results in replication order"""
    bounds = [(start, min(start + chunk_size, n_reps)) for start in range(0, n_reps, chunk_size)]
    if workers == 1:
        chunks = [_run_chunk(task, seed, family, start, stop) for start, stop in bounds]
    else:
        chunks = Parallel(n_jobs=workers)(
            delayed(_run_chunk)(task, seed, family, start, stop) for start, stop in bounds
        )
    return [item for chunk in chunks for item in chunk]


def _require_finite(path: Path, rep: int) -> Path:
    if not np.all(np.isfinite(path.values)):
        raise NumericalError("non-finite path value", replication=rep)
    return path


# ============ Replication tasks (module level so joblib can pickle them) ============
def _endpoint_task(params: StableParams, grid: TimeGrid, rng, rep) -> float:
    return _require_finite(simulate_stable_path(params, grid, rng), rep).endpoint


def _grid_exit_task(params: StableParams, grid: TimeGrid, region: Region, rng, rep) -> ExitRecord:
    return first_exit_grid(_require_finite(simulate_stable_path(params, grid, rng), rep), region)


def _refined_exit_task(params: StableParams, grid: TimeGrid, region: Region, stride: int, rng, rep):
    path = _require_finite(simulate_stable_path(params, grid, rng), rep)
    return first_exit_grid(path, region), first_exit_grid(path.coarsen(stride), region)


def _sup_task(params: StableParams, grid: TimeGrid, kappa: float, stride: int, rng, rep):
    path = _require_finite(simulate_stable_path(params, grid, rng), rep)
    sup = running_sup(path, kappa)
    coarse_sup = running_sup(path.coarsen(stride), kappa)
    return float(sup[-1]), float(coarse_sup[-1]), bool(sup[0] == sup[-1])


def _drift_exit_task(params: DriftParams, grid: TimeGrid, region: Region, rng, rep) -> ExitRecord:
    return first_exit_grid(_require_finite(simulate_drifted_path(params, grid, rng), rep), region)


def _walk_endpoint_task(jump_params: PowerLawJumpParams, n: int, alpha: float, rng, rep) -> float:
    walk = simulate_walk(n, jump_params, rng, center=True)
    if not np.all(np.isfinite(walk.values)):
        raise NumericalError("non-finite walk value", replication=rep)
    return rescale_walk(walk, alpha).value_at(1.0)


def _walk_exit_task(jump_params: PowerLawJumpParams, steps: int, region: Region, rng, rep) -> ExitRecord:
    walk = simulate_walk(steps, jump_params, rng, center=True)
    if not np.all(np.isfinite(walk.values)):
        raise NumericalError("non-finite walk value", replication=rep)
    return first_exit_walk(walk, region)


def _sandwich_task(params: StableParams, grid: TimeGrid, region: Region, rng, rep):
    path = _require_finite(simulate_stable_path(params, grid, rng), rep)
    return sandwich_violations(path, region), first_exit_grid(path, region).censored


# ============ Reports ============
@dataclass
class ExperimentReport:
    experiment: str
    rows: List[dict]
    summary: dict
    records: Dict[str, List[ExitRecord]] = field(default_factory=dict)

    @property
    def censored(self) -> int:
        return sum(rec.censored for group in self.records.values() for rec in group)


def _group_label(prefix: str, value: float) -> str:
    return f"{prefix}_{value:g}"


def _snap(values: np.ndarray, lattice: np.ndarray) -> np.ndarray:
    """Round each value up to the next lattice time, capped at the last one.

    The relative slack absorbs the last-bit error of rescaled grid times.
    """
    idx = np.searchsorted(lattice, np.asarray(values) * (1.0 - 1e-12), side="left")
    return lattice[np.minimum(idx, lattice.size - 1)]


def _exit_times(records: Sequence[ExitRecord]) -> np.ndarray:
    return np.array([rec.exit_time for rec in records])


def _make_grid(kind: GridKind, horizon: float, steps: int, t_min_fraction: float) -> TimeGrid:
    if kind == GridKind.GEOMETRIC:
        return TimeGrid.geometric(horizon * t_min_fraction, horizon, steps)
    return TimeGrid.uniform(horizon, steps)


# ============ Experiments ============
def run_limit_law(config: LimitLawConfig, workers: int = 1) -> ExperimentReport:
    """Compare T_kappa(r) / r**(1/nu) with Y**(-1/nu), Y the sup of |S_t|/t**kappa on (0, 1].

    Both samples are snapped onto the same geometric lattice and truncated at
    the common horizon, which keeps the comparison exact in law on the grid.
    """
    nu = nu_exponent(config.alpha, config.kappa)
    params = StableParams(alpha=config.alpha, beta=config.beta)
    stride = config.coarsen_stride
    n_t = config.n_reps
    n_y = config.y_reps or config.n_reps
    logger.info("limit_law alpha=%g kappa=%g r=%g nu=%g n_t=%d n_y=%d grid=%d",
                config.alpha, config.kappa, config.r, nu, n_t, n_y, config.grid_steps)

    base_grid = TimeGrid.geometric(config.horizon * config.t_min_fraction, config.horizon, config.grid_steps)
    y_grid = TimeGrid.geometric(config.t_min_fraction, 1.0, config.grid_steps)
    lattice = base_grid.times[1:]
    coarse_lattice = base_grid.coarsen(stride).times[1:]

    def passage_sample(r: float, family: int):
        norm = r ** (1.0 / nu)
        task = partial(_refined_exit_task, params, base_grid.scaled(norm), Region(r=r, kappa=config.kappa), stride)
        out = run_replications(task, n_t, config.seed, family, workers, config.chunk_size)
        fine = [rec for rec, _ in out]
        coarse = [rec for _, rec in out]
        censored = sum(rec.censored for rec in fine)
        if censored > config.censoring_cap * n_t:
            raise CensoringError(
                f"{censored} of {n_t} replications censored at r={r:g}, above the cap of "
                f"{config.censoring_cap:.2%}; increase horizon"
            )
        return fine, coarse, _exit_times(fine) / norm, _exit_times(coarse) / norm, censored

    fine, _, t_scaled, t_coarse, censored = passage_sample(config.r, family=0)

    y_out = run_replications(partial(_sup_task, params, y_grid, config.kappa, stride),
                             n_y, config.seed, 1, workers, config.chunk_size)
    y_fine = np.array([y for y, _, _ in y_out])
    y_coarse = np.array([y for _, y, _ in y_out])
    first_point = float(np.mean([flag for _, _, flag in y_out]))
    with np.errstate(divide="ignore"):
        inv_fine = y_fine ** (-1.0 / nu)
        inv_coarse = y_coarse ** (-1.0 / nu)

    t_dist = EmpiricalDistribution.from_values(_snap(t_scaled, lattice))
    ks = ks_distance(t_dist, EmpiricalDistribution.from_values(_snap(inv_fine, lattice)))
    ks_coarse = ks_distance(
        EmpiricalDistribution.from_values(_snap(t_coarse, coarse_lattice)),
        EmpiricalDistribution.from_values(_snap(inv_coarse, coarse_lattice)),
    )
    ks_raw = ks_distance(
        EmpiricalDistribution.from_values(np.minimum(t_scaled, config.horizon)),
        EmpiricalDistribution.from_values(np.minimum(inv_fine, config.horizon)),
    )
    threshold = ks_threshold(n_t, n_y)

    def row(comparison, r, steps, value, n_b, cens, unprojected=None):
        return {
            "comparison": comparison,
            "r": r,
            "grid_steps": steps,
            "ks": value,
            "ks_unprojected": unprojected,
            "ks_threshold": ks_threshold(n_t, n_b),
            "passed": value <= ks_threshold(n_t, n_b),
            "n_a": n_t,
            "n_b": n_b,
            "censored": cens,
            "nu": nu,
        }

    rows = [
        row("limit_law", config.r, config.grid_steps, ks, n_y, censored, ks_raw),
        row("limit_law_coarse", config.r, len(coarse_lattice), ks_coarse, n_y, censored),
    ]
    records = {MAIN_GROUP: fine}

    for i, r in enumerate(config.r_values):
        other, _, other_scaled, _, other_censored = passage_sample(r, family=2 + i)
        value = ks_distance(EmpiricalDistribution.from_values(_snap(other_scaled, lattice)), t_dist)
        rows.append(row("scaling_oracle", r, config.grid_steps, value, n_t, other_censored))
        records[_group_label("r", r)] = other

    summary = {
        "ks_statistic": ks,
        "ks_threshold": threshold,
        "passed": ks <= threshold,
        "ks_coarse": ks_coarse,
        "ks_refinement_gap": ks - ks_coarse,
        "ks_unprojected": ks_raw,
        "n_effective": n_t - censored,
        "censored": censored,
        "nu": nu,
        "samples_paths": n_t * (1 + len(config.r_values)) + n_y,
        "y_first_point_fraction": first_point,
    }
    logger.info("limit_law ks=%.5f (threshold %.5f) coarse=%.5f", ks, threshold, ks_coarse)
    return ExperimentReport(ExperimentName.LIMIT_LAW.value, rows, summary, records)


def run_scaling_collapse(config: ScalingCollapseConfig, workers: int = 1) -> ExperimentReport:
    params = StableParams(alpha=config.alpha, beta=config.beta)
    n = config.n_reps
    logger.info("scaling_collapse alpha=%g lambdas=%s n=%d", config.alpha, config.lambda_values, n)

    unit_grid = TimeGrid.uniform(1.0, config.grid_steps)
    base = run_replications(partial(_endpoint_task, params, unit_grid), n, config.seed, 0, workers, config.chunk_size)
    base_dist = EmpiricalDistribution.from_values(base)
    threshold = ks_threshold(n, n)

    rows = []
    for i, lam in enumerate(config.lambda_values):
        grid = TimeGrid.uniform(lam, config.grid_steps)
        draws = run_replications(partial(_endpoint_task, params, grid), n, config.seed, i + 1, workers, config.chunk_size)
        scaled = np.asarray(draws) * lam ** (-1.0 / config.alpha)
        ks = ks_distance(EmpiricalDistribution.from_values(scaled), base_dist)
        rows.append({"lambda": lam, "ks": ks, "ks_threshold": threshold, "passed": ks <= threshold, "n": n})
        logger.info("scaling_collapse lambda=%g ks=%.5f", lam, ks)

    summary = {
        "alpha": config.alpha,
        "max_ks": max(row["ks"] for row in rows),
        "ks_threshold": threshold,
        "passed": all(row["passed"] for row in rows),
    }
    return ExperimentReport(ExperimentName.SCALING_COLLAPSE.value, rows, summary)


def _phase_grid(t_min: float, t_max: float, steps: int, base_t_min: float) -> TimeGrid:
    """Geometric grid on [t_min, t_max] with the log spacing of the base grid"""
    if t_min >= t_max:
        t_min = t_max * 2.0**-10
    if base_t_min >= t_max:
        base_t_min = t_max * 2.0**-10
    scaled = round(steps * math.log(t_max / t_min) / math.log(t_max / base_t_min))
    return TimeGrid.geometric(t_min, t_max, max(2, scaled))


def _phase_expectation(kappa_alpha: float) -> str:
    if kappa_alpha < 1.0:
        return "below"
    if kappa_alpha >= INSTANT_EXIT_KAPPA_ALPHA:
        return "above"
    return "none"


def _phase_verdict(expectation: str, fraction: float) -> Optional[bool]:
    if expectation == "below":
        return fraction < RULED_OUT_CEILING
    if expectation == "above":
        return fraction > INSTANT_EXIT_FLOOR
    return None


def run_phase_diagram(config: PhaseDiagramConfig, workers: int = 1) -> ExperimentReport:
    """Early-exit fractions P(T <= eps) over an (alpha, kappa) grid on a geometric time grid.

    Each cell gets a verdict at the smallest eps: below RULED_OUT_CEILING when
    kappa * alpha < 1, above INSTANT_EXIT_FLOOR when kappa * alpha >= 1.5.
    grid_t_min_values reruns every cell on grids reaching further toward 0 and
    reports the trend of that final fraction.
    """
    epsilons = sorted(set(config.epsilon_grid), reverse=True)
    t_max = epsilons[0]
    eps_min = epsilons[-1]
    base_t_min = config.grid_t_min or eps_min
    grid = _phase_grid(base_t_min, t_max, config.grid_steps, base_t_min)
    cells = list(product(config.alpha_grid, config.kappa_grid))
    n = config.n_reps
    logger.info("phase_diagram %d cells, eps in [%g, %g], n=%d", len(cells), eps_min, t_max, n)

    rows, records, verdicts, refinement = [], {}, {}, []
    for family, (alpha, kappa) in enumerate(cells):
        params = StableParams(alpha=alpha, beta=config.beta)
        region = Region(r=config.r, kappa=kappa)
        label = f"alpha_{alpha:g}_kappa_{kappa:g}"
        cell = run_replications(partial(_grid_exit_task, params, grid, region), n, config.seed,
                                family, workers, config.chunk_size)
        exits = np.array([rec.time_or_inf for rec in cell])
        regime = classify_regime(alpha, kappa)
        for eps in epsilons:
            frac = float(np.mean(exits <= eps))
            rows.append({
                "alpha": alpha,
                "kappa": kappa,
                "kappa_alpha": kappa * alpha,
                "epsilon": eps,
                "fraction": frac,
                "half_width": binomial_half_width(frac, n),
                "instantaneous_exit": regime.instantaneous_exit.value,
                "n": n,
            })
        records[label] = cell

        final = rows[-1]["fraction"]
        expectation = _phase_expectation(kappa * alpha)
        verdicts[label] = {
            "kappa_alpha": kappa * alpha,
            "epsilon": eps_min,
            "fraction": final,
            "half_width": rows[-1]["half_width"],
            "expectation": expectation,
            "passed": _phase_verdict(expectation, final),
        }

        trend = [(float(grid.times[1]), final)]
        for j, t_min in enumerate(sorted(config.grid_t_min_values, reverse=True), start=1):
            fine = _phase_grid(t_min, t_max, config.grid_steps, base_t_min)
            out = run_replications(partial(_grid_exit_task, params, fine, region), n, config.seed,
                                   j * len(cells) + family, workers, config.chunk_size)
            trend.append((float(fine.times[1]), float(np.mean([rec.time_or_inf <= eps_min for rec in out]))))
        if len(trend) > 1:
            fractions = [frac for _, frac in trend]
            bands = [binomial_half_width(frac, n) for frac in fractions]
            refinement.append({
                "cell": label,
                "kappa_alpha": kappa * alpha,
                "grid_t_min": [t for t, _ in trend],
                "fraction": fractions,
                # allowed to fall back only within the two binomial bands
                "nondecreasing": all(b >= a - (ha + hb) for a, b, ha, hb
                                     in zip(fractions, fractions[1:], bands, bands[1:])),
            })
        logger.info("phase_diagram %s eps=%g fraction=%.4f (%s)", label, eps_min, final, expectation)

    checked = [v["passed"] for v in verdicts.values() if v["passed"] is not None]
    instant = [item for item in refinement if item["kappa_alpha"] >= INSTANT_EXIT_KAPPA_ALPHA]
    summary = {
        "cells": len(cells),
        "grid_t_min": float(grid.times[1]),
        "grid_t_max": t_max,
        "verdicts": verdicts,
        "verdicts_passed": all(checked),
        "failed_cells": [label for label, v in verdicts.items() if v["passed"] is False],
        "refinement": refinement,
        "refinement_nondecreasing": all(item["nondecreasing"] for item in instant) if instant else None,
    }
    return ExperimentReport(ExperimentName.PHASE_DIAGRAM.value, rows, summary, records)


def _check_relative_stability(config: RelativeStabilityConfig) -> None:
    if config.limit == RadiusLimit.SMALL and config.alpha >= 1.0:
        raise RegimeError(
            f"relative stability as r -> 0 is claimed for bounded variation (alpha < 1), got alpha={config.alpha}"
        )
    if config.limit == RadiusLimit.LARGE and config.alpha <= 1.0:
        raise RegimeError(
            f"relative stability as r -> infinity needs a finite mean (alpha > 1), got alpha={config.alpha}"
        )
    drift_passage_time(1.0, config.kappa, config.drift_b)


def run_relative_stability(config: RelativeStabilityConfig, workers: int = 1) -> ExperimentReport:
    """T(r) / C(r) for a drifted stable process, C(r) the pure-drift passage time.

    small_r: bounded variation (alpha < 1), r decreasing toward 0.
    large_r: finite positive mean drift_b (alpha > 1), r increasing.
    """
    _check_relative_stability(config)
    stable = StableParams(alpha=config.alpha, beta=config.beta, scale=config.scale) if config.scale > 0 else None
    drift = DriftParams(drift_b=config.drift_b, stable=stable)
    n = config.n_reps
    logger.info("relative_stability %s alpha=%g b=%g kappa=%g r=%s n=%d", config.limit.value,
                config.alpha, config.drift_b, config.kappa, config.radii, n)

    rows, records = [], {}
    for family, r in enumerate(config.radii):
        norm = drift_passage_time(r, config.kappa, config.drift_b)
        grid = TimeGrid.geometric(norm * config.t_min_fraction, norm * config.horizon_factor, config.grid_steps)
        cell = run_replications(partial(_drift_exit_task, drift, grid, Region(r=r, kappa=config.kappa)),
                                n, config.seed, family, workers, config.chunk_size)
        ratios = _exit_times(cell) / norm
        q25, median, q75 = (float(q) for q in np.quantile(ratios, [0.25, 0.5, 0.75]))
        rows.append({
            "r": r,
            "norm": norm,
            "median": median,
            "q25": q25,
            "q75": q75,
            "iqr": q75 - q25,
            "iqr_over_median": (q75 - q25) / median,
            "censored": sum(rec.censored for rec in cell),
            "n": n,
        })
        records[_group_label("r", r)] = cell
        logger.info("relative_stability r=%g median=%.4f iqr=%.4f", r, median, q75 - q25)

    dispersion = [row["iqr_over_median"] for row in rows]
    summary = {
        "limit": config.limit.value,
        "drift_b": config.drift_b,
        "kappa": config.kappa,
        "dispersion_nonincreasing": all(b <= a for a, b in zip(dispersion, dispersion[1:])),
        "final_median": rows[-1]["median"],
    }
    return ExperimentReport(ExperimentName.RELATIVE_STABILITY.value, rows, summary, records)


def run_survival(config: SurvivalConfig, workers: int = 1) -> ExperimentReport:
    params = StableParams(alpha=config.alpha, beta=config.beta)
    region = Region(r=config.r, kappa=config.kappa)
    grid = _make_grid(config.grid_kind, config.horizon, config.grid_steps, config.t_min_fraction)
    n = config.n_reps
    logger.info("survival alpha=%g kappa=%g r=%g horizon=%g n=%d",
                config.alpha, config.kappa, config.r, config.horizon, n)

    records = run_replications(partial(_grid_exit_task, params, grid, region), n, config.seed,
                               0, workers, config.chunk_size)
    t_grid = np.geomspace(grid.times[1], config.horizon, config.t_points)
    curve = survival_curve(records, t_grid)
    observed = curve.survival[~np.isnan(curve.survival)]
    if np.any(np.diff(observed) > 0.0):
        raise NumericalError("empirical survival increased along the time grid")

    censored = sum(rec.censored for rec in records)
    high_censoring = censored > HIGH_CENSORING_FRACTION * n
    terminal = float(curve.survival[-1])
    rows = [
        {"t": float(t), "survival": float(s), "flagged": bool(f), "at_risk": int(a)}
        for t, s, f, a in zip(curve.times, curve.survival, curve.flagged, curve.at_risk)
    ]
    summary = {
        "terminal_survival": terminal,
        "terminal_threshold": config.terminal_threshold,
        # no claim about the terminal value when most paths never left
        "terminal_below_threshold": None if high_censoring else terminal < config.terminal_threshold,
        "high_censoring": high_censoring,
        "censored": censored,
        "monotone": True,
    }
    if high_censoring:
        logger.warning("survival: %d of %d replications censored; horizon shorter than the median exit", censored, n)
    return ExperimentReport(ExperimentName.SURVIVAL.value, rows, summary, {MAIN_GROUP: records})


def run_tail_recovery(config: TailRecoveryConfig, workers: int = 1) -> ExperimentReport:
    params = PowerLawJumpParams(alpha=config.alpha, balance_c=config.balance_c, cutoff=config.cutoff)
    n = config.n_reps
    jumps = powerlaw_jumps(params, n, replication_rng(config.seed, 0))
    magnitudes = EmpiricalDistribution.from_values(np.abs(jumps))
    logger.info("tail_recovery alpha=%g n=%d k=%d", config.alpha, n, config.k)

    rows = []
    for k in sorted({config.k, *config.k_values}):
        estimate = hill_estimator(magnitudes, k)
        rows.append({"k": k, "estimate": estimate, "abs_error": abs(estimate - config.alpha)})
    estimate = hill_estimator(magnitudes, config.k)

    level = 2.0 * config.cutoff
    exact = powerlaw_tail(params, level)
    observed = float(np.mean(magnitudes.values > level))
    band = 4.0 * math.sqrt(exact * (1.0 - exact) / n)
    summary = {
        "alpha": config.alpha,
        "k": config.k,
        "estimate": estimate,
        "abs_error": abs(estimate - config.alpha),
        "within_tolerance": abs(estimate - config.alpha) <= config.tolerance,
        "exceedance_observed": observed,
        "exceedance_exact": exact,
        "exceedance_within_band": abs(observed - exact) <= band,
        "positive_fraction": float(np.mean(jumps > 0)),
    }
    return ExperimentReport(ExperimentName.TAIL_RECOVERY.value, rows, summary)


def run_walk_convergence(config: WalkConvergenceConfig, workers: int = 1) -> ExperimentReport:
    """KS distance of centered, rescaled walk endpoints to their stable limit as n grows"""
    jump_params = PowerLawJumpParams(alpha=config.alpha, balance_c=config.balance_c)
    jump_centering(jump_params)  # rejects the logarithmic-centering case up front
    limit = StableParams(alpha=config.alpha, beta=balance_to_skew(config.balance_c),
                         scale=attraction_scale(config.alpha))
    n = config.n_reps
    reference = EmpiricalDistribution.from_values(stable_variates(limit, n, replication_rng(config.seed, 0, family=0)))
    logger.info("walk_convergence alpha=%g c=%g sigma=%g n_values=%s",
                config.alpha, config.balance_c, limit.scale, config.n_values)

    rows = []
    threshold = ks_threshold(n, n)
    for family, steps in enumerate(sorted(config.n_values), start=1):
        endpoints = run_replications(partial(_walk_endpoint_task, jump_params, steps, config.alpha),
                                     n, config.seed, family, workers, config.chunk_size)
        ks = ks_distance(EmpiricalDistribution.from_values(endpoints), reference)
        rows.append({"n_steps": steps, "ks": ks, "ks_threshold": threshold, "n": n})

    summary = {
        "limit_scale": limit.scale,
        "limit_beta": limit.beta,
        "ks_first": rows[0]["ks"],
        "ks_last": rows[-1]["ks"],
        "decreasing": rows[-1]["ks"] < rows[0]["ks"],
    }
    return ExperimentReport(ExperimentName.WALK_CONVERGENCE.value, rows, summary)


def run_walk_limit_law(config: WalkLimitLawConfig, workers: int = 1) -> ExperimentReport:
    """Levy-flight passage times T(r) / r**(1/nu) against Y**(-1/nu) as r grows.

    Y is the sup of |Z_t| / t**kappa over (0, 1] for the stable limit Z of the
    centered walk: scale attraction_scale(alpha), beta = 2c - 1. Both samples
    are truncated at the horizon. A walk censored after horizon * r**(1/nu)
    steps lies beyond it, so truncation treats both samples alike.
    """
    nu = nu_exponent(config.alpha, config.kappa)
    jump_params = PowerLawJumpParams(alpha=config.alpha, balance_c=config.balance_c)
    limit = StableParams(alpha=config.alpha, beta=balance_to_skew(config.balance_c),
                         scale=attraction_scale(config.alpha))
    n_t = config.n_reps
    n_y = config.y_reps or config.n_reps
    horizon = config.horizon
    logger.info("walk_limit_law alpha=%g c=%g kappa=%g nu=%g r=%s n_t=%d n_y=%d",
                config.alpha, config.balance_c, config.kappa, nu, config.r_values, n_t, n_y)

    y_grid = TimeGrid.geometric(config.t_min_fraction, 1.0, config.grid_steps)
    y_out = run_replications(partial(_sup_task, limit, y_grid, config.kappa, 2),
                             n_y, config.seed, 0, workers, config.chunk_size)
    y = np.array([sup for sup, _, _ in y_out])
    with np.errstate(divide="ignore"):
        reference = EmpiricalDistribution.from_values(np.minimum(y ** (-1.0 / nu), horizon))
    threshold = ks_threshold(n_t, n_y)

    rows, records = [], {}
    for family, r in enumerate(sorted(config.r_values), start=1):
        norm = r ** (1.0 / nu)
        steps = math.ceil(horizon * norm)
        task = partial(_walk_exit_task, jump_params, steps, Region(r=r, kappa=config.kappa))
        cell = run_replications(task, n_t, config.seed, family, workers, config.chunk_size)
        scaled = np.minimum(_exit_times(cell) / norm, horizon)
        ks = ks_distance(EmpiricalDistribution.from_values(scaled), reference)
        rows.append({
            "r": r,
            "norm": norm,
            "walk_steps": steps,
            "ks": ks,
            "ks_threshold": threshold,
            "passed": ks <= threshold,
            "censored": sum(rec.censored for rec in cell),
            "n_a": n_t,
            "n_b": n_y,
            "nu": nu,
        })
        records[_group_label("r", r)] = cell
        logger.info("walk_limit_law r=%g steps=%d ks=%.5f", r, steps, ks)

    summary = {
        "nu": nu,
        "limit_scale": limit.scale,
        "limit_beta": limit.beta,
        "horizon": horizon,
        "ks_threshold": threshold,
        "ks_first": rows[0]["ks"],
        "ks_last": rows[-1]["ks"],
        "decreasing": rows[-1]["ks"] < rows[0]["ks"] if len(rows) > 1 else None,
        "passed": rows[-1]["passed"],
    }
    return ExperimentReport(ExperimentName.WALK_LIMIT_LAW.value, rows, summary, records)


def run_sandwich(config: SandwichConfig, workers: int = 1) -> ExperimentReport:
    grid = _make_grid(config.grid_kind, config.horizon, config.grid_steps, config.t_min_fraction)
    n = config.n_reps
    rows = []
    for family, cell in enumerate(config.cells):
        params = StableParams(alpha=cell.alpha, beta=config.beta)
        region = Region(r=cell.r, kappa=cell.kappa)
        out = run_replications(partial(_sandwich_task, params, grid, region), n, config.seed,
                               family, workers, config.chunk_size)
        rows.append({
            "alpha": cell.alpha,
            "kappa": cell.kappa,
            "r": cell.r,
            "paths": n,
            "violations": sum(v for v, _ in out),
            "censored": sum(c for _, c in out),
        })
    total = sum(row["violations"] for row in rows)
    logger.info("sandwich: %d violations over %d paths", total, n * len(rows))
    summary = {"total_violations": total, "passed": total == 0}
    return ExperimentReport(ExperimentName.SANDWICH.value, rows, summary)


EXPERIMENTS = {
    ExperimentName.LIMIT_LAW: run_limit_law,
    ExperimentName.SCALING_COLLAPSE: run_scaling_collapse,
    ExperimentName.PHASE_DIAGRAM: run_phase_diagram,
    ExperimentName.RELATIVE_STABILITY: run_relative_stability,
    ExperimentName.SURVIVAL: run_survival,
    ExperimentName.TAIL_RECOVERY: run_tail_recovery,
    ExperimentName.WALK_CONVERGENCE: run_walk_convergence,
    ExperimentName.WALK_LIMIT_LAW: run_walk_limit_law,
    ExperimentName.SANDWICH: run_sandwich,
}


def _stable_indices(config) -> List[float]:
    if isinstance(config, PhaseDiagramConfig):
        return list(config.alpha_grid)
    if isinstance(config, SandwichConfig):
        return [cell.alpha for cell in config.cells]
    if hasattr(config, "beta"):
        return [config.alpha]
    return []


def check_regime(config) -> None:
    """Reject configurations outside the regime their experiment is defined for"""
    for alpha in _stable_indices(config):
        require_supported(alpha, config.beta)
    if isinstance(config, LimitLawConfig):
        nu_exponent(config.alpha, config.kappa)
    elif isinstance(config, RelativeStabilityConfig):
        _check_relative_stability(config)
    elif isinstance(config, (WalkConvergenceConfig, WalkLimitLawConfig)):
        jump_centering(PowerLawJumpParams(alpha=config.alpha, balance_c=config.balance_c))
        if isinstance(config, WalkLimitLawConfig):
            nu_exponent(config.alpha, config.kappa)


def run_experiment(config, workers: int = 1) -> ExperimentReport:
    check_regime(config)
    return EXPERIMENTS[ExperimentName(config.experiment_name)](config, workers=workers)
