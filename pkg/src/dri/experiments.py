"""
Monte Carlo validation of the standard and modified index.

Component A scores both formulas across a design grid and noise levels.
Component B sweeps the penalty threshold and derives the evaluation criteria
(discrimination, noise floor, fidelity gap, monotone decline).

Seeding: each replication owns a ``SeedSequence`` keyed by
(master_seed; n, C, P, likert_max, noise, replication). Results therefore do
not depend on which worker ran a replication or in which order, and every
formula/threshold variant is scored on the same grid (paired design).
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from joblib import Parallel, delayed

from .core import DriConfig, dri, pair_grid
from .datagen import (
    DEFAULT_MODEL,
    STUDY_NOISE_LEVELS,
    DesignPoint,
    LatentModel,
    generate_group,
    split_half,
)
from .errors import ComputationError, UsageError

STUDY_TAUS = (0.1, 0.2, 0.3, 0.4)
FLOOR_NEAR_ZERO = 0.15


@dataclass(frozen=True)
class Variant:
    """One way of scoring a grid: standard, or modified at (tau, mode)."""

    formula: str
    tau: float | None = None
    adjustment_mode: str | None = None

    def config(self, base: DriConfig) -> DriConfig:
        if self.formula == "standard":
            return base.with_method("standard")
        return DriConfig(
            correlation_kind=base.correlation_kind,
            tau=self.tau,
            lam=base.lam,
            method="modified",
            adjustment_mode=self.adjustment_mode,
            degenerate_policy=base.degenerate_policy,
        )


STANDARD = Variant("standard")


@dataclass(frozen=True)
class ScenarioResult:
    design: DesignPoint
    tau: float | None
    formula: str
    mean_dri: float
    sd_dri: float
    reps: int
    adjustment_mode: str | None = None
    # replications whose grid had no usable pair; excluded from mean and sd
    n_undefined: int = 0

    def __post_init__(self) -> None:
        if self.reps < 1 or self.sd_dri < 0 or self.n_undefined < 0:
            raise UsageError("reps must be >= 1, sd_dri >= 0 and n_undefined >= 0")

    def to_dict(self) -> dict:
        return {
            "design": self.design.to_dict(),
            "formula": self.formula,
            "adjustment_mode": self.adjustment_mode,
            "tau": self.tau,
            "mean_dri": self.mean_dri,
            "sd_dri": self.sd_dri,
            "reps": self.reps,
            "n_undefined": self.n_undefined,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioResult":
        return cls(
            design=DesignPoint(**d["design"]),
            tau=d["tau"],
            formula=d["formula"],
            mean_dri=d["mean_dri"],
            sd_dri=d["sd_dri"],
            reps=d["reps"],
            adjustment_mode=d["adjustment_mode"],
            n_undefined=d.get("n_undefined", 0),
        )


@dataclass(frozen=True)
class ThresholdCriteria:
    tau: float
    discrimination: float
    noise_floor: float
    fidelity_gap: float
    floor_near_zero: bool
    monotone: bool
    structured_dri: float
    structured_standard_dri: float
    n_designs: int
    n_scenarios: int

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "discrimination": self.discrimination,
            "noise_floor": self.noise_floor,
            "fidelity_gap": self.fidelity_gap,
            "floor_near_zero": self.floor_near_zero,
            "monotone": self.monotone,
            "structured_dri": self.structured_dri,
            "structured_standard_dri": self.structured_standard_dri,
            "n_designs": self.n_designs,
            "n_scenarios": self.n_scenarios,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ThresholdCriteria":
        return cls(**d)


# ---------------------------------------------------------------------------
# Replication engine
# ---------------------------------------------------------------------------


def _noise_code(noise: float) -> int:
    return int(round(noise * 1_000_000))


def replication_seeds(master_seed: int, design: DesignPoint, rep: int) -> tuple[np.random.SeedSequence, ...]:
    """(data seed, split seed) for one replication of one scenario."""
    key = (design.n, design.C, design.P, design.likert_max, _noise_code(design.noise), rep)
    return (
        np.random.SeedSequence(master_seed, spawn_key=key + (0,)),
        np.random.SeedSequence(master_seed, spawn_key=key + (1,)),
    )


def score_replication(
    design: DesignPoint,
    rep: int,
    master_seed: int,
    base: DriConfig,
    variants: Sequence[Variant],
    model: LatentModel = DEFAULT_MODEL,
) -> list[float]:
    data_seed, split_seed = replication_seeds(master_seed, design, rep)
    group = generate_group(design, data_seed, model)
    half_a, half_b = split_half(group, split_seed)
    grid = pair_grid(
        half_a.ratings, half_a.rankings, half_b.ratings, half_b.rankings,
        kind=base.correlation_kind, degenerate_policy=base.degenerate_policy,
    )
    if grid.n_valid == 0:
        return [math.nan] * len(variants)
    return [dri(grid, v.config(base)).value for v in variants]


def replicate_scenario(
    design: DesignPoint,
    reps: int,
    master_seed: int,
    base: DriConfig,
    variants: Sequence[Variant],
    model: LatentModel = DEFAULT_MODEL,
    rep_offset: int = 0,
) -> np.ndarray:
    """Per-replication scores, shape (reps, len(variants)), in replication order.

    Rows are NaN for replications without a usable correlation pair.
    """
    out = np.empty((reps, len(variants)))
    for i in range(reps):
        out[i] = score_replication(design, rep_offset + i, master_seed, base, variants, model)
    return out


def _chunks(reps: int, n_chunks: int) -> list[tuple[int, int]]:
    n_chunks = max(1, min(n_chunks, reps))
    edges = np.linspace(0, reps, n_chunks + 1).astype(int)
    return [(int(a), int(b - a)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def run_scenarios(
    scenarios: Sequence[DesignPoint],
    reps: int,
    master_seed: int,
    base: DriConfig,
    variants: Sequence[Variant],
    model: LatentModel = DEFAULT_MODEL,
    n_jobs: int = 1,
) -> list[np.ndarray]:
    """Replicate every scenario; the chunking never affects the values."""
    if reps < 1:
        raise UsageError(f"reps must be >= 1, got {reps}")
    if not scenarios:
        raise UsageError("at least one design is required")
    per_scenario = 1 if n_jobs == 1 else max(1, 4 * abs(n_jobs) // len(scenarios))
    tasks = [(s, off, k) for s in scenarios for off, k in _chunks(reps, per_scenario)]
    if n_jobs == 1:
        parts = [replicate_scenario(s, k, master_seed, base, variants, model, off) for s, off, k in tasks]
    else:
        parts = Parallel(n_jobs=n_jobs)(
            delayed(replicate_scenario)(s, k, master_seed, base, variants, model, off) for s, off, k in tasks
        )
    grouped: dict[DesignPoint, list[np.ndarray]] = defaultdict(list)
    for (s, _, _), part in zip(tasks, parts):
        grouped[s].append(part)
    return [np.vstack(grouped[s]) for s in scenarios]


def _summarise(values: np.ndarray) -> tuple[float, float, int]:
    """(mean, sd, defined count) over the non-NaN replications."""
    vals = [v for v in values.tolist() if not math.isnan(v)]
    if not vals:
        raise ComputationError("no replication produced a usable correlation pair")
    mean = math.fsum(vals) / len(vals)
    if len(vals) < 2:
        return mean, 0.0, 1
    var = math.fsum((v - mean) ** 2 for v in vals) / (len(vals) - 1)
    return mean, math.sqrt(var), len(vals)


def _scenario_results(scenarios, values, variants, reps) -> list[ScenarioResult]:
    results = []
    for design, vals in zip(scenarios, values):
        for j, v in enumerate(variants):
            mean, sd, used = _summarise(vals[:, j])
            results.append(ScenarioResult(design, v.tau, v.formula, mean, sd, used, v.adjustment_mode, reps - used))
    return results


def _scenario_list(designs: Iterable[DesignPoint], noise_levels: Iterable[float]) -> list[DesignPoint]:
    designs = list(designs)
    noise_levels = list(noise_levels)
    if not designs:
        raise UsageError("designs must be non-empty")
    if not noise_levels:
        raise UsageError("noise_levels must be non-empty")
    return [d.with_noise(float(nz)) for d in designs for nz in noise_levels]


# ---------------------------------------------------------------------------
# Component A
# ---------------------------------------------------------------------------


def run_component_a(
    designs: Sequence[DesignPoint],
    noise_levels: Sequence[float] = STUDY_NOISE_LEVELS,
    reps: int = 1000,
    config: DriConfig = DriConfig(),
    master_seed: int = 0,
    modes: Sequence[str] | None = None,
    model: LatentModel = DEFAULT_MODEL,
    n_jobs: int = 1,
) -> list[ScenarioResult]:
    """Standard and modified index per (design, noise), on identical datasets.

    ``modes`` lists the adjustment modes scored for the modified formula;
    defaults to ``config.adjustment_mode`` alone.
    """
    modes = tuple(modes) if modes else (config.adjustment_mode,)
    variants = [STANDARD] + [Variant("modified", config.tau, m) for m in modes]
    scenarios = _scenario_list(designs, noise_levels)
    values = run_scenarios(scenarios, reps, master_seed, config, variants, model, n_jobs)
    return _scenario_results(scenarios, values, variants, reps)


# ---------------------------------------------------------------------------
# Component B
# ---------------------------------------------------------------------------


def sensitivity_scenarios(
    taus: Sequence[float] = STUDY_TAUS,
    designs: Sequence[DesignPoint] = (),
    noise_levels: Sequence[float] = STUDY_NOISE_LEVELS,
    reps: int = 300,
    config: DriConfig = DriConfig(),
    master_seed: int = 0,
    model: LatentModel = DEFAULT_MODEL,
    n_jobs: int = 1,
) -> list[ScenarioResult]:
    """Scenario means for the standard index and the modified index at each tau."""
    taus = sorted(float(t) for t in taus)
    if not taus:
        raise UsageError("taus must be non-empty")
    for t in taus:
        if not 0.0 < t <= 1.0:
            raise UsageError(f"every tau must lie in (0, 1], got {t}")
    variants = [STANDARD] + [Variant("modified", t, config.adjustment_mode) for t in taus]
    scenarios = _scenario_list(designs, noise_levels)
    values = run_scenarios(scenarios, reps, master_seed, config, variants, model, n_jobs)
    return _scenario_results(scenarios, values, variants, reps)


def _design_average(results: Iterable[ScenarioResult], noise: float) -> tuple[float, int]:
    vals = [r.mean_dri for r in results if r.design.noise == noise]
    if not vals:
        raise UsageError(f"no scenarios at noise={noise}")
    return math.fsum(vals) / len(vals), len(vals)


def threshold_criteria(results: Sequence[ScenarioResult]) -> list[ThresholdCriteria]:
    """Derive one criteria record per tau from scenario means, ordered by tau.

    Means are first averaged over designs at each noise level. The noise
    floor is the modified average at the highest noise level, the structured
    value the one at the lowest.
    """
    standard = [r for r in results if r.formula == "standard"]
    modified = [r for r in results if r.formula == "modified"]
    noise_levels = sorted({r.design.noise for r in results})
    if len(noise_levels) < 2 or noise_levels[0] != 0.0 or noise_levels[-1] != 1.0:
        raise UsageError("criteria need scenarios at noise=0 and noise=1")
    std0, _ = _design_average(standard, 0.0)
    out = []
    for tau in sorted({r.tau for r in modified}):
        rows = [r for r in modified if r.tau == tau]
        curve = [_design_average(rows, nz)[0] for nz in noise_levels]
        top, n_designs = _design_average(rows, 0.0)
        floor, _ = _design_average(rows, 1.0)
        out.append(
            ThresholdCriteria(
                tau=tau,
                discrimination=top - floor,
                noise_floor=floor,
                fidelity_gap=abs(top - std0),
                floor_near_zero=abs(floor) <= FLOOR_NEAR_ZERO,
                monotone=all(b <= a for a, b in zip(curve, curve[1:])),
                structured_dri=top,
                structured_standard_dri=std0,
                n_designs=n_designs,
                n_scenarios=len(rows),
            )
        )
    return out


def run_component_b(
    taus: Sequence[float] = STUDY_TAUS,
    designs: Sequence[DesignPoint] = (),
    noise_levels: Sequence[float] = STUDY_NOISE_LEVELS,
    reps: int = 300,
    config: DriConfig = DriConfig(),
    master_seed: int = 0,
    model: LatentModel = DEFAULT_MODEL,
    n_jobs: int = 1,
) -> list[ThresholdCriteria]:
    results = sensitivity_scenarios(taus, designs, noise_levels, reps, config, master_seed, model, n_jobs)
    return threshold_criteria(results)


def audit_criteria(criteria: Sequence[ThresholdCriteria], results: Sequence[ScenarioResult], tol: float = 1e-12) -> list[str]:
    """Recompute every criteria field from the scenario means.

    Returns a list of mismatch descriptions; empty means consistent.
    """
    fresh = {c.tau: c for c in threshold_criteria(results)}
    problems = []
    for c in criteria:
        ref = fresh.get(c.tau)
        if ref is None:
            problems.append(f"tau={c.tau}: no scenarios")
            continue
        if abs(c.discrimination - (c.structured_dri - c.noise_floor)) > tol:
            problems.append(f"tau={c.tau}: discrimination is not structured_dri - noise_floor")
        for name in ("discrimination", "noise_floor", "fidelity_gap", "structured_dri", "structured_standard_dri"):
            if abs(getattr(c, name) - getattr(ref, name)) > tol:
                problems.append(f"tau={c.tau}: {name} {getattr(c, name)} != {getattr(ref, name)}")
        for name in ("floor_near_zero", "monotone", "n_designs", "n_scenarios"):
            if getattr(c, name) != getattr(ref, name):
                problems.append(f"tau={c.tau}: {name} {getattr(c, name)} != {getattr(ref, name)}")
    return problems


# ---------------------------------------------------------------------------
# Design invariance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FloorSpread:
    formula: str
    adjustment_mode: str | None
    tau: float | None
    n: int
    n_designs: int
    min_floor: float
    max_floor: float

    @property
    def range(self) -> float:
        return self.max_floor - self.min_floor

    def to_dict(self) -> dict:
        return {
            "formula": self.formula,
            "adjustment_mode": self.adjustment_mode,
            "tau": self.tau,
            "n": self.n,
            "n_designs": self.n_designs,
            "min": self.min_floor,
            "max": self.max_floor,
            "range": self.range,
        }


def design_invariance_summary(results: Sequence[ScenarioResult], noise: float = 1.0) -> list[FloorSpread]:
    """Spread of the noise floor across designs, per formula variant and group size."""
    groups: dict[tuple, list[float]] = defaultdict(list)
    for r in results:
        if r.design.noise == noise:
            groups[(r.formula, r.adjustment_mode or "", r.tau if r.tau is not None else -1.0, r.design.n)].append(r.mean_dri)
    if not groups:
        raise UsageError(f"no scenarios at noise={noise}")
    out = []
    for (formula, mode, tau, n), floors in sorted(groups.items()):
        if len(floors) < 2:
            raise UsageError(f"{formula} at n={n}: design invariance needs at least 2 designs, got {len(floors)}")
        out.append(FloorSpread(formula, mode or None, None if tau < 0 else tau, n, len(floors), min(floors), max(floors)))
    return out
