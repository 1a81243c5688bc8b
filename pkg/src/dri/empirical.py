"""
Pre/post scoring of observed cases.

Each wave is scored on its own: respondents are split into random halves and
the halves supply r and q. Both waves use the same split seed, and the
standard and modified index are computed on the same split.

Significance of a pre-to-post change comes from a respondent bootstrap:
each wave is resampled with replacement, re-split and re-scored, and the
two-sided p-value is read off the bootstrap distribution of the change.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .core import DriConfig, DriResult, dri, pair_grid
from .datagen import ResponseDataset, split_indices
from .errors import ComputationError, UsageError, ValidationError

STAR_LEVELS = ((0.001, "***"), (0.01, "**"), (0.05, "*"))
NOT_SIGNIFICANT = "^"


@dataclass(frozen=True)
class CaseData:
    name: str
    pre: ResponseDataset
    post: ResponseDataset

    def __post_init__(self) -> None:
        a, b = self.pre, self.post
        if (a.n_considerations, a.n_preferences, a.likert_max) != (b.n_considerations, b.n_preferences, b.likert_max):
            raise ValidationError(
                f"case {self.name!r}: waves differ in shape "
                f"(C, P, likert) pre={(a.n_considerations, a.n_preferences, a.likert_max)} "
                f"post={(b.n_considerations, b.n_preferences, b.likert_max)}"
            )


@dataclass(frozen=True)
class CaseReport:
    name: str
    n: int
    n_post: int
    dri_pre_standard: float
    dri_post_standard: float
    delta_standard: float
    dri_pre_modified: float
    dri_post_modified: float
    delta_modified: float
    delta_indexes_pre: float
    delta_indexes_post: float
    significance_standard: str = ""
    significance_modified: str = ""
    split_seed: int = 0
    details: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "n_post": self.n_post,
            "dri_pre_standard": self.dri_pre_standard,
            "dri_post_standard": self.dri_post_standard,
            "delta_standard": self.delta_standard,
            "dri_pre_modified": self.dri_pre_modified,
            "dri_post_modified": self.dri_post_modified,
            "delta_modified": self.delta_modified,
            "delta_indexes_pre": self.delta_indexes_pre,
            "delta_indexes_post": self.delta_indexes_post,
            "significance_standard": self.significance_standard,
            "significance_modified": self.significance_modified,
            "split_seed": self.split_seed,
            "details": self.details,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CaseReport":
        return cls(**d)


def name_seed(name: str) -> int:
    """Stable 63-bit seed from a case label."""
    return int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:8], "big") >> 1


def significance_stars(p: float) -> str:
    for level, stars in STAR_LEVELS:
        if p < level:
            return stars
    return NOT_SIGNIFICANT


def _check_wave(label: str, wave: ResponseDataset) -> None:
    if wave.n < 6 or wave.n % 2:
        raise UsageError(f"{label} wave has {wave.n} respondents; split-half needs an even count of at least 6")


def _score_rows(
    ratings: np.ndarray, rankings: np.ndarray, config: DriConfig, split_seed
) -> tuple[DriResult, DriResult]:
    ia, ib = split_indices(ratings.shape[0], split_seed)
    grid = pair_grid(
        ratings[ia], rankings[ia], ratings[ib], rankings[ib],
        kind=config.correlation_kind, degenerate_policy=config.degenerate_policy,
    )
    return dri(grid, config.with_method("standard")), dri(grid, config.with_method("modified"))


def score_wave(wave: ResponseDataset, config: DriConfig = DriConfig(), split_seed: int = 0) -> tuple[DriResult, DriResult]:
    """(standard, modified) results for one wave on one split."""
    _check_wave("input", wave)
    return _score_rows(wave.ratings, wave.rankings, config, split_seed)


def compute_case(case: CaseData, config: DriConfig = DriConfig(), split_seed: int | None = None) -> CaseReport:
    if split_seed is None:
        split_seed = name_seed(case.name)
    _check_wave("pre", case.pre)
    _check_wave("post", case.post)
    pre_std, pre_mod = _score_rows(case.pre.ratings, case.pre.rankings, config, split_seed)
    post_std, post_mod = _score_rows(case.post.ratings, case.post.rankings, config, split_seed)
    return CaseReport(
        name=case.name,
        n=case.pre.n,
        n_post=case.post.n,
        dri_pre_standard=pre_std.value,
        dri_post_standard=post_std.value,
        delta_standard=post_std.value - pre_std.value,
        dri_pre_modified=pre_mod.value,
        dri_post_modified=post_mod.value,
        delta_modified=post_mod.value - pre_mod.value,
        delta_indexes_pre=pre_mod.value - pre_std.value,
        delta_indexes_post=post_mod.value - post_std.value,
        split_seed=split_seed,
        details={
            "pre_standard": pre_std.to_dict(),
            "pre_modified": pre_mod.to_dict(),
            "post_standard": post_std.to_dict(),
            "post_modified": post_mod.to_dict(),
        },
    )


@dataclass(frozen=True)
class DeltaInterval:
    method: str
    delta: float
    ci_low: float
    ci_high: float
    p_value: float
    stars: str

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "delta": self.delta,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "p_value": self.p_value,
            "stars": self.stars,
        }


@dataclass(frozen=True)
class BootstrapResult:
    standard: DeltaInterval
    modified: DeltaInterval
    resamples: int
    failed: int
    alpha: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "standard": self.standard.to_dict(),
            "modified": self.modified.to_dict(),
            "resamples": self.resamples,
            "failed": self.failed,
            "alpha": self.alpha,
            "seed": self.seed,
        }


def _bootstrap_p(draws: np.ndarray) -> float:
    b = draws.size
    below = int(np.count_nonzero(draws <= 0.0))
    above = int(np.count_nonzero(draws >= 0.0))
    return min(1.0, 2.0 * min(below + 1, above + 1) / (b + 1))


def bootstrap_delta(
    case: CaseData,
    config: DriConfig = DriConfig(),
    B: int = 2000,
    seed: int | None = None,
    alpha: float = 0.05,
    observed: CaseReport | None = None,
) -> BootstrapResult:
    """Percentile bootstrap of the pre-to-post change for both formulas.

    Resamples whose grid has no usable pair are dropped and counted in
    ``failed``.
    """
    if B < 100:
        raise UsageError(f"at least 100 resamples are required, got {B}")
    if not 0.0 < alpha < 1.0:
        raise UsageError(f"alpha must lie in (0, 1), got {alpha}")
    if seed is None:
        seed = name_seed(case.name)
    if observed is None:
        observed = compute_case(case, config, seed)
    pre, post = case.pre, case.post
    draws = np.full((B, 2), np.nan)
    for b in range(B):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        rows_pre = rng.integers(0, pre.n, size=pre.n)
        rows_post = rng.integers(0, post.n, size=post.n)
        split_pre, split_post = rng.integers(0, 2**63, size=2)
        try:
            s0, m0 = _score_rows(pre.ratings[rows_pre], pre.rankings[rows_pre], config, int(split_pre))
            s1, m1 = _score_rows(post.ratings[rows_post], post.rankings[rows_post], config, int(split_post))
        except ComputationError:
            continue
        draws[b] = (s1.value - s0.value, m1.value - m0.value)
    ok = ~np.isnan(draws[:, 0])
    if not ok.any():
        raise ComputationError("every bootstrap resample lacked usable correlation pairs")
    kept = draws[ok]
    intervals = []
    for j, (method, delta) in enumerate((("standard", observed.delta_standard), ("modified", observed.delta_modified))):
        col = kept[:, j]
        lo, hi = np.quantile(col, [alpha / 2, 1 - alpha / 2])
        p = _bootstrap_p(col)
        intervals.append(DeltaInterval(method, delta, float(lo), float(hi), p, significance_stars(p)))
    return BootstrapResult(intervals[0], intervals[1], int(ok.sum()), int(B - ok.sum()), alpha, seed)


def with_significance(report: CaseReport, boot: BootstrapResult) -> CaseReport:
    details = dict(report.details)
    details["bootstrap"] = boot.to_dict()
    return CaseReport(
        **{
            **report.to_dict(),
            "significance_standard": boot.standard.stars,
            "significance_modified": boot.modified.stars,
            "details": details,
        }
    )


def split_stability(case: CaseData, config: DriConfig = DriConfig(), k: int = 20, seed: int | None = None) -> dict:
    """Standard deviation of each report field across ``k`` split seeds."""
    if k < 2:
        raise UsageError(f"split stability needs k >= 2, got {k}")
    base = name_seed(case.name) if seed is None else seed
    fields = (
        "dri_pre_standard", "dri_post_standard", "delta_standard",
        "dri_pre_modified", "dri_post_modified", "delta_modified",
    )
    values = {f: [] for f in fields}
    for i in range(k):
        split = int(np.random.SeedSequence(base, spawn_key=(i,)).generate_state(2, np.uint64)[0] >> np.uint64(1))
        rep = compute_case(case, config, split)
        for f in fields:
            values[f].append(getattr(rep, f))
    out = {"k": k}
    for f, vals in values.items():
        mean = math.fsum(vals) / k
        out[f] = math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / (k - 1))
    return out
