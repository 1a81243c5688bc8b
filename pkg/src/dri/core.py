"""
Deliberative Reason Index on paired correlation structures.

Two halves (or waves) of a group each yield a C x P matrix of
consideration/preference correlations. Cell (c, p) therefore carries a pair
(r, q). The index summarises how close the pairs sit to the diagonal r = q:

    d      = |r - q| / sqrt(2)              orthogonal distance
    DRI    = (-2 * mean(d) + lam) / lam     lam defaults to 1/sqrt(2)

The modified index discounts pairs in which neither correlation carries
signal. Each pair gets a weight

    w = min(max(|r|, |q|) / tau, 1)

and its distance is replaced by an adjusted distance before averaging:

    as-printed        d* = w * d
    floor-referenced  d* = w * d + (1 - w) * lam

With lam = 1/sqrt(2) the per-pair consistency 1 - 2 d*/lam becomes
w * (1 - 2|r - q|) - (1 - w), i.e. low-signal pairs are pulled toward -1.
Pairs with w = 1 are untouched in both modes, so the modified index equals
the standard one whenever every pair clears tau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .errors import ComputationError, UsageError

CorrelationKind = Literal["spearman-midrank", "pearson"]
Method = Literal["standard", "modified"]
AdjustmentMode = Literal["as-printed", "floor-referenced"]
DegeneratePolicy = Literal["exclude-pair", "treat-as-zero"]

CORRELATION_KINDS: tuple[str, ...] = ("spearman-midrank", "pearson")
METHODS: tuple[str, ...] = ("standard", "modified")
ADJUSTMENT_MODES: tuple[str, ...] = ("as-printed", "floor-referenced")
DEGENERATE_POLICIES: tuple[str, ...] = ("exclude-pair", "treat-as-zero")

DEFAULT_TAU = 0.2
DEFAULT_LAMBDA = 1.0 / math.sqrt(2.0)
SQRT2 = math.sqrt(2.0)


def _check_choice(name: str, value: str, allowed: tuple[str, ...]) -> None:
    if value not in allowed:
        raise UsageError(f"{name} must be one of {allowed}, got {value!r}")


# ---------------------------------------------------------------------------
# Configuration and result records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DriConfig:
    """Parameters shared by every index computation."""

    correlation_kind: CorrelationKind = "spearman-midrank"
    tau: float = DEFAULT_TAU
    lam: float = DEFAULT_LAMBDA
    method: Method = "modified"
    adjustment_mode: AdjustmentMode = "floor-referenced"
    degenerate_policy: DegeneratePolicy = "exclude-pair"

    def __post_init__(self) -> None:
        _check_choice("correlation_kind", self.correlation_kind, CORRELATION_KINDS)
        _check_choice("method", self.method, METHODS)
        _check_choice("adjustment_mode", self.adjustment_mode, ADJUSTMENT_MODES)
        _check_choice("degenerate_policy", self.degenerate_policy, DEGENERATE_POLICIES)
        if not (0.0 < self.tau <= 1.0) or math.isnan(self.tau):
            raise UsageError(f"tau must lie in (0, 1], got {self.tau}")
        if not self.lam > 0.0 or math.isinf(self.lam):
            raise UsageError(f"lambda must be a positive finite number, got {self.lam}")

    def with_method(self, method: Method) -> "DriConfig":
        return replace(self, method=method)

    def to_dict(self) -> dict:
        return {
            "correlation_kind": self.correlation_kind,
            "tau": self.tau,
            "lambda": self.lam,
            "method": self.method,
            "adjustment_mode": self.adjustment_mode,
            "degenerate_policy": self.degenerate_policy,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DriConfig":
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        return cls(**data)


@dataclass(frozen=True)
class DriResult:
    value: float
    mean_adjusted_distance: float
    n_pairs_total: int
    n_pairs_valid: int
    n_pairs_penalized: int
    mean_penalty: float
    lam: float = DEFAULT_LAMBDA

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "mean_adjusted_distance": self.mean_adjusted_distance,
            "n_pairs_total": self.n_pairs_total,
            "n_pairs_valid": self.n_pairs_valid,
            "n_pairs_penalized": self.n_pairs_penalized,
            "mean_penalty": self.mean_penalty,
            "lambda": self.lam,
        }


@dataclass(frozen=True)
class CorrelationPair:
    r: float
    q: float
    valid: bool = True

    def __post_init__(self) -> None:
        if self.valid and not (-1.0 <= self.r <= 1.0 and -1.0 <= self.q <= 1.0):
            raise UsageError(f"correlations must lie in [-1, 1], got ({self.r}, {self.q})")


@dataclass(frozen=True, eq=False)
class CorrelationGrid:
    """C x P grid of (r, q) pairs stored as read-only arrays.

    Invalid cells hold NaN in ``r`` and ``q`` and are skipped by every
    aggregate.
    """

    r: np.ndarray
    q: np.ndarray
    valid: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        r = np.array(self.r, dtype=float, ndmin=2)
        q = np.array(self.q, dtype=float, ndmin=2)
        if r.ndim != 2 or r.shape != q.shape or r.size == 0:
            raise UsageError(f"r and q must be non-empty matrices of equal shape, got {r.shape} and {q.shape}")
        if self.valid is None:
            valid = ~(np.isnan(r) | np.isnan(q))
        else:
            valid = np.array(self.valid, dtype=bool, ndmin=2)
            if valid.shape != r.shape:
                raise UsageError("valid mask must match the grid shape")
            valid = valid & ~(np.isnan(r) | np.isnan(q))
        r = np.where(valid, r, np.nan)
        q = np.where(valid, q, np.nan)
        if np.any(np.abs(r[valid]) > 1.0) or np.any(np.abs(q[valid]) > 1.0):
            raise UsageError("correlations must lie in [-1, 1]")
        for arr in (r, q, valid):
            arr.setflags(write=False)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "valid", valid)

    @classmethod
    def from_pairs(cls, pairs) -> "CorrelationGrid":
        """Build from a nested C x P sequence of :class:`CorrelationPair`."""
        rows = [list(row) for row in pairs]
        if not rows or not rows[0] or any(len(row) != len(rows[0]) for row in rows):
            raise UsageError("pairs must form a non-empty rectangular grid")
        r = [[p.r if p.valid else np.nan for p in row] for row in rows]
        q = [[p.q if p.valid else np.nan for p in row] for row in rows]
        valid = [[p.valid for p in row] for row in rows]
        return cls(np.array(r, dtype=float), np.array(q, dtype=float), np.array(valid))

    @property
    def n_considerations(self) -> int:
        return self.r.shape[0]

    @property
    def n_preferences(self) -> int:
        return self.r.shape[1]

    @property
    def n_valid(self) -> int:
        return int(self.valid.sum())

    def pair(self, c: int, p: int) -> CorrelationPair:
        if not self.valid[c, p]:
            return CorrelationPair(math.nan, math.nan, valid=False)
        return CorrelationPair(float(self.r[c, p]), float(self.q[c, p]))

    @property
    def pairs(self) -> tuple[tuple[CorrelationPair, ...], ...]:
        return tuple(
            tuple(self.pair(c, p) for p in range(self.n_preferences))
            for c in range(self.n_considerations)
        )


# ---------------------------------------------------------------------------
# Ranks and correlations
# ---------------------------------------------------------------------------


def midranks(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Fractional ranks along ``axis`` with ties sharing their mean rank."""
    x = np.asarray(values, dtype=float)
    x = np.moveaxis(x, axis, 0)
    n = x.shape[0]
    order = np.argsort(x, axis=0, kind="stable")
    xs = np.take_along_axis(x, order, axis=0)
    idx = np.arange(n, dtype=float).reshape((n,) + (1,) * (x.ndim - 1))
    idx = np.broadcast_to(idx, x.shape)
    new_run = np.ones(x.shape, dtype=bool)
    new_run[1:] = xs[1:] != xs[:-1]
    run_start = np.maximum.accumulate(np.where(new_run, idx, 0.0), axis=0)
    run_end_mark = np.ones(x.shape, dtype=bool)
    run_end_mark[:-1] = new_run[1:]
    run_end = np.flip(
        np.minimum.accumulate(np.flip(np.where(run_end_mark, idx, float(n)), axis=0), axis=0),
        axis=0,
    )
    sorted_ranks = (run_start + run_end) / 2.0 + 1.0
    ranks = np.empty_like(sorted_ranks)
    np.put_along_axis(ranks, order, sorted_ranks, axis=0)
    return np.moveaxis(ranks, 0, axis)


def rank_with_midranks(values) -> list[float]:
    """Rank a sequence of ordinal scores, averaging ranks over ties.

    >>> rank_with_midranks([1, 2, 2, 4])
    [1.0, 2.5, 2.5, 4.0]
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise UsageError("values must be a non-empty sequence")
    return midranks(x).tolist()


def _column_correlations(a: np.ndarray, b: np.ndarray, kind: str) -> np.ndarray:
    """Correlation of every column of ``a`` with every column of ``b``.

    Returns a matrix with NaN where either column has zero variance.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    const_a = np.all(a == a[:1], axis=0)
    const_b = np.all(b == b[:1], axis=0)
    if kind == "spearman-midrank":
        a = midranks(a, axis=0)
        b = midranks(b, axis=0)
    a = a - a.mean(axis=0)
    b = b - b.mean(axis=0)
    ss_a = np.einsum("ij,ij->j", a, a)
    ss_b = np.einsum("ij,ij->j", b, b)
    num = a.T @ b
    with np.errstate(invalid="ignore", divide="ignore"):
        out = num / np.sqrt(np.outer(ss_a, ss_b))
    out = np.clip(out, -1.0, 1.0)
    out[const_a, :] = np.nan
    out[:, const_b] = np.nan
    return out


def correlate(x, y, kind: CorrelationKind = "spearman-midrank") -> float | None:
    """Correlation of two equal-length vectors; ``None`` if either is constant."""
    _check_choice("kind", kind, CORRELATION_KINDS)
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    if xv.ndim != 1 or yv.ndim != 1 or xv.shape != yv.shape:
        raise UsageError(f"x and y must be vectors of equal length, got {xv.shape} and {yv.shape}")
    if xv.size < 3:
        raise UsageError(f"correlation needs at least 3 observations, got {xv.size}")
    out = _column_correlations(xv[:, None], yv[:, None], kind)[0, 0]
    return None if math.isnan(out) else float(out)


def pair_grid(
    ratings_a,
    prefs_a,
    ratings_b,
    prefs_b,
    kind: CorrelationKind = "spearman-midrank",
    degenerate_policy: DegeneratePolicy = "exclude-pair",
) -> CorrelationGrid:
    """Correlate every consideration column with every preference column, per half."""
    _check_choice("kind", kind, CORRELATION_KINDS)
    _check_choice("degenerate_policy", degenerate_policy, DEGENERATE_POLICIES)
    ra, pa, rb, pb = (np.asarray(m, dtype=float) for m in (ratings_a, prefs_a, ratings_b, prefs_b))
    for label, m in (("ratings_a", ra), ("prefs_a", pa), ("ratings_b", rb), ("prefs_b", pb)):
        if m.ndim != 2:
            raise UsageError(f"{label} must be a 2-D matrix")
    if ra.shape[0] != pa.shape[0] or rb.shape[0] != pb.shape[0]:
        raise UsageError("ratings and preferences must have the same respondents within a half")
    if ra.shape[1] != rb.shape[1] or pa.shape[1] != pb.shape[1]:
        raise UsageError("column counts must agree across halves")
    for label, n in (("half A", ra.shape[0]), ("half B", rb.shape[0])):
        if n < 3:
            raise UsageError(f"{label} has {n} respondents; at least 3 are required")
    r = _column_correlations(ra, pa, kind)
    q = _column_correlations(rb, pb, kind)
    if degenerate_policy == "treat-as-zero":
        r = np.nan_to_num(r, nan=0.0)
        q = np.nan_to_num(q, nan=0.0)
    return CorrelationGrid(r, q)


# ---------------------------------------------------------------------------
# Distances, weights, index
# ---------------------------------------------------------------------------


def orthogonal_distance(r, q):
    """Perpendicular distance from (r, q) to the line r = q."""
    return np.abs(np.subtract(r, q)) / SQRT2


def penalty_weight(r, q, tau: float = DEFAULT_TAU):
    """Linear ramp from 0 at the origin to 1 once max(|r|, |q|) reaches ``tau``."""
    if not 0.0 < tau <= 1.0:
        raise UsageError(f"tau must lie in (0, 1], got {tau}")
    signal = np.maximum(np.abs(r), np.abs(q))
    return np.where(signal <= tau, signal / tau, 1.0)


def adjusted_distance(d, weight, mode: AdjustmentMode = "floor-referenced", lam: float = DEFAULT_LAMBDA):
    _check_choice("mode", mode, ADJUSTMENT_MODES)
    if mode == "as-printed":
        return np.multiply(weight, d)
    # weight == 1 must return d bit-for-bit, so skip the blend there
    return np.where(np.equal(weight, 1.0), d, np.multiply(weight, d) + (1.0 - np.asarray(weight)) * lam)


def dri(grid: CorrelationGrid, config: DriConfig = DriConfig()) -> DriResult:
    """Score a correlation grid under ``config``.

    Aggregation runs over valid pairs only, in row-major (c, p) order, with
    exactly rounded summation so results do not depend on array layout.
    """
    n_total = grid.r.size
    mask = grid.valid.ravel()
    n_valid = int(mask.sum())
    if n_valid == 0:
        raise ComputationError("no usable correlation pairs")
    r = grid.r.ravel()[mask]
    q = grid.q.ravel()[mask]
    d = orthogonal_distance(r, q)
    if config.method == "standard":
        weights = np.ones_like(d)
        adjusted = d
    else:
        weights = penalty_weight(r, q, config.tau)
        adjusted = adjusted_distance(d, weights, config.adjustment_mode, config.lam)
    mean_d = math.fsum(adjusted.tolist()) / n_valid
    lam = config.lam
    return DriResult(
        value=(-2.0 * mean_d + lam) / lam,
        mean_adjusted_distance=mean_d,
        n_pairs_total=n_total,
        n_pairs_valid=n_valid,
        n_pairs_penalized=int(np.count_nonzero(weights < 1.0)),
        mean_penalty=math.fsum(weights.tolist()) / n_valid,
        lam=lam,
    )
