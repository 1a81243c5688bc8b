"""
Synthetic deliberative groups.

Each respondent has one latent trait theta ~ N(0, 1). Consideration c loads
on it with a_c and preference p with b_p, where every loading is a random
sign times a magnitude drawn from U(0.5, 1) afresh per group.

    rating score   x_ic = a_c * theta_i + e   (e ~ N(0, 0.3^2))
    utility        u_ip = b_p * theta_i + e'  (e' ~ N(0, utility_noise_sd^2))

Scores are cut into Likert categories at equal-probability quantiles of their
marginal normal law; rankings sort utilities in descending order (rank 1 =
most preferred).

Noise mixes in uniform responding. Every rating cell is independently
replaced by a uniform draw on {1..likert_max} with probability ``noise``.
Every ranking row is replaced wholesale by a uniform random permutation with
the same probability, which keeps rows valid permutations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from .errors import UsageError, ValidationError

SeedLike = int | np.random.SeedSequence | None

STUDY_CONSIDERATIONS = (15, 30, 50)
STUDY_PREFERENCES = (4, 10)
STUDY_LIKERT = (5, 7)
STUDY_NOISE_LEVELS = (0.0, 0.25, 0.5, 0.75, 1.0)
LIKERT_SCALES = (5, 7)


@dataclass(frozen=True, eq=False)
class ResponseDataset:
    """One group's ratings (n x C Likert integers) and rankings (n x P permutations)."""

    ratings: np.ndarray
    rankings: np.ndarray
    likert_max: int = 5
    # halves of a split group only need enough rows for a correlation
    min_respondents: int = field(default=6, repr=False)

    def __post_init__(self) -> None:
        ratings = np.array(self.ratings)
        rankings = np.array(self.rankings)
        if ratings.ndim != 2 or rankings.ndim != 2:
            raise ValidationError("ratings and rankings must be 2-D matrices")
        if ratings.shape[0] != rankings.shape[0]:
            raise ValidationError(
                f"ratings have {ratings.shape[0]} respondents but rankings have {rankings.shape[0]}"
            )
        if ratings.shape[1] < 1 or rankings.shape[1] < 1:
            raise ValidationError("at least one consideration and one preference are required")
        if self.likert_max not in LIKERT_SCALES:
            raise ValidationError(f"likert_max must be one of {LIKERT_SCALES}, got {self.likert_max}")
        if ratings.shape[0] < self.min_respondents:
            raise ValidationError(
                f"at least {self.min_respondents} respondents are required, got {ratings.shape[0]}"
            )
        for label, m in (("ratings", ratings), ("rankings", rankings)):
            if not np.all(np.equal(np.mod(m, 1), 0)):
                raise ValidationError(f"{label} must contain integers")
        ratings = ratings.astype(np.int64)
        rankings = rankings.astype(np.int64)
        bad = np.argwhere((ratings < 1) | (ratings > self.likert_max))
        if bad.size:
            i, c = bad[0]
            raise ValidationError(
                f"respondent {i}: rating {ratings[i, c]} for consideration {c + 1} "
                f"outside [1, {self.likert_max}]"
            )
        bad_rows = np.flatnonzero(~is_permutation_rows(rankings))
        if bad_rows.size:
            raise ValidationError(f"respondent {bad_rows[0]}: ranking row is not a permutation")
        ratings.setflags(write=False)
        rankings.setflags(write=False)
        object.__setattr__(self, "ratings", ratings)
        object.__setattr__(self, "rankings", rankings)

    @property
    def n(self) -> int:
        return self.ratings.shape[0]

    @property
    def n_considerations(self) -> int:
        return self.ratings.shape[1]

    @property
    def n_preferences(self) -> int:
        return self.rankings.shape[1]

    def subset(self, rows, min_respondents: int = 3) -> "ResponseDataset":
        rows = np.asarray(rows)
        return ResponseDataset(self.ratings[rows], self.rankings[rows], self.likert_max, min_respondents)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ResponseDataset):
            return NotImplemented
        return (
            self.likert_max == other.likert_max
            and np.array_equal(self.ratings, other.ratings)
            and np.array_equal(self.rankings, other.rankings)
        )

    __hash__ = None  # type: ignore[assignment]


def is_permutation_rows(rankings: np.ndarray) -> np.ndarray:
    """Boolean per row: does it hold each of 1..P exactly once?"""
    m = np.asarray(rankings)
    p = m.shape[1]
    return np.all(np.sort(m, axis=1) == np.arange(1, p + 1), axis=1)


@dataclass(frozen=True)
class DesignPoint:
    n: int
    C: int
    P: int
    likert_max: int = 5
    noise: float = 0.0

    def __post_init__(self) -> None:
        if self.n < 6:
            raise UsageError(f"group size must be at least 6, got {self.n}")
        if self.C < 1 or self.P < 2:
            raise UsageError(f"need C >= 1 and P >= 2, got C={self.C}, P={self.P}")
        if self.likert_max not in LIKERT_SCALES:
            raise UsageError(f"likert_max must be one of {LIKERT_SCALES}, got {self.likert_max}")
        if not 0.0 <= self.noise <= 1.0:
            raise UsageError(f"noise must lie in [0, 1], got {self.noise}")

    def with_noise(self, noise: float) -> "DesignPoint":
        return DesignPoint(self.n, self.C, self.P, self.likert_max, noise)

    @property
    def key(self) -> tuple[int, int, int, int]:
        """Design identity without the noise level."""
        return (self.n, self.C, self.P, self.likert_max)

    def to_dict(self) -> dict:
        return {"n": self.n, "C": self.C, "P": self.P, "likert_max": self.likert_max, "noise": self.noise}


def design_grid(
    group_sizes=(30,),
    considerations=STUDY_CONSIDERATIONS,
    preferences=STUDY_PREFERENCES,
    likert=STUDY_LIKERT,
) -> list[DesignPoint]:
    """Full factorial of design factors (noise left at 0)."""
    return [
        DesignPoint(n, c, p, lk)
        for n in group_sizes
        for c in considerations
        for p in preferences
        for lk in likert
    ]


@dataclass(frozen=True)
class LatentModel:
    """Constants of the structured response component."""

    loading_low: float = 0.5
    loading_high: float = 1.0
    rating_noise_sd: float = 0.3
    # per-item utility noise swaps preferences with near-equal loadings and
    # leaves near-zero correlations behind at noise=0
    utility_noise_sd: float = 0.0


DEFAULT_MODEL = LatentModel()


def _rng(seed: SeedLike) -> np.random.Generator:
    return np.random.default_rng(seed)


def _likert_cuts(likert_max: int) -> np.ndarray:
    nd = NormalDist()
    return np.array([nd.inv_cdf(k / likert_max) for k in range(1, likert_max)])


def random_permutations(rng: np.random.Generator, rows: int, p: int) -> np.ndarray:
    """``rows`` independent uniform permutations of 1..p."""
    return np.argsort(rng.random((rows, p)), axis=1) + 1


def generate_group(design: DesignPoint, seed: SeedLike, model: LatentModel = DEFAULT_MODEL) -> ResponseDataset:
    """Draw one synthetic group; deterministic in (design, seed, model)."""
    rng = _rng(seed)
    n, C, P, L = design.n, design.C, design.P, design.likert_max
    theta = rng.standard_normal(n)
    a = rng.choice((-1.0, 1.0), size=C) * rng.uniform(model.loading_low, model.loading_high, size=C)
    b = rng.choice((-1.0, 1.0), size=P) * rng.uniform(model.loading_low, model.loading_high, size=P)

    score = theta[:, None] * a + rng.normal(0.0, model.rating_noise_sd, size=(n, C))
    z = score / np.sqrt(a**2 + model.rating_noise_sd**2)
    ratings = 1 + np.searchsorted(_likert_cuts(L), z.ravel()).reshape(n, C)

    utility = theta[:, None] * b
    if model.utility_noise_sd > 0:
        utility = utility + rng.normal(0.0, model.utility_noise_sd, size=(n, P))
    rankings = np.argsort(np.argsort(-utility, axis=1, kind="stable"), axis=1) + 1

    # draws happen even at noise 0 so the structured part does not depend on noise
    swap_cells = rng.random((n, C)) < design.noise
    uniform_ratings = rng.integers(1, L + 1, size=(n, C))
    ratings = np.where(swap_cells, uniform_ratings, ratings)
    swap_rows = rng.random(n) < design.noise
    uniform_rankings = random_permutations(rng, n, P)
    rankings = np.where(swap_rows[:, None], uniform_rankings, rankings)
    return ResponseDataset(ratings, rankings, L)


def split_half(dataset: ResponseDataset, seed: SeedLike) -> tuple[ResponseDataset, ResponseDataset]:
    """Uniformly random partition of respondents into two equal halves."""
    n = dataset.n
    if n % 2:
        raise UsageError(f"split-half needs an even group size, got {n}")
    if n < 6:
        raise UsageError(f"split-half needs at least 6 respondents, got {n}")
    idx = split_indices(n, seed)
    return dataset.subset(idx[0]), dataset.subset(idx[1])


def split_indices(n: int, seed: SeedLike) -> tuple[np.ndarray, np.ndarray]:
    perm = _rng(seed).permutation(n)
    half = n // 2
    return np.sort(perm[:half]), np.sort(perm[half:])
