import math

import numpy as np
import pytest

from dri.datagen import DesignPoint, generate_group


def brute_force_dri(pairs, tau=0.2, lam=1 / math.sqrt(2), method="standard", mode="floor-referenced"):
    """Plain-loop index over (r, q) tuples; shares no code with the library."""
    total = 0.0
    count = 0
    for r, q in pairs:
        if r is None or q is None:
            continue
        dist = abs(r - q) / math.sqrt(2)
        if method == "modified":
            signal = max(abs(r), abs(q))
            w = signal / tau if signal <= tau else 1.0
            if mode == "as-printed":
                dist = dist * w
            elif w < 1.0:
                dist = w * dist + (1 - w) * lam
        total += dist
        count += 1
    mean = total / count
    return (-2 * mean + lam) / lam


@pytest.fixture
def rng():
    return np.random.default_rng(20260415)


@pytest.fixture
def small_group():
    return generate_group(DesignPoint(n=30, C=6, P=4, likert_max=5, noise=0.0), seed=11)
