"""Shared helpers for the test suite."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


def random_panel(seed: int, count: int, n_lo: int = 10, n_hi: int = 50):
    """Seeded batch of (y, lam) solver test cases with lam in [0, 2*lambda_max]."""
    from campaigntrends import lambda_max

    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(count):
        n = int(rng.integers(n_lo, n_hi + 1))
        y = rng.uniform(0.0, 10.0, n)
        lam = float(rng.uniform(0.0, 2.0 * lambda_max(y)))
        cases.append((y, lam))
    return cases


def bendy_signal(seed: int, n: int = 90, n_knots: int = 10, noise_frac: float = 0.1):
    """Piecewise-linear signal with clearly separated knots plus scaled noise.

    Knots keep at least 4 days apart and slopes alternate sign with magnitude
    in [0.5, 1.5], so every bend is well identified at moderate noise.
    """
    from campaigntrends import piecewise_linear

    rng = np.random.default_rng(seed)
    while True:
        knots = np.sort(rng.choice(np.arange(5, n - 5), n_knots, replace=False))
        if n_knots < 2 or np.min(np.diff(knots)) >= 4:
            break
    signs = np.where(np.arange(n_knots + 1) % 2 == 0, 1.0, -1.0)
    slopes = rng.uniform(0.5, 1.5, n_knots + 1) * signs
    signal = piecewise_linear(n, [int(k) for k in knots], slopes)
    noise = rng.normal(0.0, noise_frac * float(np.ptp(signal)), n)
    return signal + noise, [int(k) for k in knots]
