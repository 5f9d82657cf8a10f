import itertools
from fractions import Fraction

import numpy as np
import pytest

from asymp.experiments import registry_lookup


@pytest.fixture(scope="session")
def bmp():
    return registry_lookup("bmp")


@pytest.fixture(scope="session")
def brps():
    return registry_lookup("brps")


@pytest.fixture(scope="session")
def mne():
    return registry_lookup("mne")


@pytest.fixture(scope="session")
def kuhn():
    return registry_lookup("kuhn")


def simplex_grid(k, resolution):
    """All points of the k-simplex whose coordinates are multiples of ``resolution``."""
    n = int(round(1 / resolution))
    if k == 3:
        i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
        keep = i + j <= n
        i, j = i[keep], j[keep]
        return np.stack([i, j, n - i - j], axis=1) / n
    pts = [c for c in itertools.product(range(n + 1), repeat=k - 1) if sum(c) <= n]
    return np.array([list(c) + [n - sum(c)] for c in pts]) / n


def F(p, q=1):
    return Fraction(p, q)


@pytest.fixture(scope="session")
def kuhn_runs(kuhn):
    """10^4-iteration records for the perturbed CFR+ variants, evaluated every 10."""
    from asymp.cfr import CfrConfig, run_cfr
    return {v: run_cfr(kuhn, CfrConfig.make(v, mu=0.01, iterations=10_000, eval_every=10))
            for v in ("asymp-cfr+", "symp-cfr+")}
