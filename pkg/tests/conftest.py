import numpy as np
import pytest

import warpgen as w


@pytest.fixture
def g():
    return np.random.default_rng(20240611)


@pytest.fixture
def rgb_image(g):
    return g.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)


@pytest.fixture
def small_cfg():
    """Fast unit-test config: small canvas, default distributions."""
    cfg = w.GenConfig(seed=7)
    cfg.width = cfg.height = 96
    return cfg
