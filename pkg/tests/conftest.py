from pathlib import Path

import numpy as np
import pytest

from subspace_superpixels import ImageBuffer

FIXTURES = Path(__file__).parent / "fixtures"

QUADRANT_COLORS = [
    [0.9, 0.1, 0.1],
    [0.1, 0.8, 0.2],
    [0.2, 0.2, 0.9],
    [0.9, 0.9, 0.2],
]

# four units in a 2x2 grid, numbered in raster order
GRID4_OMEGA = np.array(
    [
        [0, 1, 1, 0],
        [1, 0, 0, 1],
        [1, 0, 0, 1],
        [0, 1, 1, 0],
    ]
)


def quadrant_image(size=64):
    h = size // 2
    rgb = np.zeros((size, size, 3))
    rgb[:h, :h] = QUADRANT_COLORS[0]
    rgb[:h, h:] = QUADRANT_COLORS[1]
    rgb[h:, :h] = QUADRANT_COLORS[2]
    rgb[h:, h:] = QUADRANT_COLORS[3]
    return ImageBuffer(rgb)


def quadrant_labels(size=64):
    h = size // 2
    labels = np.zeros((size, size), dtype=np.int64)
    labels[:h, h:] = 1
    labels[h:, :h] = 2
    labels[h:, h:] = 3
    return labels


@pytest.fixture
def quadrants():
    return quadrant_image()


@pytest.fixture
def quadrant_gt():
    return quadrant_labels()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid4_omega():
    return GRID4_OMEGA.copy()


def random_omega(rng, n, p=0.4):
    upper = np.triu((rng.random((n, n)) < p).astype(np.int64), 1)
    return upper + upper.T


# -- acceptance summary -------------------------------------------------------

ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {key}: {detail}")
