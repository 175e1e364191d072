import numpy as np
import pytest
from hypothesis import settings

from etcsns.corpus import load_corpus
from etcsns.image import RasterImage

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


@pytest.fixture(scope="session")
def astronaut(corpus):
    return dict(corpus)["00_astronaut"]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def noise_image(rng, width, height):
    return RasterImage(rng.integers(0, 256, (height, width, 3), dtype=np.uint8))


def smooth_image(width, height, seed=0):
    """Low-frequency color field that JPEG compresses gracefully."""
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    phase = seed * 0.7
    r = 128 + 90 * np.sin(x / 9.0 + phase) * np.cos(y / 13.0)
    g = 128 + 80 * np.cos(x / 17.0 - y / 11.0 + phase)
    b = 128 + 70 * np.sin((x + y) / 21.0)
    return RasterImage(np.clip(np.stack([r, g, b], -1), 0, 255).round().astype(np.uint8))


_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = {}


@pytest.fixture
def report(request):
    """Record one pass/fail line for an acceptance criterion, then return the verdict."""
    lines = request.config.stash[_ACCEPTANCE]

    def record(number, title, ok, detail):
        line = f"criterion {number:>2}  {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        lines[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
