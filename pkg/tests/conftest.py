import pathlib

import numpy as np
import pytest

from nnk_image.imageio import read_pgm

DATA = pathlib.Path(__file__).parent / "data"
TEST_IMAGES = ("camera", "astronaut", "coffee")

# filled by tests/test_acceptance.py, printed after the run
ACCEPTANCE = {}


def load_test_image(name):
    img, _ = read_pgm(DATA / f"{name}.pgm")
    return img


@pytest.fixture(scope="session")
def images():
    return {name: load_test_image(name) for name in TEST_IMAGES}


@pytest.fixture(scope="session")
def camera(images):
    return images["camera"]


@pytest.fixture
def rng():
    return np.random.default_rng(20200425)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        ok, line = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key:>3}  {line}")
