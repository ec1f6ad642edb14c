import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from corpus import desk_corpus, training_corpus  # noqa: E402

from grayetc import KeySet  # noqa: E402
from grayetc.gtable import gtable_from_images  # noqa: E402


@pytest.fixture(scope="session")
def desk():
    return desk_corpus()


@pytest.fixture(scope="session")
def desk_images(desk):
    return [im for _, im in desk]


@pytest.fixture(scope="session")
def gtable_420():
    return gtable_from_images((im for _, im in training_corpus()), "420")


@pytest.fixture(scope="session")
def keys():
    return KeySet.from_seed("tests")


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
