import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

os.environ.setdefault("CARNOT_SETTINGS_DIR", tempfile.mkdtemp(prefix="carnot-settings-"))
os.environ.setdefault("CARNOT_RUNTIME_DIR", tempfile.mkdtemp(prefix="carnot-runtime-"))

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "py_modules"))
sys.path.insert(0, str(ROOT))

from services.algebra import builtin_group  # noqa: E402

GROUP_NAMES = ("heisenberg1", "heisenberg2", "free_step2(3)", "engel")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: statistical checks with large sample counts")


@pytest.fixture
def h1():
    return builtin_group("heisenberg1")


@pytest.fixture
def h2():
    return builtin_group("heisenberg(2)")


@pytest.fixture
def engel():
    return builtin_group("engel")


@pytest.fixture
def free3():
    return builtin_group("free_step2(3)")


@pytest.fixture(params=GROUP_NAMES)
def any_group(request):
    return builtin_group(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(7)
