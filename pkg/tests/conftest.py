import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def toy_dir() -> Path:
    return FIXTURES / "toy"


@pytest.fixture
def native_kernel():
    """Run a test on the compiled kernel when built (it shares the
    oracle's accumulation order, so float comparisons match bit for
    bit); fall back to the active backend otherwise."""
    from dmner import _kernels

    if "native" in _kernels.available_backends():
        _kernels.use_backend("native")
    yield
    _kernels.use_backend("auto")
