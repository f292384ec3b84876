import sys
from pathlib import Path

import numpy as np
import pytest

# make tests/oracles.py and tests/helpers.py importable regardless of cwd
sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
