import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from free_fermion.momentum import BETA_CRITICAL  # noqa: E402
from lattice.model import ModelSpec, diagonal_interaction  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: desk-scale acceptance checks (deselect with -m 'not slow')")


@pytest.fixture
def make_spec():
    """Factory for small model parameter sets"""

    def _make(M=3, beta=0.3, lam=0.0, a=1.0, v_table=None):
        if v_table is None and lam != 0.0:
            v_table = diagonal_interaction()
        return ModelSpec(M=M, beta=beta, lam=lam, a=a, v_table=v_table or {})

    return _make


@pytest.fixture
def critical_spec():
    """Nearest-neighbour model at the critical coupling"""
    return ModelSpec(M=4, beta=BETA_CRITICAL)


@pytest.fixture
def config_dir(tmp_path):
    """Temporary config directory with a minimal default.yaml"""
    path = tmp_path / "config"
    path.mkdir()
    (path / "default.yaml").write_text(
        "logging:\n  level: INFO\n"
        "run:\n  seed: 7\n  threads: 1\n"
        "output:\n  dir: out\n"
        "numerics:\n  grassmann_prune: 1.0e-15\n  grassmann_max_generators: 40\n"
    )
    return path
