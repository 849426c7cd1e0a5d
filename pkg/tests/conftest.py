import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ensbook.synth import generate_synthetic_ensemble


@pytest.fixture(scope="session")
def small_ens(tmp_path_factory):
    """2x3 ensemble of 16^3 volumes with moderate duplication."""
    out = tmp_path_factory.mktemp("ens_small")
    return generate_synthetic_ensemble(
        out, runs=2, timesteps=3, dims=(16, 16, 16),
        duplication_rate=0.6, perturbation=0.5, seed=11,
    )


@pytest.fixture(scope="session")
def identical_ens(tmp_path_factory):
    """3x2 ensemble where every run is identical."""
    out = tmp_path_factory.mktemp("ens_identical")
    return generate_synthetic_ensemble(
        out, runs=3, timesteps=2, dims=(16, 16, 16),
        duplication_rate=1.0, perturbation=0.0, seed=3,
    )


@pytest.fixture(scope="session")
def runs_only_ens(tmp_path_factory):
    """4x1 ensemble: volumes differ only by per-run perturbation."""
    out = tmp_path_factory.mktemp("ens_runs_only")
    return generate_synthetic_ensemble(
        out, runs=4, timesteps=1, dims=(16, 16, 16),
        duplication_rate=0.5, perturbation=0.5, seed=7,
    )
