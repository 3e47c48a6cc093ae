"""
Shared fixtures: the two-state benchmark loop, scalar loops and an isolated configuration
"""

import importlib
import json

import numpy as np
import pytest

from msi_cert.config.settings import ConfigManager
from msi_cert.core.models import SystemModel

# modules holding a reference to the process-wide configuration
_CONFIG_USERS = (
    "msi_cert.core.delay_core",
    "msi_cert.core.iqc",
    "msi_cert.core.sdp_backend",
    "msi_cert.core.model_analysis",
    "msi_cert.core.data_analysis",
    "msi_cert.core.msi_search",
    "msi_cert.core.simulate",
    "msi_cert.cli",
)

# discretized with base period 0.01 s, rounded to six decimals
BENCHMARK_A = [[1.0, 0.01], [0.0, 0.999]]
BENCHMARK_B = [[5e-6], [1e-3]]
BENCHMARK_K = [[-3.75, -11.5]]


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """Fresh configuration under a temporary home for every test"""
    home = tmp_path / "msi_cert_home"
    monkeypatch.setenv(ConfigManager.HOME_ENV, str(home))
    monkeypatch.delenv(ConfigManager.SOLVER_ENV, raising=False)
    monkeypatch.delenv(ConfigManager.LOG_LEVEL_ENV, raising=False)
    fresh = ConfigManager(home)
    monkeypatch.setattr("msi_cert.config.settings.config", fresh)
    for name in _CONFIG_USERS:
        monkeypatch.setattr(importlib.import_module(name), "config", fresh)
    return fresh


@pytest.fixture
def benchmark_model():
    return SystemModel(A=BENCHMARK_A, B=BENCHMARK_B, K=BENCHMARK_K)


@pytest.fixture
def benchmark_file(tmp_path):
    path = tmp_path / "system.json"
    path.write_text(json.dumps({"A": BENCHMARK_A, "B": BENCHMARK_B, "K": BENCHMARK_K}))
    return path


@pytest.fixture
def passive_scalar():
    """a=0.4, b=0.5, K=1: certifiable for arbitrary h̄ once passivity is used"""
    return SystemModel.scalar(0.4, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
