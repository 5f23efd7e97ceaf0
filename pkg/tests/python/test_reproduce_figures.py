"""
Integration Tests for the Figure Reproduction Script
Tests scenario outputs written by the reproduction manager
"""

import json
import sys
from pathlib import Path

import pandas as pd
import pytest

ROOT = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(ROOT))
sys.path.insert(0, str(ROOT / "scripts"))

from ec3lab.config import reset_config_manager
from ec3lab.errors import DomainError
from reproduce_figures import FigureReproductionManager


@pytest.fixture
def manager(tmp_path, monkeypatch):
    monkeypatch.delenv("EC3LAB_CONFIG_FILE", raising=False)
    reset_config_manager()
    yield FigureReproductionManager(tmp_path, jobs=1, seeds=2, steps_per_unit=10)
    reset_config_manager()


class TestScenarios:
    """Test individual reproduction scenarios on coarse grids"""

    def test_scaling_covers_all_factors(self, manager):
        result = manager.scaling()
        assert result["T0"] == 160.0
        assert set(result["J"]) == {"2", "4", "16"}
        for entry in result["J"].values():
            assert entry["max_deviation"] >= 0.0
            assert 0.0 <= entry["scaled_final_fidelity"] <= 1.0 + 1e-12

    def test_scaling_steps_align_with_samples(self, manager):
        manager.steps_per_unit = 7
        result = manager.scaling(T0=3.0)
        assert result["steps"] >= 21
        assert set(result["J"]) == {"2", "4", "16"}

    def test_ms_identity_table(self, manager, tmp_path):
        assert manager.ms_identity() == {"all_pass": True}
        frame = pd.read_csv(tmp_path / "ms_identity.csv")
        assert len(frame) == 15
        manifest = json.loads((tmp_path / "ms_identity.csv.manifest.json").read_text())
        assert manifest["command"] == "reproduce:ms_identity.csv"

    def test_failed_scenario_is_reported(self, manager, monkeypatch):
        def broken():
            raise DomainError("no grid")

        monkeypatch.setattr(manager, "ms_identity", broken)
        summary = manager.run(["ms-identity"])
        assert summary["scenarios"]["ms-identity"]["status"] == "failed"
