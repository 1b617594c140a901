# tests/test_acceptance.py
"""
Experimentos de aceptación completos (minutos a horas de CPU)
"""
import os

import pytest

if os.getenv("BT_RUN_ACCEPTANCE", "0") != "1":
    pytest.skip(
        "Experimentos de aceptación desactivados (BT_RUN_ACCEPTANCE=1 para ejecutarlos)",
        allow_module_level=True,
    )

from config.run_config import RunConfig
from scripts.acceptance import AcceptanceManager


def test_acceptance_criteria(tmp_path):
    config = (RunConfig()
              .with_value('paths', 'workdir', str(tmp_path / "work"))
              .with_value('paths', 'runs_dir', str(tmp_path / "runs")))
    results = AcceptanceManager(config, output_dir=tmp_path / "acceptance").run_full_acceptance()

    assert not results['errors']
    for name, criterion in results['criteria'].items():
        assert criterion['passed'], f"{name}: {criterion}"
    assert (tmp_path / "acceptance" / "acceptance.json").is_file()
