# -*- coding: utf-8 -*-
import pytest

from rkMPC.plants.kinematic import VehicleParams
from rkMPC.utils.Config import ExperimentConfig


@pytest.fixture(autouse=True)
def outputRoot(tmp_path, monkeypatch):
    monkeypatch.setenv("RKMPC_OUTPUT_ROOT", str(tmp_path / "output"))


@pytest.fixture
def params():
    return VehicleParams()


@pytest.fixture
def cfg():
    return ExperimentConfig()
