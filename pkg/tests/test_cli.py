# -*- coding: utf-8 -*-
import os

import pytest

from rkMPC.cli import main
from rkMPC.utils.Config import saveConfig
from rkMPC.utils.Koopman import KoopmanDataset
from tests.helpers import kinematicConfig


@pytest.fixture
def config(tmp_path):
    path = str(tmp_path / "experiment.yml")
    saveConfig(kinematicConfig("builtin:circle"), path)
    return path


def test_usageErrors(config):
    assert main([]) == 1
    assert main(["simulate", "--config", config, "--controller", "pid"]) == 1
    assert main(["collect", "--config", config, "--out", "drive.csv"]) == 1
    assert main(["simulate", "--controller", "lmpc"]) == 1
    assert main(["eval", "--config", config, "--controller", "rkmpc"]) == 1


def test_runtimeErrors(tmp_path, config):
    assert main(["simulate", "--config", str(tmp_path / "none.yml"), "--controller", "lmpc"]) == 2
    assert main(["simulate", "--config", config, "--controller", "kmpc"]) == 2
    assert main(
        ["eval", "--config", config, "--controller", "rkmpc", "--model", str(tmp_path / "none.json")]
    ) == 2


@pytest.mark.slow
def test_collectThenPreprocess(tmp_path, config, capsys):
    drive = str(tmp_path / "drive.csv")
    data = str(tmp_path / "data.csv")
    assert main(["collect", "--config", config, "--laps", "1", "--out", drive, "--verbose", "0"]) == 0
    assert os.path.exists(drive)
    assert main(["preprocess", "--config", config, "--log", drive, "--out", data, "--verbose", "0"]) == 0
    assert len(KoopmanDataset.load(data)) > 0
    assert "samples written" in capsys.readouterr().out


@pytest.mark.slow
def test_simulateWritesRunLog(config, capsys):
    assert main(["simulate", "--config", config, "--controller", "lmpc", "--laps", "1", "--verbose", "0"]) == 0
    out = capsys.readouterr().out
    assert "lateral error" in out
    assert "run log: " + os.environ["RKMPC_OUTPUT_ROOT"] in out
