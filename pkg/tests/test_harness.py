# -*- coding: utf-8 -*-
import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_array_equal

from rkMPC.ExperimentAssembler import ExperimentAssembler, reportTable, writeReport, writeSweep
from rkMPC.controllers.lmpc import ControllerOutput
from rkMPC.plants.kinematic import ControlInput
from rkMPC.utils.Errors import EmptyLog
from rkMPC.utils.RunLog import RUNLOG_COLUMNS, DriveLog, Metrics, RunLog, computeMetrics
from rkMPC.utils.testSuite import testSuite
from tests.helpers import kinematicConfig, nominalLog


def _runlog(lat, delta, rate, solve=None):
    n = len(lat)
    solve = np.ones(n) if solve is None else solve
    log = RunLog()
    for k in range(n):
        row = np.zeros(len(RUNLOG_COLUMNS))
        row[RUNLOG_COLUMNS.index("lat_err")] = lat[k]
        row[RUNLOG_COLUMNS.index("delta_final")] = delta[k]
        row[RUNLOG_COLUMNS.index("steer_rate")] = rate[k]
        row[RUNLOG_COLUMNS.index("solve_ms")] = solve[k]
        log.append(row)
    return log


class _standStill:
    def reset(self):
        pass

    def step(self, pose):
        u = ControlInput(0.0, 0.0)
        return ControllerOutput(u, u)


def test_metricsOfConstantError():
    log = _runlog(np.full(100, 0.1), np.zeros(100), np.zeros(100))
    m = computeMetrics(log)
    assert m.lateral == pytest.approx(0.1, abs=1e-15)
    assert m.steerRate == 0.0
    assert m.steps == 100
    assert not m.lapCompleted


def test_metricsOfAlternatingSteering():
    n = 50
    delta = 0.05 * (-1.0) ** np.arange(n)
    rate = np.abs(np.diff(delta, prepend=delta[0])) / 0.05
    log = _runlog(np.zeros(n), delta, rate, solve=np.arange(n, dtype=float))
    m = computeMetrics(log)
    assert m.steerRate == pytest.approx(2.0)
    assert m.solveMax == n - 1
    assert m.solveMean == pytest.approx((n - 1) / 2.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=40), st.randoms(use_true_random=False))
def test_metricsIgnoreRecordOrder(lat, random):
    lat = np.array(lat)
    order = list(range(len(lat)))
    random.shuffle(order)
    a = computeMetrics(_runlog(lat, np.zeros(len(lat)), np.abs(lat)))
    b = computeMetrics(_runlog(lat[order], np.zeros(len(lat)), np.abs(lat)[order]))
    assert a == b


def test_emptyLog():
    with pytest.raises(EmptyLog):
        computeMetrics(RunLog())
    ea = ExperimentAssembler(kinematicConfig("builtin:circle"), verbose=0)
    err, m = ea.computeMetrics(RunLog())
    assert "EmptyLog" in err and m is None


@pytest.mark.slow
def test_linearMpcCompletesLapOnNominalPlant():
    ea = ExperimentAssembler(kinematicConfig("builtin:oval"), controllername="lmpc", verbose=0)
    err, runlog = ea.runClosedLoop(laps=1, seed=0)
    assert err == ""
    assert runlog.meta["termination"] == "laps"
    assert runlog.meta["lapCompleted"]
    m = computeMetrics(runlog)
    assert m.lapCompleted
    assert m.lateral < 0.05
    assert np.all(np.diff(runlog.column("t")) > 0)


def test_standingVehicleIsReportedStalled():
    ea = ExperimentAssembler(kinematicConfig("builtin:circle"), verbose=0)
    ea.controller = _standStill()
    err, runlog = ea.runClosedLoop(laps=1, seed=0)
    assert err == ""
    assert runlog.meta["termination"] == "stalled"
    assert not runlog.meta["lapCompleted"]
    assert not computeMetrics(runlog).lapCompleted


def test_divergedRunReturnsPartialLog():
    cfg = kinematicConfig("builtin:circle", abortLateral=1e-6)
    cfg = dataclasses.replace(cfg, plant=dataclasses.replace(cfg.plant, initialLateral=1.0))
    ea = ExperimentAssembler(cfg, verbose=0)
    err, runlog = ea.runClosedLoop(laps=1, seed=3)
    assert err.startswith("DivergedRun")
    assert runlog.meta["diverged"]


def test_sameSeedReproducesRun():
    base = kinematicConfig("builtin:circuit", maxStepFactor=0.15)
    cfg = dataclasses.replace(
        base,
        plant=dataclasses.replace(
            base.plant, name="dynamic", noisePose=0.002, initialLateral=0.1, initialHeading=0.05
        ),
    )
    ea = ExperimentAssembler(cfg, verbose=0)
    _, a = ea.runClosedLoop(laps=1, seed=7)
    _, b = ea.runClosedLoop(laps=1, seed=7)
    _, c = ea.runClosedLoop(laps=1, seed=8)
    keep = [i for i, name in enumerate(RUNLOG_COLUMNS) if name != "solve_ms"]
    assert len(a) > 0
    assert_array_equal(a.records[:, keep], b.records[:, keep])
    assert not np.array_equal(a.records[:, keep], c.records[:, keep])


def test_driveLogSaveLoad(tmp_path, params):
    log = nominalLog(50, params)
    path = str(tmp_path / "drive.csv")
    log.save(path)
    back = DriveLog.load(path)
    assert back.T == log.T
    assert_array_equal(back.asArray(), log.asArray())


def test_driveLogSegmentsSurviveSaveLoad(tmp_path, params):
    log = nominalLog(60, params)
    log.meta["segments"] = [20, 45]
    path = str(tmp_path / "drive.csv")
    log.save(path)
    back = DriveLog.load(path)
    assert_array_equal(back.segmentIds(), log.segmentIds())
    assert back.segmentIds()[[0, 19, 20, 44, 45, 59]].tolist() == [0, 0, 1, 1, 2, 2]


def test_randomLogRecordsResets():
    ea = ExperimentAssembler(kinematicConfig("builtin:circle", abortLateral=0.02), verbose=0)
    err, log = ea.collectRandomLog(steps=400, seed=2)
    assert err == ""
    starts = log.meta["segments"]
    assert len(starts) > 0
    assert all(0 < s < len(log) for s in starts)
    assert log.segmentIds()[-1] == len(starts)


def test_driveLogRejectsIrregularTime(params):
    log = nominalLog(20, params)
    log.t[10] += 0.5 * params.T
    assert "sampling period" in log.validate()


def test_runLogToDriveLogUsesAppliedInputs():
    log = _runlog(np.zeros(3), [0.1, 0.2, 0.3], np.zeros(3))
    drive = log.toDriveLog(0.05)
    assert_array_equal(drive.inputs[:, 1], [0.1, 0.2, 0.3])


def test_collectNeedsLaps():
    ea = ExperimentAssembler(kinematicConfig("builtin:circle"), verbose=0)
    err, log = ea.collectTrainingLog(laps=0)
    assert "EmptyLog" in err and log is None
    assert ea.controllername == "lmpc"


def test_randomLogStaysInsideActuatorBox():
    ea = ExperimentAssembler(kinematicConfig("builtin:circuit"), verbose=0)
    err, log = ea.collectRandomLog(steps=200, seed=1)
    assert err == ""
    assert len(log) == 200
    assert log.validate() == ""
    assert np.all(log.inputs >= ea.params.lowerBound() - 1e-12)
    assert np.all(log.inputs <= ea.params.upperBound() + 1e-12)


def _metrics(lateral):
    return Metrics(lateral, 0.1, 0.5, 2.0, 4.0, True, 100)


def test_reportTableDeltas(tmp_path):
    cells = {
        ("oval", "lmpc"): [_metrics(0.2), _metrics(0.4)],
        ("oval", "kmpc"): [_metrics(0.1), None],
        ("oval", "rkmpc"): [_metrics(0.15), _metrics(0.15)],
    }
    table = reportTable(cells, ["lmpc", "kmpc", "rkmpc"])
    rows = {(r["controller"], r["kind"]): r["values"] for r in table}
    assert rows[("lmpc", "metric")][0] == pytest.approx(0.3)
    assert rows[("kmpc", "metric")] is None
    assert rows[("kmpc", "delta%")] is None
    assert rows[("rkmpc", "delta%")][0] == pytest.approx(-50.0)
    assert rows[("rkmpc", "delta%")][1] == pytest.approx(0.0)

    csvpath, txtpath = str(tmp_path / "report.csv"), str(tmp_path / "report.txt")
    writeReport(table, csvpath, txtpath)
    lines = open(csvpath).read().splitlines()
    assert lines[0] == "track,controller,kind,lateral,heading,steerRate,solveMean,solveMax"
    assert "oval,kmpc,metric,-,-,-,-,-" in lines
    assert len(open(txtpath).read().splitlines()) == len(table) + 1


def test_sweepMarksDivergedRuns(tmp_path):
    sweep = [
        {"track": "oval", "seed": 0, "controller": "rkmpc", "samples": 2000, "metrics": _metrics(0.1)},
        {"track": "oval", "seed": 0, "controller": "kmpc", "samples": 2000, "metrics": None},
    ]
    rows = writeSweep(sweep, str(tmp_path / "sweep.csv"))
    assert len(rows) == 10
    assert all(math.isnan(r["value"]) for r in rows if r["controller"] == "kmpc")
    text = open(str(tmp_path / "sweep.csv")).read()
    assert "oval,0,kmpc,2000,lateral,nan" in text


def test_outputPathHonoursEnvironment(tmp_path):
    ea = ExperimentAssembler(kinematicConfig("builtin:circle"), verbose=0)
    path = ea.outputPath("run.csv")
    assert path.startswith(str(tmp_path / "output"))
    assert path == ea.outputPath("run.csv")


def test_savedArtifacts(params):
    ea = ExperimentAssembler(kinematicConfig("builtin:circle", maxStepFactor=0.05), verbose=0)
    _, runlog = ea.runClosedLoop(laps=1, seed=0)
    err, path = ea.saveRunLog(runlog)
    assert err == ""
    back = RunLog.load(path)
    assert_array_equal(back.records, runlog.records)
    err, png = ea.plotRun(runlog)
    assert err == "" and png.endswith("run.png")


@pytest.mark.slow
def test_comparisonWritesReport(tmp_path):
    cfg = kinematicConfig(
        "builtin:circle",
        collectLaps=1,
        datasetSizes=(200,),
        mainDatasetSize=400,
        controllers=("lmpc", "rkmpc"),
        maxStepFactor=1.5,
    )
    cfg = dataclasses.replace(cfg, train=dataclasses.replace(cfg.train, epochs=2))
    ea = ExperimentAssembler(cfg, verbose=0)
    err, result = ea.runComparison(str(tmp_path / "compare"))
    assert err == ""
    names = {r["controller"] for r in result["table"]}
    assert names == {"lmpc", "rkmpc"}
    for f in ("experiment.yml", "drivelog.csv", "report.csv", "report.txt", "sweep.csv", "sweep.png"):
        assert (tmp_path / "compare" / f).exists()


def test_collectDatasetsExtendsShortCollection():
    ea = ExperimentAssembler(kinematicConfig("builtin:circle", collectLaps=1), verbose=0)
    err, first = ea.collectDatasets(0, modes=("absolute",))
    assert err == "" and first["laps"] == 1
    have = len(first["absolute"])
    err, more = ea.collectDatasets(have + 100, modes=("absolute",))
    assert err == ""
    assert more["laps"] >= 2
    assert len(more["absolute"]) >= have + 100
    assert more["residual"] is None


def test_collectDatasetsFailsLoudly():
    ea = ExperimentAssembler(kinematicConfig("builtin:circle", collectLaps=1), verbose=0)
    err, out = ea.collectDatasets(10 ** 7, modes=("absolute",))
    assert out is None
    assert "InsufficientData" in err and "10000000 requested" in err


def test_selfTestRejectsSmallReferenceSize(capsys):
    cfg = kinematicConfig("builtin:circle", datasetSizes=(2000,), referenceDatasetSize=1000)
    failures = testSuite(cfg, verbose=0, skip=["Reduction identity", "No-mismatch null result"])
    out = capsys.readouterr().out
    assert failures == 1
    assert "+Passed: sample count" in out
    assert "referenceDatasetSize 1000 must exceed the largest sweep size 2000" in out
    assert "-Direction of effect-" not in out and "-Timing-" not in out
