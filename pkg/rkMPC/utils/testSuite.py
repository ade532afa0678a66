# -*- coding: utf-8 -*-
"""
Test suite to exercise the closed-loop experiments end to end: the checks here are
too slow or too seed-dependent for the unit tests

Version: 1.0.0  (October 2026)
"""

import dataclasses
import math
import time

import numpy as np

from rkMPC.ExperimentAssembler import ExperimentAssembler
from rkMPC.plants.kinematic import ControlInput, VehicleState, stepKinematic
from rkMPC.utils.Config import ExperimentConfig, loadConfig
from rkMPC.utils.Koopman import buildResidualDataset
from rkMPC.utils.RunLog import DriveLog

"""
When run from the command line, testSuite accepts the following parameters:
    -c     	experiment configuration file; default: builtin defaults
    -e     	training epochs per model; default=60
    -v     	verbosity 0..5; default=2
    --skip	names of tests to skip
"""


def _synthLog(n, params):
    """
    Nominal-model drive on slowly varying inputs, n records
    """
    state = VehicleState(0.0, 0.0, 0.0)
    rows = []
    for k in range(n):
        u = ControlInput(1.0 + 0.2 * math.sin(0.01 * k), 0.15 * math.sin(0.005 * k))
        rows.append([k * params.T, state.x, state.y, state.theta, u.v, u.delta])
        state = stepKinematic(state, u, params)
    data = np.array(rows)
    return DriveLog(data[:, 0], data[:, 1:4], data[:, 4:6], params.T)


def testSuite(cfg, epochs=60, verbose=2, skip=()):
    """
    Regression testing script for the comparison protocol. Prints one '+' line per
      check.

    Args:
        cfg: ExperimentConfig
        epochs: training epochs per model
        verbose: logging level of the assemblers
        skip: test names to skip
    """
    tests = [
        "Preprocessing arithmetic",
        "Reduction identity",
        "No-mismatch null result",
        "Direction of effect",
        "Data efficiency",
        "Timing",
    ]
    tests = [t for t in tests if t not in skip]
    cfg = dataclasses.replace(cfg, train=dataclasses.replace(cfg.train, epochs=epochs))
    failures = 0

    def report(name, passed, detail=""):
        nonlocal failures
        if not passed:
            failures += 1
        print("+" + ("Passed: " if passed else "Error: ") + name + (" - " + detail if detail else ""))

    if "Preprocessing arithmetic" in tests:
        print("\n-Preprocessing arithmetic-")
        log = _synthLog(1527, cfg.vehicle)
        pp = dataclasses.replace(
            cfg.preprocess, conversionRatio=0.3, windowLength=51, predictedInput="logged"
        )
        data = buildResidualDataset(log, cfg.vehicle, pp)
        drawn = int(data.meta["origins"])
        skipped = int(data.meta["windowsSkipped"])
        failed = int(data.meta["inversionFailures"])
        expected = (drawn - skipped) * 50 - failed
        report(
            "sample count",
            drawn == math.floor(0.3 * 1527) and len(data) == expected,
            str(len(data)) + " samples from " + str(drawn) + " origins, " + str(skipped)
            + " windows skipped",
        )
        report(
            "reference-scale total",
            abs(drawn * 50 - 22950) <= 51 * 2,
            "floor(0.3 N) x (N_p - 1) = " + str(drawn * 50),
        )

    if "Reduction identity" in tests:
        print("\n-Reduction identity-")
        pinned = dataclasses.replace(
            cfg.mpc.rkmpc, residualLow=(0.0, 0.0), residualHigh=(0.0, 0.0)
        )
        pcfg = dataclasses.replace(cfg, mpc=dataclasses.replace(cfg.mpc, rkmpc=pinned))
        ea = ExperimentAssembler(pcfg, controllername="lmpc", verbose=verbose)
        _, base = ea.runClosedLoop(1, 0)
        ea.setController("rkmpc")
        _, res = ea.runClosedLoop(1, 0)
        same = np.array_equal(base.column("v_final"), res.column("v_final")) and np.array_equal(
            base.column("delta_final"), res.column("delta_final")
        )
        report("pinned residual reproduces the linear MPC", same, str(len(res)) + " steps")

    if "No-mismatch null result" in tests:
        print("\n-No-mismatch null result-")
        ea = ExperimentAssembler(cfg, plantname="kinematic", controllername="lmpc", verbose=verbose)
        err, log = ea.collectTrainingLog()
        _, data = ea.preprocess(log, "residual")
        _, model = ea.train(data)
        ea.rmodel = model
        ea.setController("rkmpc")
        err, run = ea.runClosedLoop(1, 0)
        du = np.hypot(run.column("dv"), run.column("ddelta"))
        u0 = np.hypot(run.column("v_cmd"), run.column("delta_cmd"))
        ratio = float(np.mean(du) / np.mean(u0))
        report("mean |du| within 5% of mean |U0|", not err and ratio <= 0.05, "{:.4f}".format(ratio))

    models = {}
    sizes = sorted(set(int(s) for s in cfg.harness.datasetSizes))
    full = int(cfg.harness.referenceDatasetSize)
    if "Direction of effect" in tests or "Data efficiency" in tests or "Timing" in tests:
        print("\n-Training data-")
        ea = ExperimentAssembler(cfg, controllername="lmpc", verbose=verbose)
        err = ""
        if sizes and full <= sizes[-1]:
            err = (
                "referenceDatasetSize " + str(full) + " must exceed the largest sweep size "
                + str(sizes[-1])
            )
        if not err:
            err, collected = ea.collectDatasets(max(sizes + [full]))
        report(
            "datasets hold the requested samples",
            not err,
            err or str(len(collected["residual"])) + " residual, " + str(len(collected["absolute"]))
            + " absolute samples from " + str(collected["laps"]) + " laps",
        )
        if err:
            tests = [t for t in tests if t not in ("Direction of effect", "Data efficiency", "Timing")]
        else:
            for size in sizes + [full]:
                _, models[("residual", size)] = ea.train(collected["residual"].subsample(size, 0))
            for size in sizes:
                _, models[("absolute", size)] = ea.train(collected["absolute"].subsample(size, 0))

    if "Direction of effect" in tests:
        print("\n-Direction of effect-")
        ea = ExperimentAssembler(cfg, controllername="lmpc", verbose=verbose)
        lat = {"lmpc": [], "rkmpc": []}
        head = {"lmpc": [], "rkmpc": []}
        ea.rmodel = models[("residual", full)]
        for seed in cfg.harness.seeds:
            for ctrl in ("lmpc", "rkmpc"):
                ea.setController(ctrl)
                err, run = ea.runClosedLoop(cfg.harness.laps, seed)
                _, m = ea.computeMetrics(run)
                lat[ctrl].append(m.lateral)
                head[ctrl].append(m.heading)
        l0, l1 = np.mean(lat["lmpc"]), np.mean(lat["rkmpc"])
        h0, h1 = np.mean(head["lmpc"]), np.mean(head["rkmpc"])
        change = 100.0 * (l1 - l0) / l0
        report("lateral error reduced", l1 < l0, "{:+.2f}% ({:.4f} -> {:.4f} m)".format(change, l0, l1))
        report("reduction of at least 5%", change <= -5.0, "{:+.2f}%".format(change))
        report("heading error not increased", h1 <= h0, "{:.4f} -> {:.4f} rad".format(h0, h1))

    if "Data efficiency" in tests:
        print("\n-Data efficiency-")
        ea = ExperimentAssembler(cfg, controllername="lmpc", verbose=verbose)
        rk = {}
        for size in sizes:
            ea.rmodel = models[("residual", size)]
            ea.kmodel = models[("absolute", size)]
            ea.setController("rkmpc")
            rerr, rrun = ea.runClosedLoop(cfg.harness.laps, 0)
            ea.setController("kmpc")
            kerr, krun = ea.runClosedLoop(cfg.harness.laps, 0)
            rdone = not rerr and rrun.meta.get("lapCompleted")
            rk[size] = ea.computeMetrics(rrun)[1].lateral if rdone else math.inf
            klat = ea.computeMetrics(krun)[1].lateral if not kerr else math.inf
            report(
                "rkmpc at " + str(size) + " samples completes and beats kmpc",
                bool(rdone) and rk[size] < klat,
                "rkmpc {:.4f} m, kmpc {}".format(rk[size], "-" if kerr else "{:.4f} m".format(klat)),
            )
        if rk:
            largest = max(rk)
            ea.rmodel = models[("residual", full)]
            ea.setController("rkmpc")
            _, run = ea.runClosedLoop(cfg.harness.laps, 0)
            reference = ea.computeMetrics(run)[1].lateral
            report(
                "rkmpc at " + str(largest) + " samples within 10% of " + str(full),
                rk[largest] <= 1.1 * reference,
                "{:.4f} vs {:.4f} m".format(rk[largest], reference),
            )

    if "Timing" in tests:
        print("\n-Timing-")
        ea = ExperimentAssembler(
            cfg, controllername="lmpc", rmodel=models[("residual", full)], verbose=verbose
        )
        ea.setController("rkmpc")
        start = time.time()
        _, run = ea.runClosedLoop(1, 0)
        _, m = ea.computeMetrics(run)
        report(
            "mean rkmpc solve time below 50 ms",
            m.solveMean < 50.0,
            "{:.2f} ms mean, {:.2f} ms max, lap in {:.1f} s".format(m.solveMean, m.solveMax, time.time() - start),
        )

    print("\n" + ("All checks passed" if not failures else str(failures) + " checks failed"))
    return failures


if __name__ == "__main__":
    import argparse

    parser = argparse.ArgumentParser()

    parser.add_argument(
        "-c", action="store", dest="config", default=None, help="experiment configuration"
    )
    parser.add_argument(
        "-e", action="store", dest="epochs", type=int, default=60, help="training epochs"
    )
    parser.add_argument(
        "-v", action="store", dest="verbose", type=int, default=2, help="verbosity 0..5"
    )
    parser.add_argument("--skip", nargs="*", default=[], help="names of tests to skip")

    args = parser.parse_args()

    config = loadConfig(args.config) if args.config else ExperimentConfig()
    testSuite(config, args.epochs, args.verbose, args.skip)
