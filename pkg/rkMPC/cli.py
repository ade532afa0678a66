# -*- coding: utf-8 -*-
"""
Command-line surface: simulate, collect, preprocess, train, eval, compare.

Exit codes: 0 success, 1 usage error, 2 runtime error (including a diverged
single run). Relative output names land in a run-stamped folder under the
configured output directory; RKMPC_OUTPUT_ROOT overrides that directory.

Version: 1.0.0  (October 2026)
"""

import argparse
import logging
import os
import sys

from rkMPC.ExperimentAssembler import ExperimentAssembler
from rkMPC.utils.Errors import RKMPCError
from rkMPC.utils.Koopman import KoopmanDataset
from rkMPC.utils.RunLog import DriveLog

logerr = "ERROR: [CLI] "

CONTROLLERS = ["lmpc", "kmpc", "rkmpc"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        sys.stderr.write("\n" + self.prog + ": error: " + message + "\n")
        raise UsageError(message)


def buildParser():
    parser = _Parser(prog="rkmpc", description="Residual Koopman MPC experiments")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def common(p):
        p.add_argument("--config", required=True, help="experiment YAML file")
        p.add_argument("--seed", type=int, default=None, help="overrides every configured seed")
        p.add_argument("--verbose", type=int, default=3, help="0 silent .. 5 debug")
        p.add_argument("--logfile", default=None, help="divert log output to file")

    p = sub.add_parser("simulate", help="one closed-loop run")
    common(p)
    p.add_argument("--controller", required=True, choices=CONTROLLERS)
    p.add_argument("--laps", type=int, default=None)
    p.add_argument("--model", default=None, help="Koopman model for kmpc/rkmpc")
    p.add_argument("--plant", default=None, help="truth plant: dynamic, kinematic")

    p = sub.add_parser("collect", help="drive with the linear MPC and save a drive log")
    common(p)
    p.add_argument("--laps", type=int, required=True)
    p.add_argument("--out", required=True, help="drive log CSV")
    p.add_argument("--random", type=int, default=None, metavar="STEPS",
                   help="random-excitation log of STEPS periods instead of laps")

    p = sub.add_parser("preprocess", help="drive log to Koopman dataset")
    common(p)
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True, help="dataset CSV")
    p.add_argument("--mode", choices=["residual", "absolute"], default="residual")

    p = sub.add_parser("train", help="train the lifting network and (A, B)")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="model JSON")
    p.add_argument("--mode", choices=["residual", "absolute"], default="residual")

    p = sub.add_parser("eval", help="closed-loop run with a trained model")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--controller", required=True, choices=CONTROLLERS)
    p.add_argument("--laps", type=int, default=None)

    p = sub.add_parser("compare", help="paired comparison and data-volume sweep")
    common(p)
    return parser


def _assembler(args, controller="lmpc", model=None, plant=None):
    rmodel = model if controller == "rkmpc" else None
    kmodel = model if controller == "kmpc" else None
    return ExperimentAssembler(
        args.config,
        plantname=plant,
        controllername=controller,
        rmodel=rmodel,
        kmodel=kmodel,
        verbose=args.verbose,
        seed=args.seed,
        logfile=args.logfile,
    )


def _outPath(ea, name):
    return name if os.path.isabs(name) else ea.outputPath(name)


def _closedLoop(args, model=None, plant=None):
    ea = _assembler(args, args.controller, model, plant)
    err, runlog = ea.runClosedLoop(args.laps)
    if runlog is None:
        return 2
    _, path = ea.saveRunLog(runlog, filename="runlog_" + args.controller + ".csv")
    ea.plotRun(runlog, filename="run_" + args.controller + ".png")
    print("run log: " + str(path))
    if err:
        print(err)
        return 2
    _, m = ea.computeMetrics(runlog)
    print("controller        " + args.controller)
    print("laps completed    " + str(runlog.meta.get("lapsCompleted")))
    print("lateral error     {:.6f} m".format(m.lateral))
    print("heading error     {:.6f} rad".format(m.heading))
    print("steering rate     {:.6f} rad/s".format(m.steerRate))
    print("solve time        {:.3f} ms mean, {:.3f} ms max".format(m.solveMean, m.solveMax))
    return 0


def _simulate(args):
    return _closedLoop(args, args.model, args.plant)


def _eval(args):
    return _closedLoop(args, args.model)


def _collect(args):
    ea = _assembler(args)
    if args.random is not None:
        err, log = ea.collectRandomLog(args.random)
    else:
        err, log = ea.collectTrainingLog(args.laps)
    if err:
        return 2
    _, path = ea.saveDriveLog(log, _outPath(ea, args.out))
    print(str(len(log)) + " records written to " + str(path))
    return 0


def _preprocess(args):
    ea = _assembler(args)
    log = DriveLog.load(args.log, ea.params.T)
    err, dataset = ea.preprocess(log, args.mode)
    if err:
        return 2
    _, path = ea.saveDataset(dataset, _outPath(ea, args.out))
    print(str(len(dataset)) + " samples written to " + str(path))
    return 0


def _train(args):
    ea = _assembler(args)
    dataset = KoopmanDataset.load(args.dataset)
    if dataset.mode != args.mode:
        logging.warning(
            "WARNING: [CLI] dataset mode '" + dataset.mode + "' differs from --mode '"
            + args.mode + "'; training as '" + dataset.mode + "'"
        )
    err, model = ea.train(dataset)
    if model is None:
        return 2
    _, path = ea.saveModel(model, _outPath(ea, args.out))
    print("model written to " + str(path))
    print("final loss        {:.6e}".format(model.meta.get("finalLoss", float("nan"))))
    return 2 if err else 0


def _compare(args):
    ea = _assembler(args)
    err, report = ea.runComparison()
    if err:
        return 2
    with open(os.path.join(report["path"], "report.txt")) as f:
        print(f.read())
    return 0


COMMANDS = {
    "simulate": _simulate,
    "collect": _collect,
    "preprocess": _preprocess,
    "train": _train,
    "eval": _eval,
    "compare": _compare,
}


def main(argv=None):
    """
    Args:
        argv: argument list, defaults to sys.argv[1:]

    Returns:
        exit code
    """
    parser = buildParser()
    try:
        args = parser.parse_args(argv)
    except UsageError:
        return 1
    try:
        return COMMANDS[args.command](args)
    except (RKMPCError, OSError) as e:
        logging.error(logerr + args.command + ": " + str(e))
        sys.stderr.write(args.command + ": " + str(e) + "\n")
        return 2
