# -*- coding: utf-8 -*-
"""
Example script: collect two laps with the linear MPC on the mismatched plant,
train a residual model, and compare the linear and residual controllers.

Version: 1.0.0  (October 2026)
"""

from rkMPC.ExperimentAssembler import ExperimentAssembler

ea = ExperimentAssembler("experiment.yml", controllername="lmpc", verbose=4)

err, log = ea.collectTrainingLog(laps=2, seed=0)
ea.saveDriveLog(log)

err, dataset = ea.preprocess(log, "residual")
err, model = ea.train(dataset)
ea.saveModel(model)

for name in ["lmpc", "rkmpc"]:
    ea.rmodel = model
    ea.setController(name)
    err, runlog = ea.runClosedLoop(laps=1, seed=0)
    if err:
        print(name + ": " + err)
        continue
    err, metrics = ea.computeMetrics(runlog)
    print(name, "lateral %.4f m" % metrics.lateral, "heading %.4f rad" % metrics.heading)
    ea.saveRunLog(runlog, filename="runlog_" + name + ".csv")
    ea.plotRun(runlog, filename="run_" + name + ".png")
