# -*- coding: utf-8 -*-
"""
ExperimentAssembler assembles the separate experiment parts into one closed-loop
experiment object. This object controls a combination of three components:

1. plant : truth plant -- dynamic, kinematic
2. controller : tracking controller -- lmpc, kmpc, rkmpc
3. track : centerline and timed reference -- CSV file or builtin generator

It also owns the harness: closed-loop runs, training-data collection,
preprocessing, training, metrics and the paired controller comparison.

Version: 1.0.0  (October 2026)
"""

import importlib
import logging
import math
import os
from datetime import datetime

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from joblib import Parallel, delayed  # noqa: E402

from rkMPC.controllers.kmpc import localWindow  # noqa: E402
from rkMPC.controllers.lmpc import lmpcSolve  # noqa: E402
from rkMPC.plants.kinematic import ControlInput, VehicleState  # noqa: E402
from rkMPC.utils.Config import ExperimentConfig, loadConfig, saveConfig  # noqa: E402
from rkMPC.utils.Errors import (  # noqa: E402
    ConfigError,
    Diverged,
    DivergedRun,
    EmptyLog,
    ReferenceExhausted,
    RKMPCError,
)
from rkMPC.utils.Koopman import (  # noqa: E402
    KoopmanModel,
    buildAbsoluteDataset,
    buildResidualDataset,
    trainLifting,
)
from rkMPC.utils.RunLog import METRIC_NAMES, DriveLog, RunLog, computeMetrics  # noqa: E402
from rkMPC.utils.Track import buildReference, loadTrack, project  # noqa: E402

STALL_STEPS = 40
STALL_DISTANCE = 1e-3


class ExperimentAssembler:
    """
    Code to assemble plant, controller and track into a closed-loop experiment

    Exposed methods:
        initialize() - loads the track, builds the reference, instantiates plant and
          controller
        setController(name) - swaps the controller component
        runClosedLoop(laps, seed) - one closed-loop run, returns RunLog
        collectTrainingLog(laps, seed) - linear MPC on the plant, returns DriveLog
        collectRandomLog(steps, seed) - random-excitation DriveLog
        collectDatasets(need, modes) - training logs preprocessed into datasets of at
          least 'need' samples
        preprocess(log, mode) - residual or absolute Koopman dataset
        train(dataset) - trains a KoopmanModel
        computeMetrics(runlog) - aggregates a RunLog into Metrics
        runComparison(path) - paired comparison of the configured controllers plus
          the data-volume sweep; writes report and sweep files
        saveRunLog(runlog, ...), saveDriveLog(log, ...), saveDataset(dataset, ...),
          saveModel(model, ...) - write artifacts under the output directory
        plotRun(runlog, ...), plotSweep(rows, ...) - PNG figures
        outputPath(name) - run-stamped path under the output root

    Exposed attributes:
        cfg: ExperimentConfig
        params: VehicleParams
        plantcfg: PlantConfig
        track: Track
        ref: ReferenceTrajectory
        plant, controller: active components
        rmodel, kmodel: residual and absolute Koopman models (or None)
    """

    def __init__(
        self,
        config=None,
        plantname=None,
        controllername="lmpc",
        track=None,
        rmodel=None,
        kmodel=None,
        verbose=4,
        seed=None,
        logfile=None,
        logtag=None,
    ):
        """
        Args:
            config: ExperimentConfig, path to a YAML configuration, or None for
              defaults
            plantname: name of truth plant: dynamic, kinematic; defaults to the
              configured plant
            controllername: name of controller: lmpc, kmpc, rkmpc
            track: optional Track or track source overriding the configured one
            rmodel: KoopmanModel (residual mode) or path to a model file
            kmodel: KoopmanModel (absolute mode) or path to a model file
            verbose: optional, sets logging level
                0: print no logging messages
                1: print CRITICAL logging messages (experiment cannot run, e.g.,
                  invalid component name or unreadable track)
                2: print ERROR logging messages (a run or solve failed, e.g., a
                  diverged closed-loop run)
                3: print WARNING logging messages (experiment runs, but perhaps not
                  as expected, e.g., skipped preprocessing windows or clamped inputs)
                4: print INFO logging messages (lap completions, training progress,
                  saved artifacts)
                5: print DEBUG logging messages (per-step controller output)
            seed: optional integer overriding every configured seed
            logfile: optional string, name of file to divert console output
            logtag: suffix to add to logging labels
        """
        self.version = "1.0.1"
        self.verbose = verbose
        self.logfile = logfile

        self.verbmap = {
            0: 99,
            1: logging.CRITICAL,
            2: logging.ERROR,
            3: logging.WARNING,
            4: logging.INFO,
            5: logging.DEBUG,
        }
        if logtag is None:
            logtag = ""
        self.logtag = logtag
        self.logcritbase = "CRITICAL" + self.logtag + ": "
        self.logerrbase = "ERROR" + self.logtag + ": "
        self.logwarnbase = "WARNING" + self.logtag + ": "
        self.loginfobase = "INFO" + self.logtag + ": "
        self.logdebugbase = "DEBUG" + self.logtag + ": "

        self.logcrit = self.logcritbase + "[EA] "
        self.logerr = self.logerrbase + "[EA] "
        self.logwarn = self.logwarnbase + "[EA] "
        self.loginfo = self.loginfobase + "[EA] "
        self.logdebug = self.logdebugbase + "[EA] "

        self.verblevel = self.verbmap.get(verbose, 5)  # defaults to 5 for invalid entry

        if logfile:
            logging.basicConfig(format="%(message)s", filename=logfile)
        else:
            logging.basicConfig(format="%(message)s")
        logging.getLogger().setLevel(self.verblevel)
        logging.getLogger("matplotlib.font_manager").disabled = True

        if config is None:
            config = ExperimentConfig()
        elif isinstance(config, str):
            config = loadConfig(config)
        if seed is not None:
            config = config.withSeed(int(seed))
        err = config.validate()
        if err:
            logging.critical(self.logcrit + "invalid configuration: " + err)
            raise ConfigError(err)
        self.cfg = config
        self.params = config.vehicle
        self.plantcfg = config.plant
        self.plantname = (plantname or config.plant.name).lower()
        self.controllername = controllername.lower()
        self.tracksource = track if track is not None else config.track.source
        self.rmodel = KoopmanModel.load(rmodel) if isinstance(rmodel, str) else rmodel
        self.kmodel = KoopmanModel.load(kmodel) if isinstance(kmodel, str) else kmodel
        self.stamp = None
        self.initialize()

    def initialize(self):
        """
        Load track and reference, instantiate plant and controller
        """
        try:
            if hasattr(self.tracksource, "points"):
                self.track = self.tracksource
            else:
                self.track = loadTrack(
                    self.tracksource, self.cfg.track.scale, self.cfg.track.closed
                )
            self.ref = buildReference(self.track, self.cfg.reference, self.params)
        except (RKMPCError, OSError) as e:
            logging.critical(self.logcrit + "unable to build reference: " + str(e))
            raise

        # get plant
        if self.plantname == "dynamic":
            import rkMPC.plants.dynamic as plnt
        elif self.plantname == "kinematic":
            import rkMPC.plants.kinematic as plnt
        else:  # catch-all for added plants to attempt object encapsulation
            try:
                plnt = importlib.import_module("rkMPC.plants." + self.plantname)
            except ImportError:
                logging.critical(self.logcrit + "invalid plant name")
                raise ConfigError("invalid plant name '" + self.plantname + "'")
        self.plant = getattr(plnt, self.plantname)(self)

        self.setController(self.controllername)

    def setController(self, name):
        """
        Instantiate the named controller component

        Args:
            name: lmpc, kmpc or rkmpc
        """
        name = name.lower()
        if name == "lmpc":
            import rkMPC.controllers.lmpc as ctrl
        elif name == "kmpc":
            import rkMPC.controllers.kmpc as ctrl

            if self.kmodel is None:
                logging.critical(self.logcrit + "kmpc needs an absolute-mode model")
                raise ConfigError("kmpc needs an absolute-mode Koopman model")
        elif name == "rkmpc":
            import rkMPC.controllers.rkmpc as ctrl
        else:
            try:
                ctrl = importlib.import_module("rkMPC.controllers." + name)
            except ImportError:
                logging.critical(self.logcrit + "invalid controller name")
                raise ConfigError("invalid controller name '" + name + "'")
        self.controllername = name
        self.controller = getattr(ctrl, name)(self)

    ##### Closed loop

    def initialPose(self, rng):
        """
        Pose at reference point 0, offset by the configured initial lateral and
          heading spread
        """
        x, y, th, _, _ = self.ref.point(0)
        draw = rng.normal(0.0, 1.0, 2)
        lat = draw[0] * self.plantcfg.initialLateral
        head = draw[1] * self.plantcfg.initialHeading
        return VehicleState(x - lat * math.sin(th), y + lat * math.cos(th), th + head)

    def _runClosedLoop(self, laps, seed):
        rng = np.random.default_rng(seed)
        T = self.params.T
        pose = self.initialPose(rng)
        ps = self.plant.reset(pose, speed=float(self.ref.v[0]))
        self.controller.reset()

        x0, y0, th0, _, _ = self.ref.point(0)
        tangent = np.array([math.cos(th0), math.sin(th0)])
        lapLength = self.ref.lapLength()
        maxSteps = int(math.ceil(self.cfg.harness.maxStepFactor * max(laps, 1) * len(self.ref)))

        runlog = RunLog()
        runlog.meta.update(
            {
                "controller": self.controllername,
                "plant": self.plantname,
                "track": str(self.track.name),
                "seed": int(seed),
                "laps": int(laps),
            }
        )
        lapsDone = 0
        travelled = 0.0
        history = [np.array([pose.x, pose.y])]
        prevDelta = None
        lastSide = float((np.array([pose.x, pose.y]) - [x0, y0]) @ tangent)
        status = "budget"

        for k in range(maxSteps):
            pose = self.plant.pose(ps)
            errs = project(pose, self.ref)
            if abs(errs.lateral) > self.cfg.harness.abortLateral:
                runlog.meta.update(
                    {"lapsCompleted": lapsDone, "lapCompleted": False, "diverged": True}
                )
                runlog.freeze()
                msg = (
                    "DivergedRun: lateral error " + "{:.3f}".format(errs.lateral)
                    + " m at step " + str(k)
                )
                logging.error(self.logerr + msg)
                raise DivergedRun(msg, runlog)
            try:
                out = self.controller.step(pose)
            except ReferenceExhausted:
                lapsDone = laps
                status = "end of reference"
                break
            final = out.final
            rate = 0.0 if prevDelta is None else abs(final.delta - prevDelta) / T
            prevDelta = final.delta
            runlog.append(
                [
                    k * T,
                    pose.x,
                    pose.y,
                    pose.theta,
                    errs.lateral,
                    errs.heading,
                    out.baseline.v,
                    out.baseline.delta,
                    final.v,
                    final.delta,
                    1e3 * out.solveTime,
                    rate,
                    out.residual[0],
                    out.residual[1],
                ]
            )
            ps = self.plant.step(ps, final, rng)

            nxt = self.plant.pose(ps)
            p = np.array([nxt.x, nxt.y])
            travelled += float(np.hypot(*(p - history[-1])))
            history.append(p)
            side = float((p - [x0, y0]) @ tangent)
            if self.ref.closed and lastSide < 0.0 <= side and travelled > 0.5 * lapLength:
                lapsDone += 1
                travelled = 0.0
                logging.info(
                    self.loginfo + self.controllername + " completed lap " + str(lapsDone)
                    + " at t = " + "{:.2f}".format((k + 1) * T) + " s"
                )
                if lapsDone >= laps:
                    status = "laps"
                    break
            lastSide = side
            if k >= STALL_STEPS and np.hypot(*(p - history[-STALL_STEPS])) < STALL_DISTANCE:
                status = "stalled"
                logging.error(self.logerr + "vehicle stalled at step " + str(k))
                break

        if status == "budget":
            logging.error(self.logerr + "step budget of " + str(maxSteps) + " exhausted")
        runlog.meta.update(
            {
                "lapsCompleted": lapsDone,
                "lapCompleted": lapsDone >= laps,
                "diverged": False,
                "termination": status,
            }
        )
        return runlog.freeze()

    def runClosedLoop(self, laps=None, seed=None):
        """
        Step plant and controller at period T until the requested laps are done, the
          vehicle stalls, or the step budget runs out

        Args:
            laps: defaults to harness.laps
            seed: plant noise and initial offset seed, defaults to harness.seeds[0]

        Returns:
            tuple (error string, RunLog); on a diverged run the error string starts
              with 'DivergedRun' and the RunLog holds the records up to the abort
        """
        if laps is None:
            laps = self.cfg.harness.laps
        if seed is None:
            seed = self.cfg.harness.seeds[0] if self.cfg.harness.seeds else 0
        try:
            return "", self._runClosedLoop(int(laps), int(seed))
        except DivergedRun as e:
            return str(e), e.runlog
        except RKMPCError as e:
            err = self.logerr + "runClosedLoop: " + str(e)
            logging.error(err)
            return err, None

    def collectTrainingLog(self, laps=None, seed=None):
        """
        Drive the configured plant with the linear MPC and log commanded inputs and
          realized poses

        Returns:
            tuple (error string, DriveLog)
        """
        if laps is None:
            laps = self.cfg.harness.collectLaps
        if seed is None:
            seed = self.cfg.harness.collectSeed
        if int(laps) < 1:
            err = self.logerr + "collectTrainingLog: EmptyLog, no laps requested"
            logging.error(err)
            return err, None
        active = self.controllername
        self.setController("lmpc")
        try:
            runlog = self._runClosedLoop(int(laps), int(seed))
        except RKMPCError as e:
            err = self.logerr + "collectTrainingLog: " + str(e)
            logging.error(err)
            return err, None
        finally:
            self.setController(active)
        log = runlog.toDriveLog(self.params.T)
        log.meta = {"plant": self.plantname, "seed": int(seed), "laps": int(laps)}
        logging.info(self.loginfo + "collected " + str(len(log)) + " records")
        return "", log

    def collectRandomLog(self, steps=None, seed=None):
        """
        Random-excitation drive: linear MPC input plus a piecewise-constant random
          offset held for 3 to 15 periods; the MPC term keeps the vehicle on track

        Returns:
            tuple (error string, DriveLog)
        """
        if steps is None:
            steps = self.cfg.harness.randomSteps
        if seed is None:
            seed = self.cfg.harness.collectSeed
        rng = np.random.default_rng(seed)
        active = self.controllername
        self.setController("lmpc")
        T = self.params.T
        span = np.array(
            [0.5 * (self.params.vMax - self.params.vMin), 0.5 * (self.params.deltaMax - self.params.deltaMin)]
        )
        records = []
        starts = []
        try:
            pose = self.initialPose(rng)
            ps = self.plant.reset(pose, speed=float(self.ref.v[0]))
            self.controller.reset()
            hold = 0
            offset = np.zeros(2)
            for k in range(int(steps)):
                pose = self.plant.pose(ps)
                errs = project(pose, self.ref)
                if abs(errs.lateral) > self.cfg.harness.abortLateral:
                    logging.warning(self.logwarn + "random drive reset to the start line")
                    starts.append(len(records))
                    pose = self.initialPose(rng)
                    ps = self.plant.reset(pose, speed=float(self.ref.v[0]))
                    self.controller.reset()
                if hold <= 0:
                    offset = rng.uniform(-0.5, 0.5, 2) * span
                    hold = int(rng.integers(3, 16))
                hold -= 1
                try:
                    base = self.controller.step(pose).final.asArray()
                except ReferenceExhausted:
                    starts.append(len(records))
                    ps = self.plant.reset(self.initialPose(rng), speed=float(self.ref.v[0]))
                    self.controller.reset()
                    continue
                u, _ = self.params.clampInput(base + offset)
                records.append([len(records) * T, pose.x, pose.y, pose.theta, u[0], u[1]])
                ps = self.plant.step(ps, ControlInput.fromArray(u), rng)
        except RKMPCError as e:
            err = self.logerr + "collectRandomLog: " + str(e)
            logging.error(err)
            return err, None
        finally:
            self.setController(active)
        data = np.array(records)
        if len(data) == 0:
            err = self.logerr + "collectRandomLog: EmptyLog"
            logging.error(err)
            return err, None
        meta = {"source": "random", "seed": int(seed), "segments": sorted(set(s for s in starts if s > 0))}
        log = DriveLog(data[:, 0], data[:, 1:4], data[:, 4:6], T, meta)
        if meta["segments"]:
            logging.info(
                self.loginfo + "random drive reset " + str(len(meta["segments"])) + " times"
            )
        return "", log

    ##### Koopman pipeline

    def predictor(self):
        """
        Linear MPC prediction at a logged pose, solved in the pose's own frame
        """
        cfg = self.cfg.mpc.lmpc
        N = int(cfg.horizon)

        def predict(pose):
            state = VehicleState.fromArray(pose)
            i0 = project(state, self.ref).index
            W = self.ref.window(i0, N + 1)
            if W is None:
                raise ReferenceExhausted("no reference window at index " + str(i0))
            return lmpcSolve(
                VehicleState(0.0, 0.0, 0.0), localWindow(state, W), cfg, self.params, self.cfg.qp
            )

        return predict

    def preprocess(self, log, mode="residual"):
        """
        Args:
            log: DriveLog
            mode: 'residual' (du samples) or 'absolute' (commanded-input samples)

        Returns:
            tuple (error string, KoopmanDataset)
        """
        try:
            if mode == "absolute":
                return "", buildAbsoluteDataset(log, self.params, self.cfg.preprocess)
            return "", buildResidualDataset(
                log, self.params, self.cfg.preprocess, self.predictor()
            )
        except RKMPCError as e:
            err = self.logerr + "preprocess: " + str(e)
            logging.error(err)
            return err, None

    def train(self, dataset):
        """
        Returns:
            tuple (error string, KoopmanModel); on divergence the model is the last
              finite checkpoint
        """
        try:
            return "", trainLifting(dataset, self.cfg.train)
        except Diverged as e:
            err = self.logerr + "train: Diverged: " + str(e)
            logging.error(err)
            return err, e.model
        except RKMPCError as e:
            err = self.logerr + "train: " + str(e)
            logging.error(err)
            return err, None

    def collectDatasets(self, need=0, modes=("residual", "absolute")):
        """
        Collect and preprocess the training data of a comparison. When a dataset
          falls short of 'need' samples, the collection is repeated once with the
          laps (or random steps) scaled up by the shortfall, up to
          harness.maxCollectLaps laps.

        Args:
            need: smallest sample count every requested dataset must reach
            modes: datasets to build, 'residual' and/or 'absolute'

        Returns:
            tuple (error string, dict with 'log', 'residual', 'absolute' and 'laps')
        """
        h = self.cfg.harness
        scale = 1.0
        for attempt in range(2):
            laps = int(math.ceil(h.collectLaps * scale))
            err, log = self.collectTrainingLog(laps, h.collectSeed)
            if err:
                return err, None
            out = {"log": log, "laps": laps, "residual": None, "absolute": None}
            for mode in modes:
                src = log
                if mode == "absolute" and h.kmpcData == "random":
                    err, src = self.collectRandomLog(int(math.ceil(h.randomSteps * scale)), h.collectSeed)
                    if err:
                        return err, None
                err, out[mode] = self.preprocess(src, mode)
                if err:
                    return err, None
            have = min(len(out[mode]) for mode in modes) if modes else need
            if have >= need:
                return "", out
            if attempt == 0:
                scale = 1.1 * need / max(have, 1)
                if math.ceil(h.collectLaps * scale) > h.maxCollectLaps:
                    break
                logging.info(
                    self.loginfo + "datasets hold " + str(have) + " of " + str(need)
                    + " samples, collecting again with " + "{:.1f}".format(scale)
                    + "x the laps"
                )
        err = (
            self.logerr + "collectDatasets: InsufficientData: " + str(have) + " samples "
            "collected, " + str(need) + " requested; raise harness.collectLaps or "
            "harness.maxCollectLaps"
        )
        logging.error(err)
        return err, None

    def computeMetrics(self, runlog):
        """
        Returns:
            tuple (error string, Metrics)
        """
        try:
            return "", computeMetrics(runlog)
        except EmptyLog as e:
            err = self.logerr + "computeMetrics: EmptyLog: " + str(e)
            logging.error(err)
            return err, None

    ##### Comparison

    def runComparison(self, path=None):
        """
        Paired comparison: collect training data, train residual and baseline models
          per dataset size, run every (track, seed, controller) cell on identical
          plant noise, write report.csv, report.txt, sweep.csv and sweep.png

        Args:
            path: output directory, defaults to a run-stamped folder

        Returns:
            tuple (error string, dict with 'table', 'sweep' and 'path')
        """
        h = self.cfg.harness
        if path is None:
            path = self.outputPath("")
        os.makedirs(path, exist_ok=True)
        saveConfig(self.cfg, os.path.join(path, "experiment.yml"))

        modes = [m for m, c in (("residual", "rkmpc"), ("absolute", "kmpc")) if c in h.controllers]
        need = max([int(s) for s in h.datasetSizes] + [int(h.mainDatasetSize)])
        err, collected = self.collectDatasets(need, modes)
        if err:
            return err, None
        collected["log"].save(os.path.join(path, "drivelog.csv"))
        available = [len(collected[m]) for m in modes]

        mainSize = int(h.mainDatasetSize) or (min(available) if available else 0)
        sizes = sorted(set(int(s) for s in h.datasetSizes) | {mainSize})
        models = {}
        for size in sizes:
            for mode in modes:
                sub = collected[mode].subsample(size, self.cfg.train.seed)
                if len(sub) < 100:
                    logging.warning(self.logwarn + "skipping " + mode + " model with " + str(len(sub)) + " samples")
                    continue
                terr, model = self.train(sub)
                if terr and model is None:
                    return terr, None
                models[(mode, size)] = model
                model.save(os.path.join(path, mode + "_" + str(size) + ".json"))

        tracks = [self.tracksource] + list(h.tracks)
        cells = []
        for trk in tracks:
            for seed in h.seeds:
                for ctrl in h.controllers:
                    cells.append(("main", trk, seed, ctrl, mainSize))
                for size in sizes:
                    if size == mainSize:
                        continue
                    for ctrl in ("kmpc", "rkmpc"):
                        if ctrl in h.controllers:
                            cells.append(("sweep", trk, seed, ctrl, size))

        def modelsFor(ctrl, size):
            return models.get(("residual", size)), models.get(("absolute", size))

        jobs = []
        for kind, trk, seed, ctrl, size in cells:
            rm, km = modelsFor(ctrl, size)
            jobs.append(
                delayed(_runCell)(self.cfg, self.plantname, ctrl, trk, seed, rm, km, self.verbose, self.logtag)
            )
        results = Parallel(n_jobs=int(h.nJobs))(jobs)

        main = {}
        sweep = []
        for (kind, trk, seed, ctrl, size), res in zip(cells, results):
            name = trackName(trk)
            if res["runlog"] is not None:
                res["runlog"].save(
                    os.path.join(path, "run_" + ctrl + "_" + name.replace(":", "-") + "_s" + str(seed) + "_n" + str(size) + ".csv")
                )
            if kind == "main":
                main.setdefault((name, ctrl), []).append(res["metrics"])
            if ctrl in ("kmpc", "rkmpc"):
                sweep.append(
                    {
                        "track": name,
                        "seed": seed,
                        "controller": ctrl,
                        "samples": size,
                        "metrics": res["metrics"],
                    }
                )

        table = reportTable(main, list(h.controllers))
        writeReport(table, os.path.join(path, "report.csv"), os.path.join(path, "report.txt"))
        sweepRows = writeSweep(sweep, os.path.join(path, "sweep.csv"))
        self.plotSweep(sweepRows, os.path.join(path, "sweep.png"))
        logging.info(self.loginfo + "comparison written to " + path)
        return "", {"table": table, "sweep": sweepRows, "path": path}

    ##### Artifacts

    def outputPath(self, name):
        """
        Path under the output root (RKMPC_OUTPUT_ROOT or cfg.outputDir) in a folder
          stamped once per assembler
        """
        root = os.environ.get("RKMPC_OUTPUT_ROOT") or self.cfg.outputDir
        if self.stamp is None:
            self.stamp = datetime.now().strftime("%y%m%d-%H%M%S%f")[:-5]
        folder = os.path.join(root, self.stamp)
        if not os.path.exists(folder):
            os.makedirs(folder)
        return os.path.join(folder, name)

    def _save(self, obj, path, filename, label):
        logging.info(self.loginfo + label)
        if path is None:
            path = self.outputPath(filename)
        try:
            directory = os.path.dirname(os.path.abspath(path))
            if not os.path.exists(directory):
                os.makedirs(directory)
            obj.save(path)
        except OSError as e:
            err = self.logerr + label + ": unable to save: " + str(e)
            logging.error(err)
            return err, None
        return "", path

    def saveRunLog(self, runlog, path=None, filename="runlog.csv"):
        """
        Returns:
            tuple (error string, path written)
        """
        return self._save(runlog, path, filename, "saveRunLog")

    def saveDriveLog(self, log, path=None, filename="drivelog.csv"):
        return self._save(log, path, filename, "saveDriveLog")

    def saveDataset(self, dataset, path=None, filename="dataset.csv"):
        return self._save(dataset, path, filename, "saveDataset")

    def saveModel(self, model, path=None, filename="model.json"):
        return self._save(model, path, filename, "saveModel")

    def plotRun(self, runlog, path=None, filename="run.png"):
        """
        Path against the reference, lateral error and steering traces

        Returns:
            tuple (error string, path written)
        """
        logging.info(self.loginfo + "plotRun")
        if path is None:
            path = self.outputPath(filename)
        fig, axes = plt.subplots(1, 3, figsize=(15, 4.5))
        axes[0].plot(self.ref.x, self.ref.y, "k--", lw=1, label="reference")
        axes[0].plot(runlog.column("x"), runlog.column("y"), lw=1.2, label=runlog.meta.get("controller", ""))
        axes[0].set_aspect("equal")
        axes[0].legend()
        t = runlog.column("t")
        axes[1].plot(t, runlog.column("lat_err"))
        axes[1].set_xlabel("t (s)")
        axes[1].set_ylabel("lateral error (m)")
        axes[2].plot(t, runlog.column("delta_final"), label="applied")
        axes[2].plot(t, runlog.column("delta_cmd"), lw=0.8, label="baseline")
        axes[2].set_xlabel("t (s)")
        axes[2].set_ylabel("steering (rad)")
        axes[2].legend()
        fig.tight_layout()
        try:
            fig.savefig(path, dpi=120)
        except OSError as e:
            err = self.logerr + "plotRun: unable to save figure: " + str(e)
            logging.error(err)
            return err, None
        finally:
            plt.close(fig)
        return "", path

    def plotSweep(self, rows, path=None, filename="sweep.png"):
        """
        Mean lateral error against training-set size, one line per controller
        """
        logging.info(self.loginfo + "plotSweep")
        if path is None:
            path = self.outputPath(filename)
        fig, ax = plt.subplots(figsize=(6, 4.5))
        for ctrl in sorted(set(r["controller"] for r in rows)):
            pts = {}
            for r in rows:
                if r["controller"] == ctrl and r["metric"] == "lateral" and r["value"] == r["value"]:
                    pts.setdefault(r["samples"], []).append(r["value"])
            if pts:
                xs = sorted(pts)
                ax.plot(xs, [np.mean(pts[s]) for s in xs], "o-", label=ctrl)
        ax.set_xscale("log")
        ax.set_xlabel("training samples")
        ax.set_ylabel("mean lateral error (m)")
        ax.legend()
        fig.tight_layout()
        try:
            fig.savefig(path, dpi=120)
        except OSError as e:
            err = self.logerr + "plotSweep: unable to save figure: " + str(e)
            logging.error(err)
            return err, None
        finally:
            plt.close(fig)
        return "", path


def _runCell(cfg, plantname, ctrl, track, seed, rmodel, kmodel, verbose, logtag):
    """
    One comparison cell, executed in a worker
    """
    try:
        ea = ExperimentAssembler(
            cfg,
            plantname=plantname,
            controllername=ctrl,
            track=track,
            rmodel=rmodel,
            kmodel=kmodel,
            verbose=verbose,
            logtag=logtag,
        )
    except RKMPCError as e:
        return {"err": str(e), "runlog": None, "metrics": None}
    err, runlog = ea.runClosedLoop(cfg.harness.laps, seed)
    metrics = None
    if runlog is not None and not err:
        _, metrics = ea.computeMetrics(runlog)
    return {"err": err, "runlog": runlog, "metrics": metrics}


def trackName(track):
    if hasattr(track, "points"):
        return str(track.name)
    return os.path.basename(str(track))


def reportTable(cells, controllers):
    """
    Table rows (track, controller, kind, metric values). Metric rows average the
      seeds of a cell, None when any seed diverged; delta rows are percentages
      against the 'lmpc' row of the same track, recomputed from the metric rows

    Args:
        cells: {(track, controller): [Metrics or None per seed]}
        controllers: controller order

    Returns:
        list of dicts
    """
    rows = []
    tracks = []
    for trk, _ in cells:
        if trk not in tracks:
            tracks.append(trk)
    for trk in tracks:
        values = {}
        for ctrl in controllers:
            metrics = cells.get((trk, ctrl), [])
            if not metrics or any(m is None for m in metrics):
                values[ctrl] = None
            else:
                values[ctrl] = [
                    math.fsum(getattr(m, name) for m in metrics) / len(metrics)
                    for name in METRIC_NAMES
                ]
            rows.append({"track": trk, "controller": ctrl, "kind": "metric", "values": values[ctrl]})
        base = values.get("lmpc")
        for ctrl in controllers:
            if ctrl == "lmpc" or "lmpc" not in values:
                continue
            rows.append(
                {"track": trk, "controller": ctrl, "kind": "delta%", "values": deltas(values[ctrl], base)}
            )
    return rows


def deltas(values, base):
    if values is None or base is None:
        return None
    return [100.0 * (v - b) / b if b != 0 else math.nan for v, b in zip(values, base)]


def _fmt(v):
    return "-" if v is None else "%.6g" % v


def writeReport(table, csvpath, txtpath):
    header = ["track", "controller", "kind"] + METRIC_NAMES
    lines = [",".join(header)]
    text = [header]
    for row in table:
        vals = row["values"] if row["values"] is not None else [None] * len(METRIC_NAMES)
        cells = [row["track"], row["controller"], row["kind"]] + [_fmt(v) for v in vals]
        lines.append(",".join(cells))
        text.append(cells)
    with open(csvpath, "w") as f:
        f.write("\n".join(lines) + "\n")
    widths = [max(len(r[i]) for r in text) for i in range(len(header))]
    with open(txtpath, "w") as f:
        for r in text:
            f.write("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n")


def writeSweep(sweep, path):
    """
    Long-format sweep file: track, seed, controller, samples, metric, value
      (value 'nan' for diverged runs)

    Returns:
        list of row dicts
    """
    rows = []
    for s in sweep:
        for i, name in enumerate(METRIC_NAMES):
            value = math.nan if s["metrics"] is None else s["metrics"].asRow()[i]
            rows.append(
                {
                    "track": s["track"],
                    "seed": s["seed"],
                    "controller": s["controller"],
                    "samples": s["samples"],
                    "metric": name,
                    "value": value,
                }
            )
    rows.sort(key=lambda r: (r["track"], r["controller"], r["samples"], r["seed"], r["metric"]))
    with open(path, "w") as f:
        f.write("track,seed,controller,samples,metric,value\n")
        for r in rows:
            f.write(
                ",".join([r["track"], str(r["seed"]), r["controller"], str(r["samples"]), r["metric"], "%.17g" % r["value"]])
                + "\n"
            )
    return rows
