# -*- coding: utf-8 -*-
"""
Experiment configuration: one YAML document drives vehicle, plant, track,
controllers, preprocessing, training and the comparison harness.

Every section is a frozen dataclass. Loading is strict: unknown keys are rejected
with the dotted key name and its line number in the file.

Version: 1.0.0  (October 2026)
"""

import dataclasses
import logging
import math
import os
from dataclasses import dataclass, field

import yaml

from rkMPC.plants.dynamic import PlantConfig
from rkMPC.plants.kinematic import VehicleParams
from rkMPC.utils.Errors import ConfigError

SCHEMA_VERSION = 1

logwarn = "WARNING: [Config] "


@dataclass(frozen=True)
class TrackConfig:
    """
    Attributes:
        source: CSV path or 'builtin:<oval|circuit|circle|line>'
        scale: uniform factor applied to coordinates and widths
        closed: closed-loop centerline
    """

    source: str = "builtin:circuit"
    scale: float = 1.0
    closed: bool = True


@dataclass(frozen=True)
class ReferenceConfig:
    """
    Attributes:
        profile: 'constant' or 'curvature'
        speed: constant reference speed, m/s
        vCap: speed cap of the curvature-limited profile, m/s
        aLatMax: lateral acceleration limit of the curvature-limited profile, m/s^2
        vMinProfile: lowest admissible reference speed, m/s
    """

    profile: str = "constant"
    speed: float = 1.5
    vCap: float = 3.0
    aLatMax: float = 2.0
    vMinProfile: float = 0.2


@dataclass(frozen=True)
class QPConfig:
    tol: float = 1e-8
    maxIter: int = 2000
    omega: float = 1.2


@dataclass(frozen=True)
class MpcConfig:
    """
    Weights follow the tracking cost: position weight on (x, y), headingWeight on
      theta, speedWeight and steerWeight on the input terms (absolute input error
      for the linear and Koopman controllers, the residual itself for the residual
      controller)

    Attributes:
        horizon: prediction horizon N
        positionWeight, headingWeight, speedWeight, steerWeight: cost weights
        steerRateWeight: optional penalty on consecutive steering differences
        softStateWeight: weight of the soft (x, y, theta) bounds
        stateLow, stateHigh: (x, y, theta) soft bounds, +/-inf disables
        residualLow, residualHigh: (dv, ddelta) residual box
        observerGain: weight of the newest transition in the running plant-residual
          estimate of the residual controller, 0 disables the estimate
        resyncWindow: reference index drift tolerated before re-projecting
    """

    horizon: int = 12
    positionWeight: float = 1.0
    headingWeight: float = 0.5
    speedWeight: float = 0.05
    steerWeight: float = 0.05
    steerRateWeight: float = 0.0
    softStateWeight: float = 1e4
    stateLow: tuple = (-math.inf, -math.inf, -math.inf)
    stateHigh: tuple = (math.inf, math.inf, math.inf)
    residualLow: tuple = (-0.5, -0.1)
    residualHigh: tuple = (0.5, 0.1)
    observerGain: float = 0.5
    resyncWindow: int = 5

    def validate(self):
        if int(self.horizon) < 1:
            return "horizon must be at least 1"
        weights = [
            self.positionWeight,
            self.headingWeight,
            self.speedWeight,
            self.steerWeight,
            self.steerRateWeight,
            self.softStateWeight,
        ]
        if any(w < 0 for w in weights):
            return "weights must be non-negative"
        if len(self.stateLow) != 3 or len(self.stateHigh) != 3:
            return "state bounds need three entries (x, y, theta)"
        if any(lo > hi for lo, hi in zip(self.stateLow, self.stateHigh)):
            return "state bounds are empty"
        if len(self.residualLow) != 2 or len(self.residualHigh) != 2:
            return "residual box needs two entries (dv, ddelta)"
        if any(lo > hi for lo, hi in zip(self.residualLow, self.residualHigh)):
            return "residual box is empty"
        if not 0.0 <= self.observerGain <= 1.0:
            return "observerGain must lie in [0, 1]"
        return ""


@dataclass(frozen=True)
class ControllersConfig:
    lmpc: MpcConfig = field(default_factory=MpcConfig)
    kmpc: MpcConfig = field(default_factory=MpcConfig)
    rkmpc: MpcConfig = field(default_factory=MpcConfig)


@dataclass(frozen=True)
class PreprocessConfig:
    """
    Attributes:
        conversionRatio: fraction of records used as local-frame origins
        windowLength: N_p, records transformed into each origin's frame
        seed: origin sampling seed
        predictedInput: 'logged' (commanded input of the logging controller) or
          'resolve' (re-solve the linear MPC at every local state)
        inversionThreshold: largest accepted residual of the executed-input fit
    """

    conversionRatio: float = 0.3
    windowLength: int = 16
    seed: int = 0
    predictedInput: str = "resolve"
    inversionThreshold: float = 0.05

    def validate(self):
        if not 0 < self.conversionRatio <= 1:
            return "conversionRatio must lie in (0, 1]"
        if int(self.windowLength) < 2:
            return "windowLength must be at least 2"
        if self.predictedInput not in ("logged", "resolve"):
            return "predictedInput must be 'logged' or 'resolve'"
        return ""


@dataclass(frozen=True)
class TrainConfig:
    """
    Attributes:
        deltaHuber: pseudo-Huber scale
        epochs, batchSize, learningRate: optimizer schedule
        refitEvery: epochs between (A, B) least-squares refits
        nLift: lifted coordinates produced by the network
        hidden: hidden layer width
        seed: weight initialization and shuffling seed
        lossScope: 'full' (whole stacked z) or 'lifted' (network block only)
        reluOutput: apply ReLU to the network output as well
        logEvery: epochs between INFO progress lines
    """

    deltaHuber: float = 1.0
    epochs: int = 200
    batchSize: int = 256
    learningRate: float = 1e-3
    refitEvery: int = 1
    nLift: int = 16
    hidden: int = 64
    seed: int = 0
    lossScope: str = "full"
    reluOutput: bool = False
    logEvery: int = 20

    def validate(self):
        if not self.deltaHuber > 0:
            return "deltaHuber must be positive"
        if int(self.nLift) < 1:
            return "nLift must be at least 1"
        if int(self.epochs) < 0 or int(self.batchSize) < 1 or int(self.refitEvery) < 1:
            return "epochs, batchSize and refitEvery must be positive"
        if self.lossScope not in ("full", "lifted"):
            return "lossScope must be 'full' or 'lifted'"
        return ""


@dataclass(frozen=True)
class HarnessConfig:
    """
    Attributes:
        laps: laps per evaluation run
        collectLaps: laps of training data collected with the linear MPC
        maxCollectLaps: most laps a collection may be extended to when a dataset
          falls short of the requested sample count
        abortLateral: lateral error (m) that aborts a run as diverged
        maxStepFactor: step budget as a multiple of the nominal lap steps
        seeds: evaluation seeds; every controller sees the same plant noise per seed
        collectSeed: seed of the training-data collection run
        tracks: extra track sources evaluated besides track.source
        controllers: controllers compared
        datasetSizes: residual-sample counts of the data-volume sweep
        mainDatasetSize: sample count of the models in the main table, 0 = all
        referenceDatasetSize: sample count of the reference model the data-volume
          sweep is judged against in the self-test
        kmpcData: 'track' (same logs as the residual model) or 'random'
        randomSteps: length of the random-excitation log
        nJobs: parallel comparison cells (joblib)
    """

    laps: int = 1
    collectLaps: int = 2
    maxCollectLaps: int = 40
    abortLateral: float = 2.0
    maxStepFactor: float = 2.5
    seeds: tuple = (0,)
    collectSeed: int = 0
    tracks: tuple = ()
    controllers: tuple = ("lmpc", "kmpc", "rkmpc")
    datasetSizes: tuple = (2000, 4000, 8000)
    mainDatasetSize: int = 0
    referenceDatasetSize: int = 40000
    kmpcData: str = "track"
    randomSteps: int = 20000
    nJobs: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    schemaVersion: int = SCHEMA_VERSION
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    plant: PlantConfig = field(default_factory=PlantConfig)
    track: TrackConfig = field(default_factory=TrackConfig)
    reference: ReferenceConfig = field(default_factory=ReferenceConfig)
    qp: QPConfig = field(default_factory=QPConfig)
    mpc: ControllersConfig = field(default_factory=ControllersConfig)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    harness: HarnessConfig = field(default_factory=HarnessConfig)
    outputDir: str = "output"

    def validate(self):
        """
        Returns:
            error string naming the offending section, empty if valid
        """
        checks = [
            ("vehicle", self.vehicle.validate()),
            ("plant", self.plant.validate()),
            ("mpc.lmpc", self.mpc.lmpc.validate()),
            ("mpc.kmpc", self.mpc.kmpc.validate()),
            ("mpc.rkmpc", self.mpc.rkmpc.validate()),
            ("preprocess", self.preprocess.validate()),
            ("train", self.train.validate()),
        ]
        for section, err in checks:
            if err:
                return section + ": " + err
        if self.reference.profile not in ("constant", "curvature"):
            return "reference: profile must be 'constant' or 'curvature'"
        if self.harness.kmpcData not in ("track", "random"):
            return "harness: kmpcData must be 'track' or 'random'"
        return ""

    def withSeed(self, seed):
        """
        Copy with every configured seed replaced by 'seed'
        """
        return dataclasses.replace(
            self,
            preprocess=dataclasses.replace(self.preprocess, seed=seed),
            train=dataclasses.replace(self.train, seed=seed),
            harness=dataclasses.replace(self.harness, seeds=(seed,), collectSeed=seed),
        )

    def toDict(self):
        return _toPlain(self)


def _toPlain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _toPlain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, tuple):
        return [_toPlain(a) for a in obj]
    return obj


def _lineIndex(node, prefix="", lines=None):
    """
    Map dotted keys to 1-based line numbers from a composed YAML node tree
    """
    if lines is None:
        lines = {}
    if isinstance(node, yaml.MappingNode):
        for keynode, valnode in node.value:
            key = prefix + str(keynode.value)
            lines[key] = keynode.start_mark.line + 1
            _lineIndex(valnode, key + ".", lines)
    return lines


def _coerce(value, default, key, lines):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError("expected true/false", key, lines.get(key))
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError("expected an integer", key, lines.get(key))
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError("expected a number", key, lines.get(key))
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError("expected a string", key, lines.get(key))
        return value
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError("expected a list", key, lines.get(key))
        items = []
        for i, item in enumerate(value):
            if default and isinstance(default[0], float) and isinstance(item, int):
                item = float(item)
            items.append(item)
        return tuple(items)
    return value


def fromDict(cls, data, prefix="", lines=None):
    """
    Build config dataclass 'cls' from a plain mapping, strictly

    Args:
        cls: dataclass type
        data: mapping (None means all defaults)
        prefix: dotted key prefix for error messages
        lines: dotted key -> line number map

    Returns:
        instance of cls
    """
    if lines is None:
        lines = {}
    if data is None:
        data = {}
    if not isinstance(data, dict):
        key = prefix.rstrip(".") or "<root>"
        raise ConfigError("expected a mapping", key, lines.get(key))
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key in data:
        if key not in fields:
            dotted = prefix + str(key)
            raise ConfigError("unknown key", dotted, lines.get(dotted))
    defaults = cls()
    kwargs = {}
    for name in fields:
        if name not in data:
            continue
        default = getattr(defaults, name)
        dotted = prefix + name
        if dataclasses.is_dataclass(default):
            kwargs[name] = fromDict(type(default), data[name], dotted + ".", lines)
        else:
            kwargs[name] = _coerce(data[name], default, dotted, lines)
    return cls(**kwargs)


def loadConfig(path):
    """
    Load and validate an experiment configuration file. Relative track paths are
      resolved against the directory of the configuration file.

    Args:
        path: YAML file

    Returns:
        ExperimentConfig
    """
    with open(path, "r") as f:
        text = f.read()
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        line = None
        mark = getattr(e, "problem_mark", None)
        if mark is not None:
            line = mark.line + 1
        raise ConfigError("malformed YAML: " + str(e).splitlines()[0], None, line)
    lines = _lineIndex(node) if node is not None else {}
    if not isinstance(data, dict) or "schemaVersion" not in data:
        raise ConfigError("missing schemaVersion", "schemaVersion", None)
    if data["schemaVersion"] != SCHEMA_VERSION:
        raise ConfigError(
            "unsupported schema version " + str(data["schemaVersion"]),
            "schemaVersion",
            lines.get("schemaVersion"),
        )
    cfg = fromDict(ExperimentConfig, data, "", lines)

    basedir = os.path.dirname(os.path.abspath(path))
    sources = [("track.source", cfg.track.source)] + [
        ("harness.tracks", src) for src in cfg.harness.tracks
    ]
    resolved = {}
    for key, src in sources:
        if src.startswith("builtin:"):
            resolved[src] = src
            continue
        full = src if os.path.isabs(src) else os.path.join(basedir, src)
        if not os.path.exists(full):
            raise ConfigError("track file not found: " + full, key, lines.get(key))
        resolved[src] = full
    cfg = dataclasses.replace(
        cfg,
        track=dataclasses.replace(cfg.track, source=resolved[cfg.track.source]),
        harness=dataclasses.replace(
            cfg.harness, tracks=tuple(resolved[s] for s in cfg.harness.tracks)
        ),
    )

    err = cfg.validate()
    if err:
        raise ConfigError(err, err.split(":")[0], lines.get(err.split(":")[0]))
    Np = cfg.preprocess.windowLength
    N = cfg.mpc.rkmpc.horizon
    if Np <= N:
        logging.warning(
            logwarn + "preprocess.windowLength " + str(Np) + " should be slightly "
            "greater than the prediction horizon " + str(N)
        )
    return cfg


def saveConfig(cfg, path):
    """
    Write configuration as YAML; loadConfig(saveConfig(cfg)) reproduces cfg
    """
    with open(path, "w") as f:
        yaml.safe_dump(cfg.toDict(), f, sort_keys=False)
