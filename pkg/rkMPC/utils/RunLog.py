# -*- coding: utf-8 -*-
"""
Logged data: DriveLog (training data), RunLog (closed-loop evaluation) and the
Metrics aggregated from a RunLog, with their CSV codecs.

CSV files carry metadata as leading '# key: value' lines; floats are written with
17 significant digits so that save/load round-trips exactly.

Version: 1.0.0  (October 2026)
"""

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from rkMPC.utils.Errors import EmptyLog, ParseError

loginfo = "INFO: [RunLog] "

DRIVELOG_COLUMNS = ["t", "x", "y", "theta", "v_cmd", "delta_cmd"]
RUNLOG_COLUMNS = [
    "t",
    "x",
    "y",
    "theta",
    "lat_err",
    "head_err",
    "v_cmd",
    "delta_cmd",
    "v_final",
    "delta_final",
    "solve_ms",
    "steer_rate",
    "dv",
    "ddelta",
]


def writeCsv(path, columns, data, meta=None):
    """
    Write a numeric table with metadata comment lines

    Args:
        path: output file
        columns: header names
        data: (rows x len(columns)) array
        meta: optional dict written as '# key: value' lines
    """
    data = np.asarray(data, dtype=float).reshape(-1, len(columns))
    with open(path, "w", newline="") as f:
        for key in sorted(meta or {}):
            f.write("# " + str(key) + ": " + str(meta[key]) + "\n")
        f.write(",".join(columns) + "\n")
        for row in data:
            f.write(",".join("%.17g" % v for v in row) + "\n")


def readCsv(path, columns):
    """
    Read a table written by writeCsv. The header must start with 'columns'; extra
      trailing columns are ignored.

    Returns:
        tuple (data array, metadata dict of strings)
    """
    meta = {}
    header = None
    rows = []
    with open(path, "r", newline="") as f:
        for lineno, row in enumerate(csv.reader(f), start=1):
            if not row:
                continue
            if row[0].startswith("#"):
                text = ",".join(row)[1:].strip()
                if ":" in text:
                    key, value = text.split(":", 1)
                    meta[key.strip()] = value.strip()
                continue
            if header is None:
                header = [c.strip() for c in row]
                if header[: len(columns)] != list(columns):
                    raise ParseError(
                        "expected header " + ",".join(columns) + ", got " + ",".join(header),
                        lineno,
                    )
                continue
            if len(row) != len(header):
                raise ParseError("expected " + str(len(header)) + " fields", lineno)
            try:
                rows.append([float(c) for c in row[: len(columns)]])
            except ValueError as e:
                raise ParseError(str(e), lineno)
    if header is None:
        raise ParseError("missing header line", None)
    data = np.array(rows, dtype=float).reshape(-1, len(columns))
    return data, meta


@dataclass
class DriveLog:
    """
    Time-ordered records (t, x, y, theta, v_cmd, delta_cmd) at sampling period T
    """

    t: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    T: float
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    def validate(self):
        """
        Returns:
            error string, empty if times advance by T +/- 1% and values are finite
        """
        if len(self) == 0:
            return ""
        table = self.asArray()
        if not np.all(np.isfinite(table)):
            return "non-finite values in drive log"
        if len(self) > 1:
            dt = np.diff(self.t)
            if np.any(np.abs(dt - self.T) > 0.01 * self.T):
                return "time stamps do not advance by the sampling period"
        return ""

    def asArray(self):
        return np.column_stack([self.t, self.states, self.inputs])

    def segmentIds(self):
        """
        Per-record segment number. meta["segments"] lists the record indices where
          the drive was reset (random-excitation logs); windows must not span them.
        """
        starts = self.meta.get("segments", ())
        if isinstance(starts, str):
            starts = starts.split()
        ids = np.zeros(len(self), dtype=int)
        for s in starts:
            if 0 < int(s) < len(self):
                ids[int(s):] += 1
        return ids

    def save(self, path):
        meta = dict(self.meta)
        if not isinstance(meta.get("segments", ""), str):
            meta["segments"] = " ".join(str(int(s)) for s in meta["segments"])
        meta["T"] = repr(float(self.T))
        writeCsv(path, DRIVELOG_COLUMNS, self.asArray(), meta)
        logging.info(loginfo + "drive log with " + str(len(self)) + " records saved to " + str(path))

    @classmethod
    def load(cls, path, T=None):
        data, meta = readCsv(path, DRIVELOG_COLUMNS)
        if T is None:
            if "T" in meta:
                T = float(meta.pop("T"))
            elif len(data) > 1:
                T = float(data[1, 0] - data[0, 0])
            else:
                raise ParseError("sampling period unknown for a single-record log")
        else:
            meta.pop("T", None)
        log = cls(data[:, 0], data[:, 1:4], data[:, 4:6], float(T), meta)
        err = log.validate()
        if err:
            raise ParseError(err)
        return log


@dataclass
class RunLog:
    """
    Per-step closed-loop records. Columns follow RUNLOG_COLUMNS: pose, projected
      errors, baseline command (v_cmd, delta_cmd), applied command (v_final,
      delta_final), solve time in ms, |delta_final change| / T, and the residual
      correction (dv, ddelta; zero for non-residual controllers)
    """

    records: np.ndarray = None
    meta: dict = field(default_factory=dict)
    rows: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.records is None:
            self.records = np.zeros((0, len(RUNLOG_COLUMNS)))

    def append(self, row):
        self.rows.append([float(v) for v in row])

    def freeze(self):
        """
        Move appended rows into the records array
        """
        if self.rows:
            self.records = np.vstack([self.records, np.array(self.rows)])
            self.rows = []
        return self

    def __len__(self):
        return len(self.records) + len(self.rows)

    def column(self, name):
        self.freeze()
        return self.records[:, RUNLOG_COLUMNS.index(name)]

    def toDriveLog(self, T):
        self.freeze()
        r = self.records
        inputs = r[:, [RUNLOG_COLUMNS.index("v_final"), RUNLOG_COLUMNS.index("delta_final")]]
        return DriveLog(r[:, 0].copy(), r[:, 1:4].copy(), inputs.copy(), float(T), dict(self.meta))

    def save(self, path):
        self.freeze()
        writeCsv(path, RUNLOG_COLUMNS, self.records, self.meta)
        logging.info(loginfo + "run log with " + str(len(self)) + " records saved to " + str(path))

    @classmethod
    def load(cls, path):
        data, meta = readCsv(path, RUNLOG_COLUMNS)
        return cls(data, meta)


@dataclass(frozen=True)
class Metrics:
    """
    Attributes:
        lateral: mean absolute lateral error, m
        heading: mean absolute heading error, rad
        steerRate: mean front-wheel angle rate, rad/s
        solveMean, solveMax: controller solve time, ms
        lapCompleted: requested laps were completed
        steps: records aggregated
    """

    lateral: float
    heading: float
    steerRate: float
    solveMean: float
    solveMax: float
    lapCompleted: bool
    steps: int

    def asRow(self):
        return [self.lateral, self.heading, self.steerRate, self.solveMean, self.solveMax]


METRIC_NAMES = ["lateral", "heading", "steerRate", "solveMean", "solveMax"]


def computeMetrics(runlog):
    """
    Aggregate a RunLog. Every statistic is an order-independent aggregate of the
      per-record columns (exactly rounded sums, maxima).

    Args:
        runlog: RunLog

    Returns:
        Metrics
    """
    runlog.freeze()
    n = len(runlog)
    if n == 0:
        raise EmptyLog("cannot compute metrics of an empty run log")
    lateral = math.fsum(np.abs(runlog.column("lat_err"))) / n
    heading = math.fsum(np.abs(runlog.column("head_err"))) / n
    # the first record carries no rate
    rate = math.fsum(runlog.column("steer_rate")) / max(n - 1, 1)
    solve = runlog.column("solve_ms")
    completed = str(runlog.meta.get("lapCompleted", "False")) == "True"
    return Metrics(
        float(lateral),
        float(heading),
        float(rate),
        float(math.fsum(solve) / n),
        float(np.max(solve)),
        completed,
        n,
    )
