# -*- coding: utf-8 -*-
"""
Exception hierarchy for rkMPC. Numerical routines raise these; the
ExperimentAssembler catches them and converts them into (error string, value)
returns.

Version: 1.0.0  (October 2026)
"""


class RKMPCError(Exception):
    """
    Base class of every error raised by the package
    """


class DegenerateReference(RKMPCError):
    pass


class ParseError(RKMPCError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = "line " + str(line) + ": " + message
        RKMPCError.__init__(self, message)


class TooFewPoints(RKMPCError):
    pass


class InfeasibleSpeed(RKMPCError):
    pass


class NotConverged(RKMPCError):
    """
    Iteration budget exhausted. 'solution' holds the best feasible iterate
    """

    def __init__(self, message, solution=None):
        self.solution = solution
        RKMPCError.__init__(self, message)


class IllConditioned(RKMPCError):
    pass


class DimensionMismatch(RKMPCError):
    pass


class InversionFailure(RKMPCError):
    pass


class InsufficientData(RKMPCError):
    pass


class Diverged(RKMPCError):
    """
    Training loss became non-finite. 'model' holds the last finite checkpoint
    """

    def __init__(self, message, model=None):
        self.model = model
        RKMPCError.__init__(self, message)


class ReferenceExhausted(RKMPCError):
    pass


class DivergedRun(RKMPCError):
    """
    Closed-loop run aborted on the lateral error threshold. 'runlog' holds the
      records collected up to the abort
    """

    def __init__(self, message, runlog=None):
        self.runlog = runlog
        RKMPCError.__init__(self, message)


class EmptyLog(RKMPCError):
    pass


class ConfigError(RKMPCError):
    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        parts = []
        if key is not None:
            parts.append("key '" + str(key) + "'")
        if line is not None:
            parts.append("line " + str(line))
        if parts:
            message = ", ".join(parts) + ": " + message
        RKMPCError.__init__(self, message)
