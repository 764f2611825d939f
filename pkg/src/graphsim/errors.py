"""Exception hierarchy.

Errors fall in two families that the command line maps to distinct exit
codes: :class:`DataError` (bad input files, labels, configuration) and
:class:`ComputeError` (search budgets, shape mismatches, numerical failure).
"""


class GraphSimError(Exception):
    exit_code = 1


class DataError(GraphSimError):
    exit_code = 3


class ComputeError(GraphSimError):
    exit_code = 4


# graph validation
class GraphValidationError(DataError, ValueError):
    pass


class EmptyGraph(GraphValidationError):
    pass


class SelfLoop(GraphValidationError):
    pass


class DuplicateEdge(GraphValidationError):
    pass


class OutOfRangeEndpoint(GraphValidationError):
    pass


class UnknownLabel(DataError, KeyError):
    pass


# corpus files and label caches
class ParseError(DataError):
    def __init__(self, line, message=""):
        self.line = line
        super().__init__(f"line {line}: {message}" if message else f"line {line}")


class ValidationError(DataError):
    def __init__(self, line, cause):
        self.line = line
        self.cause = cause
        super().__init__(f"line {line}: {cause}")


class CacheCorrupt(DataError):
    pass


class CorpusTooSmall(DataError):
    pass


class InvalidConfig(DataError, ValueError):
    pass


class MissingLabels(DataError):
    pass


class OracleFailure(ComputeError):
    def __init__(self, pair, cause=None):
        self.pair = pair
        self.cause = cause
        super().__init__(f"oracle failed on pair {pair}: {cause}")


# search
class TooLarge(ComputeError, ValueError):
    pass


class BudgetExceeded(ComputeError):
    pass


class Infeasible(ComputeError):
    pass


# tensors and training
class ShapeMismatch(ComputeError, ValueError):
    pass


class NotScalar(ComputeError, ValueError):
    pass


class DetachedTensor(ComputeError):
    pass


class EmptyTrainingSet(ComputeError):
    pass


class DivergenceDetected(ComputeError):
    pass


# metrics
class DegenerateInput(ComputeError, ValueError):
    pass


class LengthMismatch(ComputeError, ValueError):
    pass


class Empty(ComputeError, ValueError):
    pass


class KTooLarge(ComputeError, ValueError):
    pass


class UsageError(GraphSimError):
    exit_code = 2
