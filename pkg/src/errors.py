"""
Exception hierarchy
Library code raises these; src.cli maps them onto exit codes.
"""

from typing import Any, Dict, List, Optional

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_EMPTY = 3


class FastDiffError(Exception):
    """Base class for every error raised by the package"""
    exit_code = EXIT_USAGE


class UsageError(FastDiffError):
    """Malformed input: unbound variable, wrong signature, bad S-expression"""


class ConfigError(FastDiffError):
    """Invalid recipe or solver configuration"""


class ParameterError(FastDiffError):
    """Parameter outside the documented domain"""


class SingularEvaluationError(FastDiffError):
    """Strict evaluation reached a pole, ln 0 or a division by zero"""

    def __init__(self, message: str, subexpr: Any = None, point: Optional[Dict[str, float]] = None):
        super().__init__(message)
        self.subexpr = subexpr
        self.point = point


class SkippedSample(FastDiffError):
    """A sample that cannot be evaluated and must be counted as skipped"""


class RejectedPairError(FastDiffError):
    """A custom pair failed the Cauchy-Riemann validation"""

    def __init__(self, message: str, worst_point: Dict[str, float], worst_residual: float):
        super().__init__(message)
        self.worst_point = worst_point
        self.worst_residual = worst_residual


class DegenerateInputError(FastDiffError):
    """Constant harmonic function or constant weight"""
    exit_code = EXIT_EMPTY


class PreconditionError(FastDiffError):
    """A sampled precondition (source homogeneity, harmonic ln f) does not hold"""

    def __init__(self, message: str, worst_point: Any = None, worst_residual: float = float("nan")):
        super().__init__(message)
        self.worst_point = worst_point
        self.worst_residual = worst_residual


class DomainError(FastDiffError):
    """Sample outside the function's admissible domain (e.g. f <= 0)"""


class EmptyReportError(FastDiffError):
    """Every requested sample was skipped"""
    exit_code = EXIT_EMPTY


class InputError(FastDiffError):
    """Solver input is unusable (non-positive data, singular reference)"""


class SolverError(FastDiffError):
    """Newton iteration failed; trace holds the residual norms seen"""
    exit_code = EXIT_FAIL

    def __init__(self, message: str, trace: Optional[List[float]] = None):
        super().__init__(message)
        self.trace = list(trace or [])
