# simulator/errors.py
"""
Exception hierarchy for the singlet simulator.

Every failure the package signals derives from ``SingletSimError`` so callers
(sweeps, the command line) can map whole families to one outcome.
"""

from typing import Hashable, Optional, Sequence


class SingletSimError(Exception):
    """Base class for all simulator errors."""


class InvalidArgumentError(SingletSimError, ValueError):
    """A precondition on an argument was violated."""


class BasisMismatchError(InvalidArgumentError):
    """Operands live on different basis catalogs or have incompatible shapes."""


class ZeroVectorError(SingletSimError, ArithmeticError):
    """A construction produced the zero vector where a state was expected."""


class ConfigError(SingletSimError, ValueError):
    """Configuration is malformed or names an unsupported combination."""


class ModelConsistencyError(SingletSimError):
    """The implemented reduced Hamiltonian disagrees with the projection oracle."""

    def __init__(self, message: str, row_label: Hashable = None, col_label: Hashable = None, t: Optional[float] = None, implemented: complex = 0j, oracle: complex = 0j):
        super().__init__(message)
        self.row_label = row_label
        self.col_label = col_label
        self.t = t
        self.implemented = implemented
        self.oracle = oracle


class SolverError(SingletSimError, RuntimeError):
    """Integration produced a non-finite state."""

    def __init__(self, message: str, t: Optional[float] = None):
        super().__init__(message)
        self.t = t


class LeakageError(SolverError):
    """The working basis is not closed under the Hamiltonian or jump operators."""

    def __init__(self, message: str, leakage: float):
        super().__init__(message)
        self.leakage = leakage


class PositivityError(SolverError):
    """The density matrix acquired a significantly negative eigenvalue."""

    def __init__(self, message: str, min_eigenvalue: float, t: Optional[float] = None):
        super().__init__(message, t=t)
        self.min_eigenvalue = min_eigenvalue


class ConvergenceError(SolverError):
    """Halving the step size changed the result by more than the tolerance."""

    def __init__(self, message: str, delta: float, tolerance: float):
        super().__init__(message)
        self.delta = delta
        self.tolerance = tolerance


class FixpointError(SolverError):
    """Reachable-basis closure did not terminate within the iteration limit."""

    def __init__(self, message: str, growth: Sequence[int]):
        super().__init__(message)
        self.growth = list(growth)
