"""Adiabatic-passage simulator for N-party singlet states in a cavity."""

from .dynamics import DensityMatrix, JumpOperator, evolve_lindblad, mcwf_trajectories, propagate_schrodinger, reachable_basis
from .errors import (
    BasisMismatchError,
    ConfigError,
    ConvergenceError,
    FixpointError,
    InvalidArgumentError,
    LeakageError,
    ModelConsistencyError,
    PositivityError,
    SingletSimError,
    SolverError,
    ZeroVectorError,
)
from .model import (
    CouplingTable,
    HamiltonianFn,
    ModelKind,
    PulsePair,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    build_reduced_hamiltonian,
    build_sector_hamiltonian,
    dark_state,
    dark_state_residuals,
)
from .observables import adiabaticity_report, dark_overlap, fidelity, photon_mean, populations
from .params import IntegratorConfig, ProtocolParams
from .protocol import ModelSpace, ProtocolRun, build_model_space, run_protocol
from .qspace import BasisCatalog, BasisLabel, LevelScheme, StateVector, ZetaLabel, build_singlet, build_zeta_basis, permutation_parity, shifted_singlet
from .series import TimeSeries

__version__ = "0.1.0"

__all__ = [
    "BasisCatalog",
    "BasisLabel",
    "BasisMismatchError",
    "ConfigError",
    "ConvergenceError",
    "CouplingTable",
    "DensityMatrix",
    "FixpointError",
    "HamiltonianFn",
    "IntegratorConfig",
    "InvalidArgumentError",
    "JumpOperator",
    "LeakageError",
    "LevelScheme",
    "ModelConsistencyError",
    "ModelKind",
    "ModelSpace",
    "PositivityError",
    "ProtocolParams",
    "ProtocolRun",
    "PulsePair",
    "SingletSimError",
    "SolverError",
    "StateVector",
    "TimeSeries",
    "ZeroVectorError",
    "ZetaLabel",
    "adiabaticity_report",
    "build_effective_hamiltonian",
    "build_full_hamiltonian",
    "build_model_space",
    "build_reduced_hamiltonian",
    "build_sector_hamiltonian",
    "build_singlet",
    "build_zeta_basis",
    "dark_overlap",
    "dark_state",
    "dark_state_residuals",
    "evolve_lindblad",
    "fidelity",
    "mcwf_trajectories",
    "permutation_parity",
    "photon_mean",
    "populations",
    "propagate_schrodinger",
    "reachable_basis",
    "run_protocol",
    "shifted_singlet",
]
