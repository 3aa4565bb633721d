# simulator/observables.py
"""
Fidelity, dark-state overlap, populations and adiabaticity diagnostics.

Observers are what the propagators call on sampled steps: ``pure(t, psi)``
accepts one state vector or a dim x n_traj batch, ``mixed(t, rho)`` a density
matrix.
"""

from abc import ABC, abstractmethod
from typing import Callable, Hashable, Optional, Sequence, Union

import numpy as np
from loguru import logger

from .dynamics import DensityMatrix
from .errors import InvalidArgumentError, ZeroVectorError
from .model import HamiltonianFn, ModelKind, dark_state
from .params import ProtocolParams
from .qspace import StateVector, ZetaLabel, require_same_basis
from .series import TimeSeries

State = Union[StateVector, DensityMatrix]
DEGENERACY_TOL = 1e-9


class Observer(ABC):
    name: str

    @abstractmethod
    def pure(self, t: float, psi: np.ndarray):
        """Expectation on a state vector or a batch of columns."""

    @abstractmethod
    def mixed(self, t: float, rho: np.ndarray) -> float:
        """Expectation on a density matrix."""


class ProjectorObserver(Observer):
    """|<v|psi>|^2 for a fixed vector or a vector function of time; NaN where the vector is undefined."""

    def __init__(self, name: str, vector: Union[np.ndarray, Callable[[float], np.ndarray]]):
        self.name = name
        self._vector = vector

    def vector(self, t: float) -> Optional[np.ndarray]:
        if not callable(self._vector):
            return self._vector
        try:
            return self._vector(t)
        except ZeroVectorError:
            return None

    def pure(self, t: float, psi: np.ndarray):
        v = self.vector(t)
        if v is None:
            return np.full(psi.shape[1:], np.nan) if psi.ndim > 1 else np.nan
        return np.abs(v.conj() @ psi) ** 2

    def mixed(self, t: float, rho: np.ndarray) -> float:
        v = self.vector(t)
        if v is None:
            return np.nan
        return float(np.real(v.conj() @ rho @ v))


class OperatorObserver(Observer):
    """Re <psi|O|psi> or Re tr(O rho) for a time-independent operator."""

    def __init__(self, name: str, operator):
        self.name = name
        self.operator = operator

    def pure(self, t: float, psi: np.ndarray):
        return np.real(np.sum(psi.conj() * (self.operator @ psi), axis=0))

    def mixed(self, t: float, rho: np.ndarray) -> float:
        product = self.operator @ rho
        return float(np.real(product.diagonal().sum()))


def fidelity(state: State, target: StateVector) -> float:
    """|<target|psi>|^2 or <target|rho|target>, clipped to [0, 1]."""
    require_same_basis(state.basis, target.basis, "state and target")
    v = target.amplitudes
    if isinstance(state, DensityMatrix):
        value = float(np.real(v.conj() @ state.elements @ v))
    else:
        value = abs(np.vdot(v, state.amplitudes)) ** 2
    return float(np.clip(value, 0.0, 1.0))


def dark_overlap(psi: StateVector, params: ProtocolParams, t: float) -> float:
    """|<D(t)|psi>|^2 for a state on the zeta catalog."""
    return fidelity(psi, dark_state(params, t))


def populations(state: State) -> dict[Hashable, float]:
    if isinstance(state, DensityMatrix):
        weights = np.real(np.diagonal(state.elements))
    else:
        weights = np.abs(state.amplitudes) ** 2
    return {label: float(w) for label, w in zip(state.basis.labels, weights)}


def photon_count(label: Hashable) -> int:
    try:
        return int(label.photon_number)
    except AttributeError:
        raise InvalidArgumentError(f"label {label!r} carries no photon number") from None


def photon_mean(state: State) -> float:
    return float(sum(photon_count(label) * weight for label, weight in populations(state).items()))


def population_column(label: ZetaLabel) -> str:
    return f"pop_j{label.j}_m{label.m}"


def adiabaticity_report(hamiltonian: HamiltonianFn, params: ProtocolParams, t_grid: Sequence[float], h: Optional[float] = None) -> TimeSeries:
    """
    Gap between the dark state and the nearest bright eigenvalue, against the
    rate at which the dark state turns.

    Columns: ``gap``, ``coupling_rate`` (max_k |<k|dD/dt>|), ``ratio``
    (coupling_rate / gap) and ``degenerate`` (1 where the gap closes or D(t) is
    undefined).
    """
    if hamiltonian.model_kind is not ModelKind.REDUCED_SUBSPACE:
        raise InvalidArgumentError("adiabaticity report needs the reduced zeta-subspace Hamiltonian")
    h = params.dt if h is None else h
    t_grid = np.asarray(t_grid, dtype=float)
    gap = np.full(t_grid.shape, np.nan)
    rate = np.full(t_grid.shape, np.nan)
    degenerate = np.zeros(t_grid.shape)
    dense = hamiltonian.to_dense()
    for i, t in enumerate(t_grid):
        try:
            d_now = dark_state(params, t)
            require_same_basis(d_now.basis, dense.basis, "dark state and Hamiltonian")
            d_plus = dark_state(params, t + h).amplitudes
            d_minus = dark_state(params, t - h).amplitudes
        except ZeroVectorError:
            degenerate[i] = 1.0
            continue
        energies, vectors = np.linalg.eigh(dense.evaluate_at(t))
        overlaps = np.abs(vectors.conj().T @ d_now.amplitudes) ** 2
        dark_index = int(np.argmax(overlaps))
        others = np.delete(np.arange(len(energies)), dark_index)
        gap[i] = float(np.abs(energies[others] - energies[dark_index]).min()) if others.size else np.inf
        derivative = (d_plus - d_minus) / (2 * h)
        rate[i] = float(np.abs(vectors[:, others].conj().T @ derivative).max()) if others.size else 0.0
        if gap[i] < DEGENERACY_TOL:
            degenerate[i] = 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(degenerate > 0, np.nan, rate / gap)
    flagged = int(degenerate.sum())
    if flagged:
        logger.warning(f"Adiabaticity report: {flagged} of {len(t_grid)} times degenerate or without a dark state")
    return TimeSeries(t_grid, {"gap": gap, "coupling_rate": rate, "ratio": ratio, "degenerate": degenerate}, {"step": h, "n_parties": params.n_parties})
