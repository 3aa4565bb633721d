# simulator/protocol.py
"""
Assemble the working space of one protocol run and drive the chosen solver.

A ModelSpace holds everything a propagator and its observers need: the
catalog, the Hamiltonian restricted to the states reachable from the zeta
family, the cavity jump operator, and the embedding of the zeta states so that
target, dark state and populations can be read off in any representation.
"""

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from loguru import logger

from .dynamics import (
    DensityMatrix,
    JumpOperator,
    check_convergence,
    evolve_lindblad,
    mcwf_trajectories,
    propagate_schrodinger,
    reachable_basis,
    restrict_jump,
    restriction_indices,
)
from .model import (
    HamiltonianFn,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    build_reduced_hamiltonian,
    build_sector_hamiltonian,
    catalog_photon_operator,
    dark_state,
)
from .observables import Observer, OperatorObserver, ProjectorObserver, population_column
from .params import IntegratorConfig, ProtocolParams
from .qspace import BasisCatalog, StateVector, ZetaLabel, build_zeta_basis, singlet_zeta_coefficients, zeta_catalog, zeta_to_sector
from .series import TimeSeries

Solver = Literal["schrodinger", "lindblad", "mcwf"]
DENSE_MAX_PARTIES = 4


@dataclass(frozen=True, eq=False)
class ModelSpace:
    params: ProtocolParams
    hamiltonian: HamiltonianFn
    jumps: tuple[JumpOperator, ...]
    zeta_embedding: np.ndarray
    photon_number: np.ndarray
    excited_projector: Optional[np.ndarray]
    representation: str

    @property
    def basis(self) -> BasisCatalog:
        return self.hamiltonian.basis

    @property
    def zeta_labels(self) -> tuple:
        return zeta_catalog(self.params.n_parties).labels

    def zeta_column(self, label: ZetaLabel) -> np.ndarray:
        return self.zeta_embedding[:, zeta_catalog(self.params.n_parties).index(label)]

    def initial_state(self) -> StateVector:
        """zeta_{0,N}: atom 1 in g_{N-1}, atoms 2..N in their singlet, empty cavity."""
        return StateVector(self.basis, self.zeta_column(ZetaLabel(0, self.params.n_parties)))

    def target_state(self) -> StateVector:
        return StateVector(self.basis, self.zeta_embedding @ singlet_zeta_coefficients(self.params.n_parties))

    def dark_vector(self, t: float) -> np.ndarray:
        return self.zeta_embedding @ dark_state(self.params, t).amplitudes

    def observers(self, include_trace: bool = False) -> list[Observer]:
        observers: list[Observer] = [
            ProjectorObserver("fidelity", self.target_state().amplitudes),
            ProjectorObserver("dark_overlap", self.dark_vector),
        ]
        if include_trace:
            observers.append(OperatorObserver("trace", np.eye(len(self.basis))))
        observers.append(OperatorObserver("photon_mean", self.photon_number))
        if self.excited_projector is not None:
            observers.append(OperatorObserver("excited_population", self.excited_projector))
        observers.extend(ProjectorObserver(population_column(label), self.zeta_column(label)) for label in self.zeta_labels)
        return observers


def build_model_space(params: ProtocolParams, dissipative: Optional[bool] = None) -> ModelSpace:
    """
    Working space for ``params``.

    Closed runs of the reduced model use the zeta catalog directly. Every other
    case restricts a parent model (sector, effective product or full product
    catalog) to the labels reachable from the zeta states under the Hamiltonian
    and, when dissipative, the cavity lowering operator.
    """
    dissipative = params.kappa > 0 if dissipative is None else dissipative
    n = params.n_parties
    zetas = zeta_catalog(n)

    if params.model == "reduced" and not dissipative:
        hamiltonian = build_reduced_hamiltonian(params)
        photon_number = catalog_photon_operator(hamiltonian.basis, "number").toarray()
        return ModelSpace(params, hamiltonian, (), np.eye(len(zetas), dtype=complex), photon_number, None, "zeta")

    if params.model == "reduced":
        parent_h = build_sector_hamiltonian(params)
        parent = parent_h.basis
        seeds = [StateVector.basis_state(parent, zeta_to_sector(label)) for label in zetas.labels]
        representation = "sector"
    else:
        parent_h = build_full_hamiltonian(params) if params.model == "full" else build_effective_hamiltonian(params)
        parent = parent_h.basis
        seeds = list(build_zeta_basis(params, basis=parent).states)
        representation = "tensor"

    lowering = catalog_photon_operator(parent, "lower")
    generators = parent_h.generators() + ([lowering] if dissipative else [])
    child = reachable_basis(seeds, generators)
    indices = restriction_indices(child, parent)
    hamiltonian = parent_h.restrict(indices, child)
    embedding = np.column_stack([seed.amplitudes[indices] for seed in seeds])
    jumps = (restrict_jump(math.sqrt(params.kappa) * lowering, child, parent, "sqrt(kappa) a"),) if dissipative else ()
    photon_number = catalog_photon_operator(child, "number").toarray()
    excited = None
    if params.model == "full":
        excited = np.diag([1.0 if max(label.atom_levels) >= n else 0.0 for label in child.labels]).astype(complex)
    logger.info(f"Model space N={n} ({params.model}, {representation}): {len(child)} of {len(parent)} states reachable")
    return ModelSpace(params, hamiltonian, jumps, embedding, photon_number, excited, representation)


def choose_solver(params: ProtocolParams) -> Solver:
    if params.dissipative_solver != "auto":
        return params.dissipative_solver
    if params.kappa == 0:
        return "schrodinger"
    return "lindblad" if params.n_parties <= DENSE_MAX_PARTIES else "mcwf"


@dataclass
class ProtocolRun:
    params: ProtocolParams
    solver: Solver
    space: ModelSpace
    series: TimeSeries
    final_state: Optional[object] = None

    @property
    def final_fidelity(self) -> float:
        return self.series.final("fidelity")

    @property
    def final_fidelity_se(self) -> float:
        return self.series.final("fidelity_se") if "fidelity_se" in self.series.columns else 0.0


def _propagate(space: ModelSpace, solver: Solver, cfg: IntegratorConfig) -> tuple[TimeSeries, Optional[object]]:
    params = space.params
    psi0 = space.initial_state()
    if solver == "schrodinger":
        return propagate_schrodinger(space.hamiltonian, psi0, cfg, space.observers(include_trace=True))
    if solver == "lindblad":
        return evolve_lindblad(space.hamiltonian, space.jumps, DensityMatrix.from_state(psi0), cfg, space.observers())
    return mcwf_trajectories(space.hamiltonian, space.jumps, psi0, cfg, params.n_traj, params.seed, space.observers()), None


def run_protocol(params: ProtocolParams, solver: Optional[Solver] = None) -> ProtocolRun:
    """Build the space for ``params``, propagate from zeta_{0,N} and sample the standard observers."""
    solver = solver or choose_solver(params)
    space = build_model_space(params, dissipative=solver != "schrodinger")
    cfg = params.integrator_config()
    logger.info(f"Protocol run N={params.n_parties}, T={params.pulse_width:g}, kappa={params.kappa:g}, solver={solver}, method={cfg.method}")
    series, final_state = _propagate(space, solver, cfg)
    if cfg.check_convergence:
        coarse = series.final("fidelity")
        delta = check_convergence(lambda c: _propagate(space, solver, c)[0].final("fidelity"), cfg, baseline=coarse)
        series.metadata["convergence_delta"] = delta
    series.metadata.update({"n_parties": params.n_parties, "representation": space.representation, "dimension": len(space.basis)})
    return ProtocolRun(params, solver, space, series, final_state)
