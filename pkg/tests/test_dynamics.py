# tests/test_dynamics.py
import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import sparse

from simulator.dynamics import (
    DensityMatrix,
    JumpOperator,
    check_convergence,
    evolve_lindblad,
    mcwf_trajectories,
    propagate_schrodinger,
    reachable_basis,
    restriction_indices,
)
from simulator.errors import BasisMismatchError, ConfigError, ConvergenceError, FixpointError, LeakageError, SolverError
from simulator.model import (
    HamiltonianFn,
    HamiltonianTerm,
    ModelKind,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    catalog_photon_operator,
    closure_defect,
)
from simulator.observables import OperatorObserver, ProjectorObserver
from simulator.params import IntegratorConfig, ProtocolParams
from simulator.protocol import build_model_space, run_protocol
from simulator.qspace import BasisCatalog, BasisLabel, StateVector, build_zeta_basis

TWO_LEVEL = BasisCatalog.from_labels(["g", "e"])


def rabi_hamiltonian(omega: float = 1.0) -> HamiltonianFn:
    drive = np.array([[0.0, 0.5 * omega], [0.5 * omega, 0.0]], dtype=complex)
    return HamiltonianFn(TWO_LEVEL, (HamiltonianTerm(drive, None, False, "drive"),), ModelKind.REDUCED_SUBSPACE)


def cavity_catalog(cutoff: int = 1) -> BasisCatalog:
    return BasisCatalog.from_labels(BasisLabel((0,), n) for n in range(cutoff + 1))


def decay_problem(kappa: float):
    basis = cavity_catalog()
    hamiltonian = HamiltonianFn(basis, (), ModelKind.REDUCED_SUBSPACE)
    jump = JumpOperator(math.sqrt(kappa) * catalog_photon_operator(basis, "lower"), "sqrt(kappa) a")
    number = catalog_photon_operator(basis, "number").toarray()
    return basis, hamiltonian, jump, number


class TestSchrodinger:
    @pytest.mark.parametrize("method, dt", [("rk4", 0.01), ("magnus4", 0.05), ("adaptive", 0.05)])
    def test_rabi_oscillation(self, method, dt):
        cfg = IntegratorConfig(method=method, dt=dt, t_span=(0.0, 2 * math.pi), sample_every=10)
        excited = ProjectorObserver("excited", np.array([0.0, 1.0], dtype=complex))
        series, final = propagate_schrodinger(rabi_hamiltonian(), StateVector.basis_state(TWO_LEVEL, "g"), cfg, [excited])
        np.testing.assert_allclose(series.column("excited"), np.sin(series.t / 2) ** 2, atol=1e-6)
        assert final.norm() == pytest.approx(1.0, abs=1e-8)
        assert abs(series.final("norm_drift")) < 1e-8

    def test_basis_mismatch(self):
        cfg = IntegratorConfig(t_span=(0.0, 1.0))
        with pytest.raises(BasisMismatchError):
            propagate_schrodinger(rabi_hamiltonian(), StateVector.basis_state(cavity_catalog(), BasisLabel((0,), 0)), cfg)

    def test_non_finite_state(self):
        broken = HamiltonianFn(TWO_LEVEL, (HamiltonianTerm(np.eye(2, dtype=complex), lambda t: np.nan, False, "nan"),), ModelKind.REDUCED_SUBSPACE)
        cfg = IntegratorConfig(t_span=(0.0, 1.0), dt=0.1)
        with pytest.raises(SolverError) as excinfo:
            propagate_schrodinger(broken, StateVector.basis_state(TWO_LEVEL, "g"), cfg)
        assert excinfo.value.t == pytest.approx(0.1)

    def test_full_model_step_limit(self):
        params = ProtocolParams(n_parties=3, model="full", t_final=1.0)
        hamiltonian = build_full_hamiltonian(params)
        psi0 = build_zeta_basis(params, basis=hamiltonian.basis).states[-1]
        with pytest.raises(ConfigError):
            propagate_schrodinger(hamiltonian, psi0, params.integrator_config(dt=0.02))

    def test_zero_length_run_records_initial_state(self):
        cfg = IntegratorConfig(t_span=(0.0, 0.0))
        excited = ProjectorObserver("excited", np.array([0.0, 1.0], dtype=complex))
        series, final = propagate_schrodinger(rabi_hamiltonian(), StateVector.basis_state(TWO_LEVEL, "g"), cfg, [excited])
        assert len(series) == 1
        assert series.final("excited") == 0.0


class TestLindblad:
    def test_fock_decay(self):
        kappa = 0.5
        basis, hamiltonian, jump, number = decay_problem(kappa)
        rho0 = DensityMatrix.from_state(StateVector.basis_state(basis, BasisLabel((0,), 1)))
        cfg = IntegratorConfig(t_span=(0.0, 4.0), dt=0.01, sample_every=20)
        series, final = evolve_lindblad(hamiltonian, [jump], rho0, cfg, [OperatorObserver("photon_mean", number)])
        np.testing.assert_allclose(series.column("photon_mean"), np.exp(-kappa * series.t), atol=1e-6)
        np.testing.assert_allclose(series.column("trace"), 1.0, atol=1e-10)
        assert final.min_eigenvalue() > -1e-12
        assert final.hermiticity_error() <= 1e-14

    def test_adaptive_fock_decay(self):
        basis, hamiltonian, jump, number = decay_problem(0.3)
        rho0 = DensityMatrix.from_state(StateVector.basis_state(basis, BasisLabel((0,), 1)))
        cfg = IntegratorConfig(method="adaptive", t_span=(0.0, 3.0), dt=0.1)
        series, _ = evolve_lindblad(hamiltonian, [jump], rho0, cfg, [OperatorObserver("photon_mean", number)])
        np.testing.assert_allclose(series.column("photon_mean"), np.exp(-0.3 * series.t), atol=1e-6)

    def test_magnus_rejected(self):
        basis, hamiltonian, jump, _ = decay_problem(0.1)
        rho0 = DensityMatrix.from_state(StateVector.basis_state(basis, BasisLabel((0,), 1)))
        with pytest.raises(ConfigError):
            evolve_lindblad(hamiltonian, [jump], rho0, IntegratorConfig(method="magnus4", t_span=(0.0, 1.0)))

    def test_leaky_basis_rejected(self):
        params = ProtocolParams(n_parties=3, kappa=0.1, t_final=1.0)
        space = build_model_space(params, dissipative=True)
        truncated = space.hamiltonian.restrict(np.arange(3), BasisCatalog.from_labels(space.basis.labels[:3]))
        rho0 = DensityMatrix(truncated.basis, np.diag([1.0, 0.0, 0.0]))
        with pytest.raises(LeakageError) as excinfo:
            evolve_lindblad(truncated, [], rho0, params.integrator_config())
        assert excinfo.value.leakage > 1e-9

    def test_jump_shape_checked(self):
        basis, hamiltonian, _, _ = decay_problem(0.1)
        rho0 = DensityMatrix.from_state(StateVector.basis_state(basis, BasisLabel((0,), 1)))
        with pytest.raises(BasisMismatchError):
            evolve_lindblad(hamiltonian, [JumpOperator(np.eye(3))], rho0, IntegratorConfig(t_span=(0.0, 1.0)))


class TestTrajectories:
    def test_fock_decay_within_standard_errors(self):
        kappa = 0.5
        basis, hamiltonian, jump, number = decay_problem(kappa)
        psi0 = StateVector.basis_state(basis, BasisLabel((0,), 1))
        cfg = IntegratorConfig(t_span=(0.0, 4.0), dt=0.01, sample_every=50)
        series = mcwf_trajectories(hamiltonian, [jump], psi0, cfg, n_traj=2000, seed=5, observers=[OperatorObserver("photon_mean", number)])
        expected = np.exp(-kappa * series.t)
        assert np.all(np.abs(series.column("photon_mean") - expected) <= 3 * series.column("photon_mean_se") + 0.01)
        assert series.metadata["n_traj"] == 2000
        assert series.metadata["mean_jumps"] == pytest.approx(1 - math.exp(-2.0), abs=0.05)

    def test_reproducible_with_seed_and_workers(self):
        _, hamiltonian, jump, number = decay_problem(0.5)
        psi0 = StateVector.basis_state(hamiltonian.basis, BasisLabel((0,), 1))
        observer = [OperatorObserver("photon_mean", number)]
        serial = mcwf_trajectories(hamiltonian, [jump], psi0, IntegratorConfig(t_span=(0.0, 2.0), dt=0.02, trajectory_chunk=50), 200, 9, observer)
        threaded = mcwf_trajectories(hamiltonian, [jump], psi0, IntegratorConfig(t_span=(0.0, 2.0), dt=0.02, trajectory_chunk=50, n_workers=3), 200, 9, observer)
        np.testing.assert_array_equal(serial.column("photon_mean"), threaded.column("photon_mean"))
        other_seed = mcwf_trajectories(hamiltonian, [jump], psi0, IntegratorConfig(t_span=(0.0, 2.0), dt=0.02, trajectory_chunk=50), 200, 10, observer)
        assert not np.array_equal(serial.column("photon_mean"), other_seed.column("photon_mean"))

    def test_adaptive_rejected(self):
        _, hamiltonian, jump, _ = decay_problem(0.5)
        psi0 = StateVector.basis_state(hamiltonian.basis, BasisLabel((0,), 1))
        with pytest.raises(ConfigError):
            mcwf_trajectories(hamiltonian, [jump], psi0, IntegratorConfig(method="adaptive", t_span=(0.0, 1.0)), 10, 1)


class TestSolverAgreement:
    def test_closed_system_solvers_agree(self, short_params):
        schrodinger = run_protocol(short_params, "schrodinger").series.column("fidelity")
        lindblad = run_protocol(short_params, "lindblad").series.column("fidelity")
        trajectories = run_protocol(short_params.with_updates(n_traj=2), "mcwf").series.column("fidelity")
        np.testing.assert_allclose(lindblad, schrodinger, atol=1e-6)
        np.testing.assert_allclose(trajectories, schrodinger, atol=1e-6)

    def test_trajectories_follow_master_equation_with_decay(self, short_params):
        params = short_params.with_updates(kappa=0.05, n_traj=400)
        lindblad = run_protocol(params, "lindblad").series
        trajectories = run_protocol(params, "mcwf").series
        np.testing.assert_array_equal(trajectories.t, lindblad.t)
        difference = np.abs(trajectories.column("fidelity") - lindblad.column("fidelity"))
        assert np.all(difference <= 3 * trajectories.column("fidelity_se") + 5e-3)
        assert lindblad.final("fidelity") < run_protocol(short_params).final_fidelity

    def test_dissipative_space_is_reachable_sector_part(self):
        space = build_model_space(ProtocolParams(n_parties=4, kappa=0.05), dissipative=True)
        assert space.representation == "sector"
        assert space.hamiltonian.leakage == 0.0
        assert all(jump.leakage == 0.0 for jump in space.jumps)
        assert len(space.basis) >= 10

    def test_effective_product_space_agrees_with_zeta_space(self, short_params):
        reduced = run_protocol(short_params).series.column("fidelity")
        effective = run_protocol(short_params.with_updates(model="effective")).series.column("fidelity")
        np.testing.assert_allclose(effective, reduced, atol=1e-8)


class TestReachableBasis:
    def chain(self, length: int):
        basis = BasisCatalog.from_labels(range(length))
        shift = sparse.diags(np.ones(length - 1), offsets=-1, format="csr")
        return basis, shift

    def test_closes_over_chain(self):
        basis, shift = self.chain(5)
        closed = reachable_basis([StateVector.basis_state(basis, 1)], [shift])
        assert closed.labels == (1, 2, 3, 4)

    def test_no_generators_keeps_seeds(self):
        basis, _ = self.chain(5)
        closed = reachable_basis([StateVector.basis_state(basis, 1), StateVector.basis_state(basis, 3)], [])
        assert closed.labels == (1, 3)

    def test_zeta_family_closed_under_effective_hamiltonian(self):
        params = ProtocolParams(n_parties=3)
        effective = build_effective_hamiltonian(params)
        seeds = list(build_zeta_basis(params, basis=effective.basis).states)
        closed = reachable_basis(seeds, effective.generators())
        indices = restriction_indices(closed, effective.basis)
        restricted = effective.restrict(indices, closed)
        isometry = np.column_stack([seed.amplitudes[indices] for seed in seeds])
        np.testing.assert_allclose(np.linalg.norm(isometry, axis=0), 1.0, atol=1e-12)
        for t in np.random.default_rng(2).uniform(-1600.0, 1600.0, 10):
            assert closure_defect(restricted, isometry, t) <= 1e-9

    def test_iteration_limit(self):
        basis, shift = self.chain(6)
        with pytest.raises(FixpointError) as excinfo:
            reachable_basis([StateVector.basis_state(basis, 0)], [shift], max_iterations=2)
        assert excinfo.value.growth == [1, 2, 3]

    def test_generator_shape_checked(self):
        basis, _ = self.chain(3)
        with pytest.raises(BasisMismatchError):
            reachable_basis([StateVector.basis_state(basis, 0)], [sparse.eye(4)])


class TestConvergence:
    def test_step_halving_detects_change(self):
        cfg = IntegratorConfig(t_span=(0.0, 1.0), dt=0.1)
        with pytest.raises(ConvergenceError) as excinfo:
            check_convergence(lambda c: c.dt, cfg)
        assert excinfo.value.delta == pytest.approx(0.05)

    def test_converged(self):
        cfg = IntegratorConfig(t_span=(0.0, 1.0), dt=0.1)
        assert check_convergence(lambda c: 1.0, cfg) == 0.0

    def test_invalid_span(self):
        with pytest.raises(ValidationError):
            IntegratorConfig(t_span=(1.0, 0.0))
