# simulator/dynamics.py
"""
Time propagation: pure states, density matrices and quantum-jump trajectories.

Fixed-step methods march on a uniform grid from t_start to t_end and call the
observers on the sampled steps. ``rk4`` is the reference integrator,
``magnus4`` a fourth-order exponential step for slowly varying generators and
``adaptive`` delegates to scipy's DOP853.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional, Sequence

import numpy as np
from loguru import logger
from scipy import linalg, sparse
from scipy.integrate import solve_ivp

from logs.config import LogConfig, setup_logger

from .errors import BasisMismatchError, ConfigError, ConvergenceError, FixpointError, InvalidArgumentError, LeakageError, PositivityError, SolverError
from .model import HamiltonianFn, out_of_space_norm
from .params import IntegratorConfig
from .qspace import BasisCatalog, StateVector, require_same_basis
from .series import TimeSeries

setup_logger(logger, LogConfig.get_dynamics_log(), LogConfig.SIMULATOR_FORMAT)

LEAKAGE_TOL = 1e-9
TRACE_TOL = 1e-8
NORM_DRIFT_TOL = 1e-6
POSITIVITY_TOL = 1e-6
DENSE_LIMIT = 4096
FULL_MODEL_STEP_FACTOR = 0.02
SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    basis: BasisCatalog
    elements: np.ndarray

    def __post_init__(self):
        elements = np.array(self.elements, dtype=complex)
        if elements.shape != (len(self.basis), len(self.basis)):
            raise BasisMismatchError(f"density matrix shape {elements.shape} does not match {len(self.basis)} labels")
        elements.setflags(write=False)
        object.__setattr__(self, "elements", elements)

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        return cls(state.basis, np.outer(state.amplitudes, state.amplitudes.conj()))

    def trace(self) -> float:
        return float(np.trace(self.elements).real)

    def hermiticity_error(self) -> float:
        return float(np.abs(self.elements - self.elements.conj().T).max(initial=0.0))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.elements + self.elements.conj().T)).min())


@dataclass(frozen=True, eq=False)
class JumpOperator:
    matrix: np.ndarray
    tag: str = "jump"
    leakage: float = 0.0

    def __post_init__(self):
        matrix = self.matrix.toarray() if sparse.issparse(self.matrix) else np.asarray(self.matrix)
        object.__setattr__(self, "matrix", matrix.astype(complex))


def _dense_operator(hamiltonian: HamiltonianFn, what: str) -> HamiltonianFn:
    if hamiltonian.dim > DENSE_LIMIT:
        logger.error(f"{what} needs dense matrices; {hamiltonian.dim} states is too many")
        raise ConfigError(f"{what} is limited to {DENSE_LIMIT} basis states, got {hamiltonian.dim}")
    return hamiltonian.to_dense()


def _check_step_size(hamiltonian: HamiltonianFn, cfg: IntegratorConfig) -> None:
    if cfg.method == "rk4" and hamiltonian.max_frequency > 0:
        limit = FULL_MODEL_STEP_FACTOR / hamiltonian.max_frequency
        if cfg.dt > limit * (1 + 1e-12):
            logger.error(f"Step {cfg.dt:g} too coarse for frequencies up to {hamiltonian.max_frequency:g}")
            raise ConfigError(f"rk4 step must not exceed {limit:g} for this model, got {cfg.dt:g}")


def _check_leakage(hamiltonian: HamiltonianFn, jumps: Sequence[JumpOperator]) -> None:
    worst = max([hamiltonian.leakage] + [jump.leakage for jump in jumps])
    if worst > LEAKAGE_TOL:
        logger.error(f"Working basis is not closed: leakage {worst:.3e}")
        raise LeakageError(f"basis not closed under the generators (leakage {worst:.3e})", worst)


def _check_jumps(hamiltonian: HamiltonianFn, jumps: Sequence[JumpOperator]) -> None:
    for jump in jumps:
        if jump.matrix.shape != (hamiltonian.dim, hamiltonian.dim):
            raise BasisMismatchError(f"jump operator {jump.tag!r} has shape {jump.matrix.shape}, Hamiltonian has dimension {hamiltonian.dim}")


def _ensure_finite(values: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(values)):
        logger.error(f"Non-finite state encountered at t={t:.6g}")
        raise SolverError(f"state became non-finite at t={t:.6g}", t=float(t))


class _Stepper:
    """One fixed step of dy/dt = f(H(t), y) for rk4 or magnus4."""

    def __init__(self, generator_at: Callable[[float], np.ndarray], cfg: IntegratorConfig, deriv: Callable[[np.ndarray, np.ndarray], np.ndarray]):
        self.generator_at = generator_at
        self.method = cfg.method
        self.t_start = cfg.t_span[0]
        self.h = cfg.step
        self.deriv = deriv
        self._cache: dict[int, np.ndarray] = {}

    def _at_half_step(self, index: int) -> np.ndarray:
        matrix = self._cache.get(index)
        if matrix is None:
            matrix = self.generator_at(self.t_start + index * self.h / 2)
            self._cache[index] = matrix
        return matrix

    def __call__(self, k: int, y: np.ndarray) -> np.ndarray:
        h = self.h
        if self.method == "magnus4":
            t = self.t_start + k * h
            h1 = self.generator_at(t + h * (0.5 - SQRT3 / 6))
            h2 = self.generator_at(t + h * (0.5 + SQRT3 / 6))
            exponent = -0.5j * h * (h1 + h2) - (SQRT3 * h * h / 12) * (h2 @ h1 - h1 @ h2)
            return linalg.expm(exponent) @ y
        m0 = self._at_half_step(2 * k)
        mm = self._at_half_step(2 * k + 1)
        m1 = self._at_half_step(2 * k + 2)
        self._cache = {2 * k + 2: m1}
        k1 = self.deriv(m0, y)
        k2 = self.deriv(mm, y + 0.5 * h * k1)
        k3 = self.deriv(mm, y + 0.5 * h * k2)
        k4 = self.deriv(m1, y + h * k3)
        return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def _schrodinger_deriv(matrix, psi: np.ndarray) -> np.ndarray:
    return -1j * (matrix @ psi)


def _metadata(solver: str, cfg: IntegratorConfig, started: float, **extra) -> dict:
    meta = {"solver": solver, "method": cfg.method, "dt": cfg.step, "n_steps": cfg.n_steps, "t_span": list(cfg.t_span), "runtime": time.perf_counter() - started}
    meta.update(extra)
    return meta


def propagate_schrodinger(hamiltonian: HamiltonianFn, psi0: StateVector, cfg: IntegratorConfig, observers: Sequence = ()) -> tuple[TimeSeries, StateVector]:
    """
    Integrate i d|psi>/dt = H(t)|psi> over ``cfg.t_span``.

    Args:
        hamiltonian: Generator on the catalog of ``psi0``.
        psi0: Initial state.
        cfg: Integrator settings.
        observers: Objects with ``name`` and ``pure(t, psi)``.

    Returns:
        (TimeSeries with one column per observer plus ``norm_drift``, final state).
    """
    require_same_basis(hamiltonian.basis, psi0.basis, "Hamiltonian and initial state")
    _check_step_size(hamiltonian, cfg)
    started = time.perf_counter()
    times = cfg.sample_times()
    columns = {observer.name: np.zeros(len(times)) for observer in observers}
    columns["norm_drift"] = np.zeros(len(times))

    def record(i: int, t: float, psi: np.ndarray) -> None:
        _ensure_finite(psi, t)
        for observer in observers:
            columns[observer.name][i] = observer.pure(t, psi)
        columns["norm_drift"][i] = np.linalg.norm(psi) - 1.0

    psi = np.array(psi0.amplitudes, dtype=complex)
    if cfg.method == "adaptive" and cfg.n_steps > 0:
        solution = solve_ivp(
            lambda t, y: -1j * (hamiltonian.evaluate_at(t) @ y), cfg.t_span, psi, method="DOP853", t_eval=times, rtol=cfg.rtol, atol=cfg.atol
        )
        if solution.status < 0:
            t_fail = float(solution.t[-1]) if solution.t.size else cfg.t_span[0]
            logger.error(f"Adaptive integration failed at t={t_fail:.6g}: {solution.message}")
            raise SolverError(f"adaptive integration failed: {solution.message}", t=t_fail)
        for i, t in enumerate(times):
            record(i, t, solution.y[:, i])
        psi = solution.y[:, -1]
    else:
        if cfg.method == "magnus4":
            working = _dense_operator(hamiltonian, "magnus4")
        else:
            working = hamiltonian if hamiltonian.dim > DENSE_LIMIT else hamiltonian.to_dense()
        stepper = _Stepper(working.evaluate_at, cfg, _schrodinger_deriv)
        steps = cfg.sample_steps()
        sample = 0
        for k in range(cfg.n_steps + 1):
            if k == steps[sample]:
                if cfg.renormalize:
                    psi = psi / np.linalg.norm(psi)
                record(sample, times[sample], psi)
                sample += 1
            if k < cfg.n_steps:
                psi = stepper(k, psi)

    drift = float(columns["norm_drift"][-1])
    if abs(drift) > NORM_DRIFT_TOL:
        logger.warning(f"Norm drift {drift:.3e} exceeds {NORM_DRIFT_TOL:g}; consider a smaller step")
    series = TimeSeries(times, columns, _metadata("schrodinger", cfg, started, final_norm_drift=drift))
    logger.info(f"Schrodinger run finished: {cfg.n_steps} steps ({cfg.method}), norm drift {drift:.2e}")
    return series, StateVector(psi0.basis, psi)


def evolve_lindblad(hamiltonian: HamiltonianFn, jumps: Sequence[JumpOperator], rho0: DensityMatrix, cfg: IntegratorConfig, observers: Sequence = ()) -> tuple[TimeSeries, DensityMatrix]:
    """
    Integrate d rho/dt = -i[H, rho] + sum_L (L rho L^dag - {L^dag L, rho}/2).

    Observers provide ``mixed(t, rho)``. Columns ``trace`` and ``min_eigenvalue``
    are always recorded; rho is re-Hermitized after every fixed step.
    """
    require_same_basis(hamiltonian.basis, rho0.basis, "Hamiltonian and initial density matrix")
    _check_jumps(hamiltonian, jumps)
    _check_leakage(hamiltonian, jumps)
    _check_step_size(hamiltonian, cfg)
    if cfg.method == "magnus4":
        logger.error("magnus4 requested for density-matrix evolution")
        raise ConfigError("density-matrix evolution supports rk4 and adaptive only")
    started = time.perf_counter()
    dense = _dense_operator(hamiltonian, "density-matrix evolution")
    ops = [jump.matrix for jump in jumps]
    ops_dag = [op.conj().T for op in ops]
    decay = sum((op_dag @ op for op, op_dag in zip(ops, ops_dag)), np.zeros((dense.dim, dense.dim), dtype=complex))

    def effective(t: float) -> np.ndarray:
        return dense.evaluate_at(t) - 0.5j * decay

    def deriv(h_eff: np.ndarray, rho: np.ndarray) -> np.ndarray:
        out = -1j * (h_eff @ rho - rho @ h_eff.conj().T)
        for op, op_dag in zip(ops, ops_dag):
            out += op @ rho @ op_dag
        return out

    times = cfg.sample_times()
    columns = {observer.name: np.zeros(len(times)) for observer in observers}
    columns["trace"] = np.zeros(len(times))
    columns["min_eigenvalue"] = np.zeros(len(times))

    def record(i: int, t: float, rho: np.ndarray) -> None:
        _ensure_finite(rho, t)
        trace = float(np.trace(rho).real)
        if abs(trace - 1.0) > TRACE_TOL:
            logger.warning(f"Trace drift {trace - 1.0:.3e} at t={t:.6g}")
        lowest = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
        if lowest < -POSITIVITY_TOL:
            logger.error(f"Density matrix lost positivity at t={t:.6g}: eigenvalue {lowest:.3e}")
            raise PositivityError(f"negative eigenvalue {lowest:.3e} at t={t:.6g}", lowest, float(t))
        for observer in observers:
            columns[observer.name][i] = observer.mixed(t, rho)
        columns["trace"][i] = trace
        columns["min_eigenvalue"][i] = lowest

    rho = np.array(rho0.elements, dtype=complex)
    max_correction = 0.0
    if cfg.method == "adaptive" and cfg.n_steps > 0:
        shape = rho.shape
        solution = solve_ivp(
            lambda t, y: deriv(effective(t), y.reshape(shape)).reshape(-1), cfg.t_span, rho.reshape(-1), method="DOP853", t_eval=times, rtol=cfg.rtol, atol=cfg.atol
        )
        if solution.status < 0:
            t_fail = float(solution.t[-1]) if solution.t.size else cfg.t_span[0]
            logger.error(f"Adaptive density-matrix integration failed at t={t_fail:.6g}: {solution.message}")
            raise SolverError(f"adaptive integration failed: {solution.message}", t=t_fail)
        for i, t in enumerate(times):
            sample = solution.y[:, i].reshape(shape)
            sample = 0.5 * (sample + sample.conj().T)
            record(i, t, sample)
        rho = 0.5 * (solution.y[:, -1].reshape(shape) + solution.y[:, -1].reshape(shape).conj().T)
    else:
        stepper = _Stepper(effective, cfg, deriv)
        steps = cfg.sample_steps()
        sample = 0
        for k in range(cfg.n_steps + 1):
            if k == steps[sample]:
                record(sample, times[sample], rho)
                sample += 1
            if k < cfg.n_steps:
                rho = stepper(k, rho)
                skew = rho - rho.conj().T
                max_correction = max(max_correction, 0.5 * float(np.abs(skew).max()))
                rho = rho - 0.5 * skew

    logger.debug(f"Largest Hermitization correction {max_correction:.2e}")
    series = TimeSeries(times, columns, _metadata("lindblad", cfg, started, max_hermiticity_correction=max_correction, n_jump_operators=len(jumps)))
    logger.info(f"Lindblad run finished: {cfg.n_steps} steps ({cfg.method}), final trace {columns['trace'][-1]:.10f}")
    return series, DensityMatrix(rho0.basis, rho)


def _trajectory_chunk(
    generator_at: Callable[[float], np.ndarray],
    ops: Sequence[np.ndarray],
    psi0: np.ndarray,
    cfg: IntegratorConfig,
    seed: int,
    observers: Sequence,
    indices: range,
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    rngs = [np.random.default_rng([seed, index]) for index in indices]
    width = len(rngs)
    psi = np.tile(psi0.reshape(-1, 1), (1, width))
    thresholds = np.array([rng.random() for rng in rngs])
    jump_counts = np.zeros(width, dtype=int)
    times = cfg.sample_times()
    steps = cfg.sample_steps()
    values = {observer.name: np.zeros((len(times), width)) for observer in observers}
    stepper = _Stepper(generator_at, cfg, _schrodinger_deriv)

    sample = 0
    for k in range(cfg.n_steps + 1):
        if k == steps[sample]:
            t = times[sample]
            _ensure_finite(psi, t)
            normalized = psi / np.sqrt(np.sum(np.abs(psi) ** 2, axis=0))
            for observer in observers:
                values[observer.name][sample] = observer.pure(t, normalized)
            sample += 1
        if k == cfg.n_steps:
            break
        psi = stepper(k, psi)
        norms = np.sum(np.abs(psi) ** 2, axis=0)
        for column in np.flatnonzero(norms < thresholds):
            state = psi[:, column]
            candidates = [op @ state for op in ops]
            weights = np.array([np.vdot(c, c).real for c in candidates])
            total = weights.sum()
            if total <= 0:
                psi[:, column] = state / math.sqrt(norms[column])
            else:
                channel = int(np.searchsorted(np.cumsum(weights) / total, rngs[column].random(), side="right"))
                channel = min(channel, len(candidates) - 1)
                psi[:, column] = candidates[channel] / math.sqrt(weights[channel])
                jump_counts[column] += 1
            thresholds[column] = rngs[column].random()
    return values, jump_counts


def mcwf_trajectories(
    hamiltonian: HamiltonianFn,
    jumps: Sequence[JumpOperator],
    psi0: StateVector,
    cfg: IntegratorConfig,
    n_traj: int,
    seed: int,
    observers: Sequence = (),
) -> TimeSeries:
    """
    Quantum-jump unraveling of the master equation.

    Trajectory i draws from ``numpy.random.default_rng([seed, i])``, so results
    do not depend on chunking or worker count. Each observer column ``c`` is the
    trajectory mean and ``c_se`` its standard error.
    """
    require_same_basis(hamiltonian.basis, psi0.basis, "Hamiltonian and initial state")
    _check_jumps(hamiltonian, jumps)
    _check_leakage(hamiltonian, jumps)
    _check_step_size(hamiltonian, cfg)
    if n_traj < 1:
        raise InvalidArgumentError(f"need at least one trajectory, got {n_traj}")
    if cfg.method == "adaptive":
        logger.error("adaptive method requested for quantum-jump trajectories")
        raise ConfigError("quantum-jump trajectories support rk4 and magnus4 only")
    started = time.perf_counter()
    dense = _dense_operator(hamiltonian, "trajectory propagation")
    ops = [jump.matrix for jump in jumps]
    decay = sum((op.conj().T @ op for op in ops), np.zeros((dense.dim, dense.dim), dtype=complex))

    def effective(t: float) -> np.ndarray:
        return dense.evaluate_at(t) - 0.5j * decay

    chunks = [range(start, min(start + cfg.trajectory_chunk, n_traj)) for start in range(0, n_traj, cfg.trajectory_chunk)]
    run = partial(_trajectory_chunk, effective, ops, np.asarray(psi0.amplitudes, dtype=complex), cfg, seed, list(observers))
    logger.info(f"MCWF: {n_traj} trajectories in {len(chunks)} chunks, {cfg.n_workers} worker(s)")
    if cfg.n_workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.n_workers) as executor:
            results = list(executor.map(run, chunks))
    else:
        results = [run(chunk) for chunk in chunks]

    times = cfg.sample_times()
    columns: dict[str, np.ndarray] = {}
    for observer in observers:
        stacked = np.concatenate([values[observer.name] for values, _ in results], axis=1)
        columns[observer.name] = stacked.mean(axis=1)
        columns[f"{observer.name}_se"] = stacked.std(axis=1, ddof=1) / math.sqrt(n_traj) if n_traj > 1 else np.zeros(len(times))
    jump_counts = np.concatenate([counts for _, counts in results])
    meta = _metadata("mcwf", cfg, started, n_traj=n_traj, seed=seed, trajectory_chunk=cfg.trajectory_chunk, mean_jumps=float(jump_counts.mean()))
    logger.info(f"MCWF finished: mean jumps per trajectory {jump_counts.mean():.4f}")
    return TimeSeries(times, columns, meta)


def reachable_basis(seeds: Sequence[StateVector], generators: Sequence, max_iterations: int = 64) -> BasisCatalog:
    """
    Close the support of ``seeds`` under the nonzero pattern of ``generators``.

    Returns the closed label set in parent order. Raises FixpointError with the
    size after each round if no fixpoint is reached within ``max_iterations``.
    """
    if not seeds:
        raise InvalidArgumentError("reachable_basis needs at least one seed state")
    parent = seeds[0].basis
    for seed in seeds[1:]:
        require_same_basis(parent, seed.basis, "seed states")
    matrices = [sparse.csc_matrix(g) for g in generators]
    for matrix in matrices:
        if matrix.shape != (len(parent), len(parent)):
            raise BasisMismatchError(f"generator shape {matrix.shape} does not match {len(parent)} labels")

    reached = set()
    for seed in seeds:
        reached.update(np.flatnonzero(seed.amplitudes).tolist())
    frontier = sorted(reached)
    growth = [len(reached)]
    for round_index in range(max_iterations + 1):
        new = set()
        for matrix in matrices:
            if frontier:
                new.update(matrix[:, frontier].nonzero()[0].tolist())
        new -= reached
        if not new:
            logger.debug(f"Reachable basis closed at {len(reached)} of {len(parent)} labels (growth {growth})")
            return BasisCatalog.from_labels(parent.labels[i] for i in sorted(reached))
        if round_index == max_iterations:
            break
        reached |= new
        frontier = sorted(new)
        growth.append(len(reached))
    logger.error(f"Reachable basis did not close within {max_iterations} rounds: {growth}")
    raise FixpointError(f"no fixpoint within {max_iterations} rounds", growth)


def restriction_indices(child: BasisCatalog, parent: BasisCatalog) -> np.ndarray:
    """Parent positions of the child labels."""
    return parent.indices(child.labels)


def restrict_jump(matrix, child: BasisCatalog, parent: BasisCatalog, tag: str) -> JumpOperator:
    indices = restriction_indices(child, parent)
    matrix = sparse.csr_matrix(matrix)
    return JumpOperator(matrix[indices][:, indices], tag, out_of_space_norm(matrix, indices))


def check_convergence(run: Callable[[IntegratorConfig], float], cfg: IntegratorConfig, baseline: Optional[float] = None) -> float:
    """
    Compare ``run(cfg)`` (or a known ``baseline`` for it) with ``run`` at half the step.

    Returns the absolute change; raises ConvergenceError above ``cfg.convergence_tol``.
    """
    coarse = run(cfg) if baseline is None else baseline
    fine = run(cfg.halved())
    delta = abs(fine - coarse)
    if delta > cfg.convergence_tol:
        logger.error(f"Step halving changed the result by {delta:.3e} (> {cfg.convergence_tol:g})")
        raise ConvergenceError(f"not converged: step halving changed the result by {delta:.3e}", delta, cfg.convergence_tol)
    logger.info(f"Step halving changed the result by {delta:.3e}")
    return delta
