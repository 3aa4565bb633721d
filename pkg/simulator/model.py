# simulator/model.py
"""
Pulses, coupling tables and time-dependent Hamiltonians.

A Hamiltonian is kept as a list of (operator, coefficient(t)) terms so that
projection, restriction and reachability analysis act on the time-independent
operators while propagation only re-weights them.

Builders:
    build_full_hamiltonian       - excited levels kept, rotating-frame phases e^{+-i Delta t}
    build_effective_hamiltonian  - excited levels eliminated, Stark shifts optional
    build_sector_hamiltonian     - effective model on |g_l>_1 (x) D_mu (x) |n>
    build_reduced_hamiltonian    - effective model on the zeta subspace
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import partial
from typing import Any, Callable, Literal, Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field
from scipy import sparse

from logs.config import LogConfig, setup_logger

from .errors import InvalidArgumentError, ModelConsistencyError, ZeroVectorError
from .params import ProtocolParams
from .qspace import (
    BasisCatalog,
    LevelScheme,
    SectorLabel,
    StateVector,
    ZetaLabel,
    build_zeta_basis,
    ket_bra,
    photon_operator,
    sector_catalog,
    tensor_catalog,
    tensor_embed,
    zeta_catalog,
    zeta_to_sector,
)

setup_logger(logger, LogConfig.get_model_log(), LogConfig.SIMULATOR_FORMAT)

ORACLE_MAX_PARTIES = 4
ORACLE_TOL = 1e-9
ADIABATIC_DETUNING_RATIO = 5.0


class ModelKind(str, Enum):
    FULL = "full"
    EFFECTIVE_WITH_STARK = "effective_with_stark"
    EFFECTIVE_COMPENSATED = "effective_compensated"
    REDUCED_SUBSPACE = "reduced_subspace"


class PulsePair(BaseModel):
    """
    Two overlapping Gaussians in counterintuitive order:
    Omega01 = Omega0 (e^{-((t-tau)/T)^2} + e^{-((t+tau)/T)^2}), Omega02 = Omega0 e^{-((t-tau)/T)^2}.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    omega0: float = Field(gt=0)
    width: float = Field(gt=0)
    delay: float = Field(ge=0)
    enabled: tuple[bool, bool] = (True, True)

    @classmethod
    def from_params(cls, params: ProtocolParams) -> "PulsePair":
        return cls(omega0=params.omega0, width=params.pulse_width, delay=params.tau, enabled=params.enabled_pulses)

    def _gauss(self, t, center: float):
        return np.exp(-(((np.asarray(t, dtype=float) - center) / self.width) ** 2))

    def omega01(self, t):
        if not self.enabled[0]:
            return np.zeros_like(np.asarray(t, dtype=float))[()]
        return (self.omega0 * (self._gauss(t, self.delay) + self._gauss(t, -self.delay)))[()]

    def omega02(self, t):
        if not self.enabled[1]:
            return np.zeros_like(np.asarray(t, dtype=float))[()]
        return (self.omega0 * self._gauss(t, self.delay))[()]


@dataclass(frozen=True, eq=False)
class CouplingTable:
    """
    Per-level, per-atom-group couplings.

    Atom k = 1 forms group 1; atoms 2..N share their parameters and form group 2.
    Row j of ``g_by_level_atom`` holds g_{j+1,k} (transition e_j <-> g_{j+1});
    ``delta_by_level[j]`` is Delta_{j+1}; ``chi[j]`` scales the drive of level j.
    """

    pulses: PulsePair
    g_by_level_atom: np.ndarray
    delta_by_level: np.ndarray
    chi: np.ndarray
    kappa: float
    n_parties: int

    def __post_init__(self):
        n = self.n_parties
        g = np.asarray(self.g_by_level_atom, dtype=float)
        delta = np.asarray(self.delta_by_level, dtype=float)
        chi = np.asarray(self.chi, dtype=float)
        if g.shape != (n - 1, 2):
            raise InvalidArgumentError(f"g table must have shape ({n - 1}, 2), got {g.shape}")
        if delta.shape != (n - 1,) or np.any(delta <= 0):
            raise InvalidArgumentError("detunings must be positive, one per ground-level transition")
        if chi.shape != (n - 1,) or not math.isclose(chi[0], 1.0, abs_tol=1e-12):
            raise InvalidArgumentError("chi needs one entry per level with chi[0] = 1")
        if self.kappa < 0:
            raise InvalidArgumentError(f"kappa must be non-negative, got {self.kappa}")
        object.__setattr__(self, "g_by_level_atom", g)
        object.__setattr__(self, "delta_by_level", delta)
        object.__setattr__(self, "chi", chi)
        strongest = max(self.pulses.omega0, float(np.abs(g).max()))
        if delta.min() < ADIABATIC_DETUNING_RATIO * strongest:
            logger.warning(f"Detuning {delta.min():g} is not large against max(Omega0, g) = {strongest:g}; adiabatic elimination may be inaccurate")

    @classmethod
    def from_params(cls, params: ProtocolParams) -> "CouplingTable":
        n = params.n_parties
        return cls(
            pulses=PulsePair.from_params(params),
            g_by_level_atom=np.full((n - 1, 2), params.g),
            delta_by_level=np.full(n - 1, params.delta),
            chi=params.chi_values,
            kappa=params.kappa,
            n_parties=n,
        )

    def _group(self, k: int) -> int:
        if not 1 <= k <= self.n_parties:
            raise InvalidArgumentError(f"atom index {k} outside 1..{self.n_parties}")
        return 0 if k == 1 else 1

    def _level(self, j: int) -> int:
        if not 0 <= j <= self.n_parties - 2:
            raise InvalidArgumentError(f"level index {j} outside 0..{self.n_parties - 2}")
        return j

    def envelope(self, k: int, t):
        return self.pulses.omega01(t) if self._group(k) == 0 else self.pulses.omega02(t)

    def omega(self, j: int, k: int, t):
        """Omega_{jk}(t) = chi_j (g_{1k} Delta_{j+1}) / (g_{j+1,k} Delta_1) Omega_{0k}(t)."""
        j, group = self._level(j), self._group(k)
        g_first, g_level = self.g_by_level_atom[0, group], self.g_by_level_atom[j, group]
        ratio = 1.0 if g_level == 0 else (g_first * self.delta_by_level[j]) / (g_level * self.delta_by_level[0])
        return self.chi[j] * ratio * self.envelope(k, t)

    def coupling_B(self, j: int, k: int, t):
        """Two-photon Raman coupling -Omega_{jk} g_{j+1,k} / Delta_{j+1}."""
        return -self.omega(j, k, t) * self.g_by_level_atom[j, self._group(k)] / self.delta_by_level[j]

    def coupling_A(self, j: int, k: int, t):
        """Laser Stark shift of g_j: -Omega_{jk}^2 / Delta_{j+1}."""
        return -self.omega(j, k, t) ** 2 / self.delta_by_level[j]

    def coupling_G(self, j: int, k: int) -> float:
        """Cavity Stark shift of g_{j+1} per photon: -g_{j+1,k}^2 / Delta_{j+1}."""
        j = self._level(j)
        return float(-self.g_by_level_atom[j, self._group(k)] ** 2 / self.delta_by_level[j])

    def drive_phase(self, j: int, k: int, t):
        return self.omega(j, k, t) * np.exp(1j * self.delta_by_level[j] * t)

    def cavity_phase(self, j: int, k: int, t):
        return self.g_by_level_atom[j, self._group(k)] * np.exp(-1j * self.delta_by_level[j] * t)


@dataclass(frozen=True, eq=False)
class HamiltonianTerm:
    """coefficient(t) * operator, plus its Hermitian conjugate when ``hermitian_closure``."""

    operator: Any
    coefficient: Optional[Callable[[float], complex]] = None
    hermitian_closure: bool = False
    label: str = ""
    adjoint: Any = field(init=False, repr=False, default=None)

    def __post_init__(self):
        if self.hermitian_closure:
            adjoint = self.operator.conj().T
            object.__setattr__(self, "adjoint", adjoint.tocsr() if sparse.issparse(adjoint) else np.ascontiguousarray(adjoint))

    def value(self, t: float) -> complex:
        return 1.0 if self.coefficient is None else complex(self.coefficient(t))


@dataclass(frozen=True, eq=False)
class HamiltonianFn:
    """Time-dependent Hamiltonian on a catalog."""

    basis: BasisCatalog
    terms: tuple[HamiltonianTerm, ...]
    model_kind: ModelKind
    max_frequency: float = 0.0
    leakage: float = 0.0
    _stack: Optional[np.ndarray] = field(init=False, repr=False, default=None)

    def __post_init__(self):
        dim = len(self.basis)
        for term in self.terms:
            if term.operator.shape != (dim, dim):
                raise InvalidArgumentError(f"term {term.label!r} has shape {term.operator.shape}, catalog has {dim} labels")
        if not self.is_sparse and self.terms:
            operators = []
            for term in self.terms:
                operators.append(np.asarray(term.operator, dtype=complex))
                if term.hermitian_closure:
                    operators.append(term.adjoint)
            object.__setattr__(self, "_stack", np.stack(operators))

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def is_sparse(self) -> bool:
        return any(sparse.issparse(term.operator) for term in self.terms)

    def coefficients(self, t: float) -> np.ndarray:
        values = []
        for term in self.terms:
            c = term.value(t)
            values.append(c)
            if term.hermitian_closure:
                values.append(np.conj(c))
        return np.asarray(values, dtype=complex)

    def evaluate_at(self, t: float):
        """H(t) as a fresh matrix (dense ndarray, or csr for sparse terms)."""
        if self._stack is not None:
            return np.tensordot(self.coefficients(t), self._stack, axes=1)
        if not self.terms:
            return np.zeros((self.dim, self.dim), dtype=complex)
        total = sparse.csr_matrix((self.dim, self.dim), dtype=complex)
        for term in self.terms:
            c = term.value(t)
            if c == 0:
                continue
            total = total + c * term.operator
            if term.hermitian_closure:
                total = total + np.conj(c) * term.adjoint
        return total

    def generators(self) -> list:
        """Every time-independent operator H can apply (terms and their adjoints)."""
        operators = []
        for term in self.terms:
            operators.append(sparse.csr_matrix(term.operator))
            if term.hermitian_closure:
                operators.append(sparse.csr_matrix(term.adjoint))
        return operators

    def hermiticity_error(self, t: float) -> float:
        h = self.evaluate_at(t)
        diff = h - h.conj().T
        return float(np.abs(diff.toarray() if sparse.issparse(diff) else diff).max(initial=0.0))

    def select(self, prefix: str) -> "HamiltonianFn":
        """Sub-Hamiltonian made of the terms whose label starts with ``prefix``."""
        return HamiltonianFn(self.basis, tuple(t for t in self.terms if t.label.startswith(prefix)), self.model_kind, self.max_frequency, self.leakage)

    def to_dense(self) -> "HamiltonianFn":
        if not self.is_sparse:
            return self
        terms = tuple(
            HamiltonianTerm(term.operator.toarray() if sparse.issparse(term.operator) else term.operator, term.coefficient, term.hermitian_closure, term.label)
            for term in self.terms
        )
        return HamiltonianFn(self.basis, terms, self.model_kind, self.max_frequency, self.leakage)

    def project(self, isometry, basis: BasisCatalog, model_kind: Optional[ModelKind] = None) -> "HamiltonianFn":
        """V^dagger H V term by term, V an isometry whose columns span the target space."""
        v = sparse.csc_matrix(isometry)
        v_dag = v.conj().T.tocsr()
        terms = []
        for term in self.terms:
            projected = v_dag @ sparse.csr_matrix(term.operator) @ v
            terms.append(HamiltonianTerm(projected.toarray(), term.coefficient, term.hermitian_closure, term.label))
        return HamiltonianFn(basis, tuple(terms), model_kind or self.model_kind, self.max_frequency)

    def restrict(self, indices: Sequence[int], basis: BasisCatalog) -> "HamiltonianFn":
        """Keep the rows/columns ``indices``; the largest dropped out-of-space element becomes ``leakage``."""
        terms = []
        leakage = 0.0
        for term in self.terms:
            operator = sparse.csr_matrix(term.operator)
            terms.append(HamiltonianTerm(operator[indices][:, indices].toarray(), term.coefficient, term.hermitian_closure, term.label))
            leakage = max(leakage, out_of_space_norm(operator, indices))
            if term.hermitian_closure:
                leakage = max(leakage, out_of_space_norm(sparse.csr_matrix(term.adjoint), indices))
        return HamiltonianFn(basis, tuple(terms), self.model_kind, self.max_frequency, leakage)


def out_of_space_norm(operator, indices: Sequence[int]) -> float:
    """Largest |<out|M|in>| with ``in`` among ``indices`` and ``out`` outside them."""
    operator = sparse.csr_matrix(operator)
    outside = np.setdiff1d(np.arange(operator.shape[0]), np.asarray(indices, dtype=int))
    if outside.size == 0:
        return 0.0
    block = operator[outside][:, indices]
    return float(np.abs(block.data).max()) if block.nnz else 0.0


def catalog_photon_operator(basis: BasisCatalog, kind: Literal["lower", "number"]):
    """a or a^dagger a on any catalog whose labels carry ``photon_number``; lowering out of the catalog is dropped."""
    dim = len(basis)
    if kind == "number":
        return sparse.diags(np.array([label.photon_number for label in basis.labels], dtype=complex), format="csr")
    if kind != "lower":
        raise InvalidArgumentError(f"unknown photon operator {kind!r}")
    rows, cols, values = [], [], []
    for i, label in enumerate(basis.labels):
        n = label.photon_number
        if n == 0:
            continue
        target = basis.index_of.get(_with_photons(label, n - 1))
        if target is not None:
            rows.append(target)
            cols.append(i)
            values.append(math.sqrt(n))
    return sparse.csr_matrix((values, (rows, cols)), shape=(dim, dim), dtype=complex)


def _with_photons(label, n: int):
    if isinstance(label, ZetaLabel):
        raise InvalidArgumentError("zeta labels do not carry a free photon number")
    return replace(label, photon_number=n)


def _require_cutoff(params: ProtocolParams) -> None:
    if params.cutoff < params.n_parties - 1:
        logger.error(f"Photon cutoff {params.cutoff} below the {params.n_parties - 1} photons reachable from zeta_(0,N)")
        raise InvalidArgumentError(f"photon cutoff {params.cutoff} < {params.n_parties - 1}")


def _group_sum(scheme: LevelScheme, local, group: int):
    atoms = [0] if group == 1 else range(1, scheme.n_parties)
    return sum(tensor_embed(local, k, scheme) for k in atoms)


def build_full_hamiltonian(params: ProtocolParams) -> HamiltonianFn:
    """Atoms with ground and excited ladders coupled by lasers and the cavity, on the product catalog."""
    _require_cutoff(params)
    n = params.n_parties
    table = CouplingTable.from_params(params)
    scheme = LevelScheme.for_protocol(params, with_excited=True)
    a_dag = photon_operator(scheme, "raise")
    terms = []
    for j in range(n - 1):
        for group in (1, 2):
            drive = _group_sum(scheme, ket_bra(scheme.local_dim, scheme.excited(j), scheme.ground(j)), group)
            terms.append(HamiltonianTerm(drive, partial(table.drive_phase, j, group), True, f"Omega[{j},{group}]"))
            cavity = _group_sum(scheme, ket_bra(scheme.local_dim, scheme.ground(j + 1), scheme.excited(j)), group) @ a_dag
            terms.append(HamiltonianTerm(cavity.tocsr(), partial(table.cavity_phase, j, group), True, f"g[{j},{group}]"))
    logger.info(f"Built full Hamiltonian: N={n}, {scheme.dim} product states, {len(terms)} terms")
    return HamiltonianFn(tensor_catalog(scheme), tuple(terms), ModelKind.FULL, max_frequency=float(table.delta_by_level.max()))


def build_effective_hamiltonian(params: ProtocolParams, compensated: Optional[bool] = None) -> HamiltonianFn:
    """Ground-state Raman model on the product catalog; laser Stark shifts included unless compensated."""
    _require_cutoff(params)
    compensated = params.compensated if compensated is None else compensated
    n = params.n_parties
    table = CouplingTable.from_params(params)
    scheme = LevelScheme.for_protocol(params)
    a_dag = photon_operator(scheme, "raise")
    number = photon_operator(scheme, "number")
    terms = []
    for j in range(n - 1):
        for group in (1, 2):
            raising = _group_sum(scheme, ket_bra(n, j + 1, j), group) @ a_dag
            terms.append(HamiltonianTerm(raising.tocsr(), partial(table.coupling_B, j, group), True, f"B[{j},{group}]"))
            stark = table.coupling_G(j, group) * (_group_sum(scheme, ket_bra(n, j + 1, j + 1), group) @ number)
            terms.append(HamiltonianTerm(stark.tocsr(), None, False, f"G[{j},{group}]"))
            if not compensated:
                terms.append(HamiltonianTerm(_group_sum(scheme, ket_bra(n, j, j), group), partial(table.coupling_A, j, group), False, f"A[{j},{group}]"))
    kind = ModelKind.EFFECTIVE_COMPENSATED if compensated else ModelKind.EFFECTIVE_WITH_STARK
    logger.info(f"Built effective Hamiltonian ({kind.value}): N={n}, {scheme.dim} product states")
    return HamiltonianFn(tensor_catalog(scheme), tuple(terms), kind)


def _slater_hamiltonian(params: ProtocolParams, basis: BasisCatalog, coords: Sequence[tuple[int, int, int]], compensated: bool, kind: ModelKind) -> HamiltonianFn:
    # coords[i] = (atom-1 level, level missing from atoms 2..N, photons) of basis entry i
    n = params.n_parties
    table = CouplingTable.from_params(params)
    lookup = {c: i for i, c in enumerate(coords)}
    dim = len(coords)
    first = [np.zeros((dim, dim), dtype=complex) for _ in range(n - 1)]
    rest = [np.zeros((dim, dim), dtype=complex) for _ in range(n - 1)]
    stark = np.zeros(dim)
    occupation_first = np.zeros((n - 1, dim))
    occupation_rest = np.zeros((n - 1, dim))
    for i, (level, missing, photons) in enumerate(coords):
        if level <= n - 2:
            target = lookup.get((level + 1, missing, photons + 1))
            if target is not None:
                first[level][target, i] = math.sqrt(photons + 1)
            occupation_first[level, i] = 1.0
        if missing >= 1:
            target = lookup.get((level, missing - 1, photons + 1))
            if target is not None:
                rest[missing - 1][target, i] = math.sqrt(photons + 1)
        shift = table.coupling_G(level - 1, 1) if level >= 1 else 0.0
        for occupied in range(1, n):
            if occupied != missing:
                shift += table.coupling_G(occupied - 1, 2)
        stark[i] = photons * shift
        for occupied in range(n - 1):
            if occupied != missing:
                occupation_rest[occupied, i] = 1.0
    terms = []
    for j in range(n - 1):
        terms.append(HamiltonianTerm(first[j], partial(table.coupling_B, j, 1), True, f"B[{j},1]"))
        terms.append(HamiltonianTerm(rest[j], partial(table.coupling_B, j, 2), True, f"B[{j},2]"))
    terms.append(HamiltonianTerm(np.diag(stark).astype(complex), None, False, "G"))
    if not compensated:
        for j in range(n - 1):
            terms.append(HamiltonianTerm(np.diag(occupation_first[j]).astype(complex), partial(table.coupling_A, j, 1), False, f"A[{j},1]"))
            terms.append(HamiltonianTerm(np.diag(occupation_rest[j]).astype(complex), partial(table.coupling_A, j, 2), False, f"A[{j},2]"))
    return HamiltonianFn(basis, tuple(terms), kind)


def _sector_coords(label: SectorLabel) -> tuple[int, int, int]:
    return (label.atom1_level, label.missing_level, label.photon_number)


def build_sector_hamiltonian(params: ProtocolParams) -> HamiltonianFn:
    """Effective model on every |g_l>_1 (x) D_mu (x) |n> up to the photon cutoff."""
    _require_cutoff(params)
    basis = sector_catalog(params.n_parties, params.cutoff)
    coords = [_sector_coords(label) for label in basis.labels]
    kind = ModelKind.EFFECTIVE_COMPENSATED if params.compensated else ModelKind.EFFECTIVE_WITH_STARK
    return _slater_hamiltonian(params, basis, coords, params.compensated, kind)


def projection_oracle(params: ProtocolParams) -> HamiltonianFn:
    """Effective product-space Hamiltonian projected onto the zeta states."""
    zeta = build_zeta_basis(params)
    effective = build_effective_hamiltonian(params)
    return effective.project(zeta.isometry(), zeta.catalog, ModelKind.REDUCED_SUBSPACE)


def _check_times(params: ProtocolParams, count: int = 9) -> np.ndarray:
    t_start, t_end = params.t_span
    return np.linspace(t_start, t_end, count) if t_end > t_start else np.array([t_start])


def compare_with_oracle(reduced: HamiltonianFn, oracle: HamiltonianFn, times: Sequence[float], tol: float = ORACLE_TOL) -> float:
    """Largest elementwise deviation; raises ModelConsistencyError naming the worst element above ``tol``."""
    worst = 0.0
    for t in times:
        implemented = reduced.evaluate_at(t)
        reference = oracle.evaluate_at(t)
        diff = np.abs(implemented - reference)
        row, col = np.unravel_index(np.argmax(diff), diff.shape)
        worst = max(worst, float(diff[row, col]))
        if diff[row, col] > tol * max(1.0, float(np.abs(reference).max())):
            row_label, col_label = reduced.basis.labels[row], reduced.basis.labels[col]
            message = f"reduced Hamiltonian element <{row_label}|H|{col_label}> at t={t:g} is {implemented[row, col]:.12g}, projection gives {reference[row, col]:.12g}"
            logger.error(message)
            raise ModelConsistencyError(message, row_label, col_label, float(t), complex(implemented[row, col]), complex(reference[row, col]))
    return worst


def build_reduced_hamiltonian(params: ProtocolParams, validate: Optional[bool] = None, on_mismatch: Literal["raise", "replace"] = "raise") -> HamiltonianFn:
    """
    Effective model restricted to the zeta_{j,m} states.

    Diagonal: n-photon Stark shift (G N j on zeta_{j,1}, G (N-1) j otherwise for
    uniform couplings). Off-diagonal: zeta_{j,m} -> zeta_{j+1,m} with
    sqrt(j+1) B_{j+m-1,1} and zeta_{j,m+1} -> zeta_{j+1,m} with sqrt(j+1) B_{m-1,2}.

    Args:
        params: Protocol parameters.
        validate: Compare against the projection oracle; defaults to N <= 4.
        on_mismatch: "raise" a ModelConsistencyError or "replace" by the oracle.

    Returns:
        HamiltonianFn on zeta_catalog(N).
    """
    n = params.n_parties
    basis = zeta_catalog(n)
    coords = [_sector_coords(zeta_to_sector(label)) for label in basis.labels]
    reduced = _slater_hamiltonian(params, basis, coords, params.compensated, ModelKind.REDUCED_SUBSPACE)
    if validate is None:
        validate = n <= ORACLE_MAX_PARTIES
    if validate:
        oracle = projection_oracle(params)
        try:
            worst = compare_with_oracle(reduced, oracle, _check_times(params))
            logger.debug(f"Reduced Hamiltonian N={n} agrees with projection oracle (max deviation {worst:.2e})")
        except ModelConsistencyError:
            if on_mismatch == "raise":
                raise
            logger.error(f"Replacing reduced Hamiltonian N={n} by its projection oracle")
            return oracle
    return reduced


def closure_defect(hamiltonian: HamiltonianFn, isometry, t: float) -> float:
    """||(1 - P) H(t) P|| with P the projector onto the columns of ``isometry``."""
    v = sparse.csc_matrix(isometry)
    hv = sparse.csr_matrix(hamiltonian.evaluate_at(t)) @ v
    residual = hv - v @ (v.conj().T @ hv)
    return float(np.linalg.norm(residual.toarray(), 2))


def dark_state_from_couplings(first: Sequence[float], rest: Sequence[float]) -> np.ndarray:
    """
    Normalized c_p = (-1)^p prod_{j<p} B_{j,1} prod_{m>=p} B_{m,2}, p = 0..N-1.

    ``first`` and ``rest`` hold B_{j,1} and B_{j,2} for j = 0..N-2.
    """
    first = np.asarray(first, dtype=complex)
    rest = np.asarray(rest, dtype=complex)
    n = len(first) + 1
    coefficients = np.array([(-1) ** p * np.prod(first[:p]) * np.prod(rest[p:]) for p in range(n)], dtype=complex)
    scale = np.abs(coefficients).max()
    if scale == 0 or not np.isfinite(scale):
        logger.error("Dark state undefined: all coupling products vanish")
        raise ZeroVectorError("dark state undefined when both couplings vanish")
    coefficients = coefficients / scale
    return coefficients / np.linalg.norm(coefficients)


def dark_state(params: ProtocolParams, t: float) -> StateVector:
    """Instantaneous zero-energy eigenvector D(t) on zeta_catalog(N)."""
    n = params.n_parties
    table = CouplingTable.from_params(params)
    first = [table.coupling_B(j, 1, t) for j in range(n - 1)]
    rest = [table.coupling_B(j, 2, t) for j in range(n - 1)]
    coefficients = dark_state_from_couplings(first, rest)
    basis = zeta_catalog(n)
    amplitudes = np.zeros(len(basis), dtype=complex)
    for p in range(n):
        amplitudes[basis.index_of[ZetaLabel(0, p + 1)]] = coefficients[p]
    return StateVector(basis, amplitudes)


def dark_state_residuals(params: ProtocolParams, times: Sequence[float]) -> dict[str, float]:
    """
    Largest ||H(t) D(t)|| over ``times`` for the coupling (B) part of the
    reduced Hamiltonian and for the whole of it (Stark and photon-number shifts
    included). Times without a dark state are skipped.
    """
    reduced = build_reduced_hamiltonian(params, validate=False)
    couplings = reduced.select("B")
    coupling_residual = full_residual = 0.0
    for t in times:
        try:
            d = dark_state(params, t).amplitudes
        except ZeroVectorError:
            continue
        coupling_residual = max(coupling_residual, float(np.linalg.norm(couplings.evaluate_at(t) @ d)))
        full_residual = max(full_residual, float(np.linalg.norm(reduced.evaluate_at(t) @ d)))
    logger.debug(f"Dark-state residuals N={params.n_parties}: couplings {coupling_residual:.2e}, full {full_residual:.2e}")
    return {"coupling_residual": coupling_residual, "full_residual": full_residual}
