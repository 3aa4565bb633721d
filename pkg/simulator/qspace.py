# simulator/qspace.py
"""
Hilbert-space bookkeeping: product bases of N multilevel atoms plus one
cavity mode, the closed zeta subspace, and the singlet constructions.

Product bases are enumerated lexicographically with atom 1 most significant
and the photon number least significant, which matches the ordering of
``scipy.sparse.kron`` chains built in the same order.
"""

import dataclasses
import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Hashable, Iterable, Literal, Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field
from scipy import sparse

from .errors import BasisMismatchError, InvalidArgumentError, ZeroVectorError
from .params import ProtocolParams

ZERO_TOL = 1e-14


class LevelScheme(BaseModel):
    """Per-atom level layout: ground ladder g_0.. then excited e_0.."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    n_parties: int = Field(ge=1)
    n_ground: int = Field(ge=1)
    n_excited: int = Field(0, ge=0)
    photon_cutoff: int = Field(0, ge=0)

    @property
    def local_dim(self) -> int:
        return self.n_ground + self.n_excited

    @property
    def photon_dim(self) -> int:
        return self.photon_cutoff + 1

    @property
    def dim(self) -> int:
        return self.local_dim**self.n_parties * self.photon_dim

    def ground(self, j: int) -> int:
        if not 0 <= j < self.n_ground:
            raise InvalidArgumentError(f"ground level {j} outside 0..{self.n_ground - 1}")
        return j

    def excited(self, j: int) -> int:
        if not 0 <= j < self.n_excited:
            raise InvalidArgumentError(f"excited level {j} outside 0..{self.n_excited - 1}")
        return self.n_ground + j

    @classmethod
    def for_protocol(cls, params: ProtocolParams, with_excited: bool = False) -> "LevelScheme":
        n = params.n_parties
        return cls(n_parties=n, n_ground=n, n_excited=n - 1 if with_excited else 0, photon_cutoff=params.cutoff)


@dataclass(frozen=True, order=True)
class BasisLabel:
    """Product state |l_1 .. l_N>|n> by local level index."""

    atom_levels: tuple[int, ...]
    photon_number: int = 0


@dataclass(frozen=True, order=True)
class ZetaLabel:
    """zeta_{j,m}: j photons, atom 1 in g_{j+m-1}, atoms 2..N in S_{N-1,N-m}."""

    j: int
    m: int

    @property
    def photon_number(self) -> int:
        return self.j


@dataclass(frozen=True, order=True)
class SectorLabel:
    """|g_l>_1 (x) D_mu (x) |n>, D_mu the Slater state of atoms 2..N missing level mu."""

    atom1_level: int
    missing_level: int
    photon_number: int = 0


@dataclass(frozen=True, eq=False)
class BasisCatalog:
    """Ordered, duplicate-free list of basis labels with O(1) lookup."""

    labels: tuple[Hashable, ...]
    index_of: dict = field(repr=False)

    @classmethod
    def from_labels(cls, labels: Iterable[Hashable]) -> "BasisCatalog":
        labels = tuple(labels)
        index_of = {label: i for i, label in enumerate(labels)}
        if len(index_of) != len(labels):
            raise InvalidArgumentError("basis catalog labels must be unique")
        return cls(labels, index_of)

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label: Hashable) -> bool:
        return label in self.index_of

    def index(self, label: Hashable) -> int:
        try:
            return self.index_of[label]
        except KeyError:
            raise BasisMismatchError(f"label {label} is not in this catalog") from None

    def same_as(self, other: "BasisCatalog") -> bool:
        return self is other or self.labels == other.labels

    def indices(self, labels: Iterable[Hashable]) -> np.ndarray:
        return np.array([self.index(label) for label in labels], dtype=int)


def require_same_basis(a: BasisCatalog, b: BasisCatalog, what: str = "operands") -> None:
    if not a.same_as(b):
        logger.error(f"Basis mismatch between {what}: {len(a)} vs {len(b)} labels")
        raise BasisMismatchError(f"{what} live on different basis catalogs")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Immutable amplitude vector over a catalog."""

    basis: BasisCatalog
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amplitudes.shape[0] != len(self.basis):
            raise BasisMismatchError(f"{amplitudes.shape[0]} amplitudes for a catalog of {len(self.basis)} labels")
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def basis_state(cls, basis: BasisCatalog, label: Hashable) -> "StateVector":
        amplitudes = np.zeros(len(basis), dtype=complex)
        amplitudes[basis.index(label)] = 1.0
        return cls(basis, amplitudes)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        norm = self.norm()
        if norm < ZERO_TOL:
            raise ZeroVectorError("cannot normalize the zero vector")
        return StateVector(self.basis, self.amplitudes / norm)

    def inner(self, other: "StateVector") -> complex:
        """<self|other>."""
        require_same_basis(self.basis, other.basis, "inner product operands")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def amplitude(self, label: Hashable) -> complex:
        return complex(self.amplitudes[self.basis.index(label)])

    def support(self) -> list:
        return [self.basis.labels[i] for i in np.flatnonzero(np.abs(self.amplitudes) > 0)]


@dataclass(frozen=True)
class ShiftedSinglet:
    state: StateVector
    raw_norm: float


@lru_cache(maxsize=16)
def tensor_catalog(scheme: LevelScheme) -> BasisCatalog:
    """All product labels of ``scheme`` in kron order."""
    labels = [
        BasisLabel(levels, n)
        for levels in itertools.product(range(scheme.local_dim), repeat=scheme.n_parties)
        for n in range(scheme.photon_dim)
    ]
    logger.debug(f"Enumerated tensor catalog: {scheme.n_parties} atoms x {scheme.local_dim} levels, cutoff {scheme.photon_cutoff} -> {len(labels)} labels")
    return BasisCatalog.from_labels(labels)


@lru_cache(maxsize=16)
def zeta_catalog(n_parties: int) -> BasisCatalog:
    """ZetaLabel(j, m) for 0 <= j <= N-1, 1 <= m <= N-j, ordered by (j, m)."""
    if n_parties < 2:
        raise InvalidArgumentError(f"need at least 2 parties, got {n_parties}")
    return BasisCatalog.from_labels(ZetaLabel(j, m) for j in range(n_parties) for m in range(1, n_parties - j + 1))


@lru_cache(maxsize=16)
def sector_catalog(n_parties: int, photon_cutoff: int) -> BasisCatalog:
    """Every SectorLabel over N ground levels and photon numbers 0..cutoff."""
    return BasisCatalog.from_labels(
        SectorLabel(level, missing, n) for level in range(n_parties) for missing in range(n_parties) for n in range(photon_cutoff + 1)
    )


def zeta_to_sector(label: ZetaLabel) -> SectorLabel:
    return SectorLabel(label.j + label.m - 1, label.m - 1, label.j)


def permutation_parity(perm: Sequence[int]) -> int:
    """+1 for even, -1 for odd permutations of 0..n-1 (cycle decomposition)."""
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise InvalidArgumentError(f"{tuple(perm)} is not a permutation of 0..{n - 1}")
    seen = [False] * n
    parity = 1
    for start in range(n):
        if seen[start]:
            continue
        length = 0
        position = start
        while not seen[position]:
            seen[position] = True
            position = perm[position]
            length += 1
        if length % 2 == 0:
            parity = -parity
    return parity


def build_singlet(n: int, basis: BasisCatalog, photon_number: int = 0) -> StateVector:
    """
    Totally antisymmetric state of ``n`` atoms over ground levels 0..n-1.

    Args:
        n: Number of atoms (>= 2); every label of ``basis`` must carry n atoms.
        basis: Catalog of BasisLabel entries containing every permutation of 0..n-1.
        photon_number: Photon number attached to each component.

    Returns:
        Normalized StateVector with amplitude sgn(p)/sqrt(n!) on |p(0)..p(n-1)>.
    """
    if n < 2:
        raise InvalidArgumentError(f"a singlet needs at least 2 parties, got {n}")
    amplitudes = np.zeros(len(basis), dtype=complex)
    weight = 1 / math.sqrt(math.factorial(n))
    for perm in itertools.permutations(range(n)):
        label = BasisLabel(perm, photon_number)
        if label not in basis:
            logger.error(f"Singlet construction: basis lacks {label}")
            raise InvalidArgumentError(f"basis has insufficient levels or atoms for an {n}-party singlet (missing {label})")
        amplitudes[basis.index_of[label]] = permutation_parity(perm) * weight
    return StateVector(basis, amplitudes)


def collective_raise(state: StateVector, n_ground: Optional[int] = None) -> StateVector:
    """
    Apply sum_k sum_j |g_{j+1}><g_j|_k to ``state``.

    Raising into a level absent from the catalog (or at/above ``n_ground``) is
    dropped, as the operator truncated to the catalog would do.
    """
    basis = state.basis
    out = np.zeros(len(basis), dtype=complex)
    for i in np.flatnonzero(state.amplitudes):
        label = basis.labels[i]
        levels = label.atom_levels
        for k, level in enumerate(levels):
            if n_ground is not None and level + 1 >= n_ground:
                continue
            raised = BasisLabel(levels[:k] + (level + 1,) + levels[k + 1 :], label.photon_number)
            target = basis.index_of.get(raised)
            if target is not None:
                out[target] += state.amplitudes[i]
    return StateVector(basis, out)


def shifted_singlet(n: int, q: int, basis: BasisCatalog, n_ground: Optional[int] = None) -> ShiftedSinglet:
    """
    (collective raising)^q applied to the n-party singlet, then normalized.

    The pre-normalization norm is returned alongside; a vanishing result
    raises ZeroVectorError instead of being silently normalized.
    """
    if q < 0:
        raise InvalidArgumentError(f"shift q must be non-negative, got {q}")
    state = build_singlet(n, basis)
    for _ in range(q):
        state = collective_raise(state, n_ground)
    raw_norm = state.norm()
    if raw_norm < ZERO_TOL:
        logger.error(f"Shifted singlet S_({n},{q}) vanishes on this catalog")
        raise ZeroVectorError(f"S_({n},{q}) is the zero vector")
    return ShiftedSinglet(StateVector(basis, state.amplitudes / raw_norm), raw_norm)


@lru_cache(maxsize=16)
def _rest_shifted_singlet(n_parties: int, q: int) -> ShiftedSinglet:
    rest = tensor_catalog(LevelScheme(n_parties=n_parties - 1, n_ground=n_parties))
    return shifted_singlet(n_parties - 1, q, rest)


def zeta_state(n_parties: int, j: int, m: int, basis: BasisCatalog) -> StateVector:
    """zeta_{j,m} = |g_{j+m-1}>_1 (x) S_{N-1,N-m} (x) |j> on a product catalog."""
    if not (0 <= j <= n_parties - 1 and 1 <= m <= n_parties - j):
        raise InvalidArgumentError(f"zeta index (j={j}, m={m}) outside 0<=j<=N-1, 1<=m<=N-j for N={n_parties}")
    rest = _rest_shifted_singlet(n_parties, n_parties - m).state
    amplitudes = np.zeros(len(basis), dtype=complex)
    for i in np.flatnonzero(rest.amplitudes):
        label = BasisLabel((j + m - 1,) + rest.basis.labels[i].atom_levels, j)
        target = basis.index_of.get(label)
        if target is None:
            raise InvalidArgumentError(f"catalog cannot hold zeta_({j},{m}): missing {label}")
        amplitudes[target] = rest.amplitudes[i]
    return StateVector(basis, amplitudes)


@dataclass(frozen=True, eq=False)
class ZetaBasis:
    """The zeta states embedded in a product catalog."""

    catalog: BasisCatalog
    states: tuple[StateVector, ...]
    parent: BasisCatalog

    def isometry(self) -> sparse.csc_matrix:
        """parent_dim x n_zeta matrix whose columns are the zeta states."""
        rows, cols, values = [], [], []
        for column, state in enumerate(self.states):
            support = np.flatnonzero(state.amplitudes)
            rows.extend(support)
            cols.extend([column] * len(support))
            values.extend(state.amplitudes[support])
        return sparse.csc_matrix((values, (rows, cols)), shape=(len(self.parent), len(self.states)), dtype=complex)


def build_zeta_basis(params: ProtocolParams, basis: Optional[BasisCatalog] = None) -> ZetaBasis:
    """zeta_{j,m} for all (j, m), on ``basis`` or the ground-only product catalog of ``params``."""
    n = params.n_parties
    parent = basis if basis is not None else tensor_catalog(LevelScheme.for_protocol(params))
    catalog = zeta_catalog(n)
    states = tuple(zeta_state(n, label.j, label.m, parent) for label in catalog.labels)
    logger.debug(f"Built {len(states)} zeta states for N={n} on a {len(parent)}-label catalog")
    return ZetaBasis(catalog, states, parent)


def singlet_zeta_coefficients(n_parties: int) -> np.ndarray:
    """S_N = N^-1/2 sum_p (-1)^p zeta_{0,p+1}, as amplitudes over zeta_catalog(N)."""
    catalog = zeta_catalog(n_parties)
    coefficients = np.zeros(len(catalog), dtype=complex)
    for p in range(n_parties):
        coefficients[catalog.index_of[ZetaLabel(0, p + 1)]] = (-1) ** p / math.sqrt(n_parties)
    return coefficients


def ket_bra(dim: int, row: int, col: int) -> sparse.csr_matrix:
    """|row><col| on a ``dim``-dimensional local space."""
    return sparse.csr_matrix(([1.0], ([row], [col])), shape=(dim, dim), dtype=complex)


def tensor_embed(local_operator, atom_index: int, scheme: LevelScheme) -> sparse.csr_matrix:
    """Embed a single-atom operator (0-based ``atom_index``) into the product space."""
    if not 0 <= atom_index < scheme.n_parties:
        raise InvalidArgumentError(f"atom index {atom_index} outside 0..{scheme.n_parties - 1}")
    local = sparse.csr_matrix(local_operator, dtype=complex)
    if local.shape != (scheme.local_dim, scheme.local_dim):
        raise BasisMismatchError(f"local operator shape {local.shape} does not match local dimension {scheme.local_dim}")
    left = sparse.identity(scheme.local_dim**atom_index, dtype=complex, format="csr")
    right = sparse.identity(scheme.local_dim ** (scheme.n_parties - atom_index - 1) * scheme.photon_dim, dtype=complex, format="csr")
    return sparse.kron(sparse.kron(left, local, format="csr"), right, format="csr")


def photon_operator(scheme: LevelScheme, kind: Literal["lower", "raise", "number"]) -> sparse.csr_matrix:
    """Cavity ladder or number operator on the product space."""
    occupation = np.arange(scheme.photon_dim)
    if kind == "number":
        local = sparse.diags(occupation.astype(complex), format="csr")
    elif kind in ("lower", "raise"):
        lower = sparse.diags(np.sqrt(occupation[1:]).astype(complex), offsets=1, format="csr")
        local = lower if kind == "lower" else lower.T.tocsr()
    else:
        raise InvalidArgumentError(f"unknown photon operator {kind!r}")
    atoms = sparse.identity(scheme.local_dim**scheme.n_parties, dtype=complex, format="csr")
    return sparse.kron(atoms, local, format="csr")


def _shift_photons(state: StateVector, delta: int) -> StateVector:
    basis = state.basis
    out = np.zeros(len(basis), dtype=complex)
    for i in np.flatnonzero(state.amplitudes):
        label = basis.labels[i]
        n = label.photon_number
        if n + delta < 0:
            continue
        try:
            shifted = dataclasses.replace(label, photon_number=n + delta)
        except TypeError:
            raise InvalidArgumentError(f"labels of type {type(label).__name__} do not carry a free photon number") from None
        target = basis.index_of.get(shifted)
        if target is None:
            continue
        factor = math.sqrt(n + 1) if delta > 0 else math.sqrt(n)
        out[target] += factor * state.amplitudes[i]
    return StateVector(basis, out)


def fock_raise(state: StateVector) -> StateVector:
    """a^dagger on label-based catalogs; components pushed past the cutoff are dropped."""
    return _shift_photons(state, +1)


def fock_lower(state: StateVector) -> StateVector:
    """a on label-based catalogs; the vacuum maps to zero."""
    return _shift_photons(state, -1)
