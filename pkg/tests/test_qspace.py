# tests/test_qspace.py
import itertools
import math

import numpy as np
import pytest
from scipy.stats import unitary_group

from simulator.errors import BasisMismatchError, InvalidArgumentError, ZeroVectorError
from simulator.params import ProtocolParams
from simulator.qspace import (
    BasisCatalog,
    BasisLabel,
    LevelScheme,
    SectorLabel,
    StateVector,
    ZetaLabel,
    build_singlet,
    build_zeta_basis,
    fock_lower,
    fock_raise,
    permutation_parity,
    photon_operator,
    sector_catalog,
    shifted_singlet,
    singlet_zeta_coefficients,
    tensor_catalog,
    tensor_embed,
    zeta_catalog,
    zeta_state,
)


def ground_catalog(n_atoms: int, n_levels: int) -> BasisCatalog:
    return tensor_catalog(LevelScheme(n_parties=n_atoms, n_ground=n_levels))


class TestPermutationParity:
    def test_identity_is_even(self):
        assert permutation_parity((0, 1, 2, 3)) == 1

    def test_transposition_is_odd(self):
        assert permutation_parity((1, 0, 2)) == -1

    def test_three_cycle_is_even(self):
        assert permutation_parity((1, 2, 0)) == 1

    def test_agrees_with_inversion_count(self):
        for perm in itertools.permutations(range(5)):
            inversions = sum(1 for i in range(5) for j in range(i + 1, 5) if perm[i] > perm[j])
            assert permutation_parity(perm) == (-1) ** inversions

    def test_rejects_non_permutation(self):
        with pytest.raises(InvalidArgumentError):
            permutation_parity((0, 0, 2))


class TestCatalogs:
    def test_tensor_catalog_kron_order(self):
        scheme = LevelScheme(n_parties=2, n_ground=2, photon_cutoff=1)
        labels = tensor_catalog(scheme).labels
        assert labels[0] == BasisLabel((0, 0), 0)
        assert labels[1] == BasisLabel((0, 0), 1)
        assert labels[2] == BasisLabel((0, 1), 0)
        assert len(labels) == scheme.dim == 8

    def test_zeta_catalog_size(self):
        for n in range(2, 7):
            assert len(zeta_catalog(n)) == n * (n + 1) // 2

    def test_zeta_catalog_rejects_single_party(self):
        with pytest.raises(InvalidArgumentError):
            zeta_catalog(1)

    def test_unknown_label_is_a_basis_mismatch(self):
        catalog = zeta_catalog(3)
        with pytest.raises(BasisMismatchError):
            catalog.index(ZetaLabel(5, 1))

    def test_duplicate_labels_rejected(self):
        with pytest.raises(InvalidArgumentError):
            BasisCatalog.from_labels(["a", "a"])

    def test_level_scheme_ranges(self):
        scheme = LevelScheme(n_parties=3, n_ground=3, n_excited=2)
        assert scheme.excited(1) == 4
        with pytest.raises(InvalidArgumentError):
            scheme.ground(3)
        with pytest.raises(InvalidArgumentError):
            scheme.excited(2)


class TestStateVector:
    def test_normalizing_zero_vector_raises(self):
        catalog = zeta_catalog(3)
        with pytest.raises(ZeroVectorError):
            StateVector(catalog, np.zeros(len(catalog))).normalized()

    def test_wrong_length_raises(self):
        with pytest.raises(BasisMismatchError):
            StateVector(zeta_catalog(3), np.ones(4))

    def test_inner_product_requires_same_catalog(self):
        a = StateVector.basis_state(zeta_catalog(3), ZetaLabel(0, 1))
        b = StateVector.basis_state(zeta_catalog(4), ZetaLabel(0, 1))
        with pytest.raises(BasisMismatchError):
            a.inner(b)

    def test_amplitudes_are_read_only(self):
        state = StateVector.basis_state(zeta_catalog(3), ZetaLabel(0, 1))
        with pytest.raises(ValueError):
            state.amplitudes[0] = 2.0


class TestSinglet:
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_normalized_and_antisymmetric(self, n):
        catalog = ground_catalog(n, n)
        singlet = build_singlet(n, catalog)
        assert singlet.norm() == pytest.approx(1.0, abs=1e-12)
        for perm in itertools.permutations(range(n)):
            swapped = (perm[1], perm[0]) + perm[2:]
            assert singlet.amplitude(BasisLabel(perm)) == pytest.approx(-singlet.amplitude(BasisLabel(swapped)), abs=1e-14)

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_invariant_under_collective_unitaries(self, n):
        singlet = build_singlet(n, ground_catalog(n, n))
        tensor = singlet.amplitudes.reshape((n,) * n)
        rng = np.random.default_rng(7 + n)
        for _ in range(20):
            u = unitary_group.rvs(n, random_state=rng)
            rotated = tensor
            for axis in range(n):
                rotated = np.moveaxis(np.tensordot(u, rotated, axes=([1], [axis])), 0, axis)
            overlap = np.vdot(tensor.reshape(-1), rotated.reshape(-1))
            assert abs(overlap) == pytest.approx(1.0, abs=1e-8)

    def test_missing_levels_rejected(self):
        with pytest.raises(InvalidArgumentError):
            build_singlet(3, ground_catalog(3, 2))

    def test_single_party_rejected(self):
        with pytest.raises(InvalidArgumentError):
            build_singlet(1, ground_catalog(1, 1))


class TestShiftedSinglet:
    def test_unshifted_is_the_singlet(self):
        catalog = ground_catalog(2, 3)
        shifted = shifted_singlet(2, 0, catalog)
        assert shifted.raw_norm == pytest.approx(1.0)
        assert abs(shifted.state.inner(build_singlet(2, catalog))) == pytest.approx(1.0)

    def test_two_atoms_in_three_levels(self):
        catalog = ground_catalog(2, 3)
        once = shifted_singlet(2, 1, catalog)
        assert once.raw_norm == pytest.approx(1.0)
        assert once.state.amplitude(BasisLabel((0, 2))) == pytest.approx(1 / math.sqrt(2))
        assert once.state.amplitude(BasisLabel((2, 0))) == pytest.approx(-1 / math.sqrt(2))
        twice = shifted_singlet(2, 2, catalog)
        assert twice.state.amplitude(BasisLabel((1, 2))) == pytest.approx(1 / math.sqrt(2))

    def test_raising_past_the_top_vanishes(self):
        with pytest.raises(ZeroVectorError):
            shifted_singlet(2, 3, ground_catalog(2, 3))

    def test_full_singlet_is_annihilated_by_collective_raising(self):
        with pytest.raises(ZeroVectorError):
            shifted_singlet(3, 1, ground_catalog(3, 3))

    def test_negative_shift_rejected(self):
        with pytest.raises(InvalidArgumentError):
            shifted_singlet(2, -1, ground_catalog(2, 3))


class TestZetaStates:
    @pytest.mark.parametrize("n", [3, 4])
    def test_orthonormal(self, n):
        zeta = build_zeta_basis(ProtocolParams(n_parties=n))
        gram = np.array([[a.inner(b) for b in zeta.states] for a in zeta.states])
        np.testing.assert_allclose(gram, np.eye(len(zeta.states)), atol=1e-12)

    def test_photon_number_matches_j(self):
        params = ProtocolParams(n_parties=3)
        zeta = build_zeta_basis(params)
        for label, state in zip(zeta.catalog.labels, zeta.states):
            assert {support.photon_number for support in state.support()} == {label.j}

    def test_out_of_range_index(self):
        with pytest.raises(InvalidArgumentError):
            zeta_state(3, 1, 3, ground_catalog(3, 3))

    @pytest.mark.parametrize("n", [3, 4, 5, pytest.param(6, marks=pytest.mark.slow)])
    def test_alternating_sum_is_the_singlet(self, n):
        params = ProtocolParams(n_parties=n)
        zeta = build_zeta_basis(params)
        combined = zeta.isometry() @ singlet_zeta_coefficients(n)
        singlet = build_singlet(n, zeta.parent)
        overlap = abs(np.vdot(singlet.amplitudes, combined)) ** 2
        assert overlap >= 1 - 1e-10

    def test_isometry_columns(self):
        zeta = build_zeta_basis(ProtocolParams(n_parties=3))
        v = zeta.isometry().toarray()
        np.testing.assert_allclose(v.conj().T @ v, np.eye(6), atol=1e-12)


class TestOperators:
    def test_tensor_embed_rejects_bad_atom(self):
        scheme = LevelScheme(n_parties=2, n_ground=2)
        with pytest.raises(InvalidArgumentError):
            tensor_embed(np.eye(2), 2, scheme)

    def test_tensor_embed_rejects_bad_shape(self):
        scheme = LevelScheme(n_parties=2, n_ground=2)
        with pytest.raises(BasisMismatchError):
            tensor_embed(np.eye(3), 0, scheme)

    def test_photon_ladder(self):
        scheme = LevelScheme(n_parties=1, n_ground=1, photon_cutoff=2)
        lower = photon_operator(scheme, "lower").toarray()
        raise_ = photon_operator(scheme, "raise").toarray()
        number = photon_operator(scheme, "number").toarray()
        np.testing.assert_allclose(raise_ @ lower, number, atol=1e-14)

    def test_fock_raise_and_lower_on_sector_labels(self):
        catalog = sector_catalog(3, 2)
        vacuum = StateVector.basis_state(catalog, SectorLabel(0, 2, 0))
        assert fock_lower(vacuum).norm() == 0.0
        one = fock_raise(vacuum)
        two = fock_raise(one)
        assert two.amplitude(SectorLabel(0, 2, 2)) == pytest.approx(math.sqrt(2))
        assert fock_raise(two).norm() == 0.0

    def test_fock_raise_rejects_zeta_labels(self):
        state = StateVector.basis_state(zeta_catalog(3), ZetaLabel(0, 1))
        with pytest.raises(InvalidArgumentError):
            fock_raise(state)
