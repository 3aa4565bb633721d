# tests/test_model.py
import math

import numpy as np
import pytest
from pydantic import ValidationError

from simulator import model
from simulator.errors import InvalidArgumentError, ModelConsistencyError, ZeroVectorError
from simulator.model import (
    CouplingTable,
    ModelKind,
    PulsePair,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    build_reduced_hamiltonian,
    build_sector_hamiltonian,
    closure_defect,
    compare_with_oracle,
    dark_state,
    dark_state_from_couplings,
    dark_state_residuals,
    projection_oracle,
)
from simulator.params import ProtocolParams
from simulator.qspace import ZetaLabel, build_zeta_basis, singlet_zeta_coefficients, zeta_to_sector


def random_times(params: ProtocolParams, count: int, seed: int = 0) -> np.ndarray:
    half = 2 * params.pulse_width
    return np.random.default_rng(seed).uniform(-half, half, count)


class TestProtocolParams:
    def test_derived_defaults(self):
        params = ProtocolParams(n_parties=4, pulse_width=100.0)
        assert params.tau == 50.0
        assert params.duration == 500.0
        assert params.t_span == (-250.0, 250.0)
        assert params.cutoff == 3
        np.testing.assert_array_equal(params.chi_values, np.ones(3))

    def test_comma_separated_tuples(self):
        params = ProtocolParams(n_parties=3, chi="1,1.5", enabled_pulses="true,false")
        assert params.chi == (1.0, 1.5)
        assert params.enabled_pulses == (True, False)

    def test_chi_must_start_at_one(self):
        with pytest.raises(ValidationError):
            ProtocolParams(n_parties=3, chi=(2.0, 1.0))

    def test_chi_length(self):
        with pytest.raises(ValidationError):
            ProtocolParams(n_parties=3, chi=(1.0,))

    def test_cutoff_too_small(self):
        with pytest.raises(ValidationError):
            ProtocolParams(n_parties=4, photon_cutoff=2)

    def test_unknown_field(self):
        with pytest.raises(ValidationError):
            ProtocolParams(omega00=1.0)

    def test_sample_grid(self):
        cfg = ProtocolParams(pulse_width=10.0, dt=0.01, n_samples=11).integrator_config()
        assert cfg.n_steps == 5000
        assert cfg.sample_steps()[-1] == cfg.n_steps
        assert len(cfg.sample_times()) == 11

    def test_zero_length_run(self):
        cfg = ProtocolParams(t_final=0.0).integrator_config()
        assert cfg.n_steps == 0
        np.testing.assert_array_equal(cfg.sample_times(), [0.0])


class TestPulses:
    def test_counterintuitive_limits(self):
        pulses = PulsePair(omega0=1.0, width=800.0, delay=400.0)
        early, late = -10 * 800.0, 10 * 800.0
        assert pulses.omega02(early) / pulses.omega01(early) < 1e-6
        assert pulses.omega02(late) / pulses.omega01(late) == pytest.approx(1.0, abs=1e-6)

    def test_ratio_closed_form_at_run_edges(self):
        pulses = PulsePair(omega0=1.0, width=800.0, delay=400.0)
        for t, exponent in ((-4000.0, 10.0), (4000.0, -10.0)):
            assert pulses.omega02(t) / pulses.omega01(t) == pytest.approx(1 / (1 + math.exp(exponent)), abs=1e-12)

    def test_vectorized(self):
        pulses = PulsePair(omega0=2.0, width=10.0, delay=5.0)
        t = np.linspace(-20, 20, 7)
        assert pulses.omega01(t).shape == (7,)
        assert pulses.omega02(5.0) == pytest.approx(2.0)

    def test_disabled_pulse_is_zero(self):
        pulses = PulsePair(omega0=1.0, width=10.0, delay=5.0, enabled=(True, False))
        assert pulses.omega02(5.0) == 0.0
        np.testing.assert_array_equal(pulses.omega02(np.array([0.0, 1.0])), [0.0, 0.0])


class TestCouplingTable:
    def test_uniform_couplings(self):
        params = ProtocolParams(n_parties=3, g=0.5, delta=20.0)
        table = CouplingTable.from_params(params)
        t = 100.0
        assert table.coupling_B(1, 2, t) == pytest.approx(-table.pulses.omega02(t) * 0.5 / 20.0)
        assert table.coupling_A(0, 1, t) == pytest.approx(-table.pulses.omega01(t) ** 2 / 20.0)
        assert table.coupling_G(0, 3) == pytest.approx(-0.25 / 20.0)

    def test_chi_scales_drive(self):
        params = ProtocolParams(n_parties=3, chi=(1.0, 1.4))
        table = CouplingTable.from_params(params)
        assert table.omega(1, 1, 0.0) == pytest.approx(1.4 * table.omega(0, 1, 0.0))

    def test_index_ranges(self):
        table = CouplingTable.from_params(ProtocolParams(n_parties=3))
        with pytest.raises(InvalidArgumentError):
            table.omega(2, 1, 0.0)
        with pytest.raises(InvalidArgumentError):
            table.omega(0, 4, 0.0)

    def test_invalid_chi(self):
        params = ProtocolParams(n_parties=3)
        with pytest.raises(InvalidArgumentError):
            CouplingTable(PulsePair.from_params(params), np.ones((2, 2)), np.full(2, 10.0), np.array([2.0, 1.0]), 0.0, 3)

    def test_small_detuning_warns(self, log_records):
        CouplingTable.from_params(ProtocolParams(n_parties=3, delta=2.0))
        assert any("adiabatic elimination" in r["message"] for r in log_records if r["level"] == "WARNING")


class TestHamiltonians:
    @pytest.mark.parametrize("builder", [build_reduced_hamiltonian, build_sector_hamiltonian, build_effective_hamiltonian, build_full_hamiltonian])
    def test_hermitian(self, builder):
        params = ProtocolParams(n_parties=3, compensated=False)
        hamiltonian = builder(params)
        for t in random_times(params, 100):
            assert hamiltonian.hermiticity_error(t) < 1e-12

    def test_reduced_dimension(self):
        for n in range(3, 7):
            assert build_reduced_hamiltonian(ProtocolParams(n_parties=n)).dim == n * (n + 1) // 2

    def test_full_model_frequency(self):
        hamiltonian = build_full_hamiltonian(ProtocolParams(n_parties=3, delta=12.0))
        assert hamiltonian.model_kind is ModelKind.FULL
        assert hamiltonian.max_frequency == 12.0

    def test_effective_kinds(self):
        assert build_effective_hamiltonian(ProtocolParams(n_parties=3)).model_kind is ModelKind.EFFECTIVE_COMPENSATED
        assert build_effective_hamiltonian(ProtocolParams(n_parties=3), compensated=False).model_kind is ModelKind.EFFECTIVE_WITH_STARK

    def test_reduced_stark_diagonal(self):
        params = ProtocolParams(n_parties=3, g=1.0, delta=10.0)
        hamiltonian = build_reduced_hamiltonian(params)
        h = hamiltonian.evaluate_at(0.0)
        shift = -0.1
        basis = hamiltonian.basis
        assert h[basis.index(ZetaLabel(0, 1)), basis.index(ZetaLabel(0, 1))] == pytest.approx(0.0)
        assert h[basis.index(ZetaLabel(1, 1)), basis.index(ZetaLabel(1, 1))].real == pytest.approx(3 * shift)
        assert h[basis.index(ZetaLabel(1, 2)), basis.index(ZetaLabel(1, 2))].real == pytest.approx(2 * shift)
        assert h[basis.index(ZetaLabel(2, 1)), basis.index(ZetaLabel(2, 1))].real == pytest.approx(6 * shift)

    def test_sector_model_contains_reduced_model(self):
        params = ProtocolParams(n_parties=4, chi=(1.0, 0.8, 1.3), compensated=False)
        reduced = build_reduced_hamiltonian(params, validate=False)
        sector = build_sector_hamiltonian(params)
        indices = sector.basis.indices(zeta_to_sector(label) for label in reduced.basis.labels)
        for t in random_times(params, 5, seed=3):
            np.testing.assert_allclose(sector.evaluate_at(t)[np.ix_(indices, indices)], reduced.evaluate_at(t), atol=1e-14)

    def test_select_by_prefix(self):
        hamiltonian = build_reduced_hamiltonian(ProtocolParams(n_parties=3))
        assert all(term.label.startswith("B") for term in hamiltonian.select("B").terms)
        assert len(hamiltonian.select("G").terms) == 1


class TestOracle:
    @pytest.mark.parametrize(
        "n, chi, compensated",
        [(3, (1.0, 1.0), True), (3, (1.0, 1.3), False), (4, (1.0, 0.7, 1.2), True), (4, (1.0, 1.1, 0.9), False)],
    )
    def test_reduced_matches_projection(self, n, chi, compensated):
        params = ProtocolParams(n_parties=n, chi=chi, compensated=compensated)
        reduced = build_reduced_hamiltonian(params, validate=False)
        worst = compare_with_oracle(reduced, projection_oracle(params), random_times(params, 10, seed=n))
        assert worst < 1e-9

    @pytest.mark.parametrize("n", [3, 4])
    def test_zeta_subspace_closed(self, n):
        params = ProtocolParams(n_parties=n)
        effective = build_effective_hamiltonian(params)
        isometry = build_zeta_basis(params).isometry()
        for t in random_times(params, 20, seed=11):
            assert closure_defect(effective, isometry, t) <= 1e-9

    def test_mismatch_names_the_element(self):
        params = ProtocolParams(n_parties=3)
        other = ProtocolParams(n_parties=3, chi=(1.0, 1.5))
        with pytest.raises(ModelConsistencyError) as excinfo:
            compare_with_oracle(build_reduced_hamiltonian(params, validate=False), projection_oracle(other), [0.0])
        assert excinfo.value.row_label in build_reduced_hamiltonian(params, validate=False).basis
        assert excinfo.value.t == 0.0

    def test_mismatch_replace_or_raise(self, monkeypatch):
        params = ProtocolParams(n_parties=3)
        wrong = projection_oracle(ProtocolParams(n_parties=3, chi=(1.0, 1.5)))
        monkeypatch.setattr(model, "projection_oracle", lambda p: wrong)
        with pytest.raises(ModelConsistencyError):
            build_reduced_hamiltonian(params, validate=True)
        assert build_reduced_hamiltonian(params, validate=True, on_mismatch="replace") is wrong


class TestDarkState:
    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_annihilated_by_couplings(self, n):
        params = ProtocolParams(n_parties=n, chi=tuple([1.0] + [1.0 + 0.1 * j for j in range(1, n - 1)]))
        couplings = build_reduced_hamiltonian(params, validate=False).select("B")
        for t in random_times(params, 50, seed=n):
            h = couplings.evaluate_at(t)
            residual = np.linalg.norm(h @ dark_state(params, t).amplitudes)
            assert residual <= 1e-8 * max(np.linalg.norm(h, 2), 1e-300)

    def test_starts_in_initial_state_and_ends_in_singlet(self):
        params = ProtocolParams(n_parties=3)
        early = dark_state(params, -10 * params.pulse_width)
        assert abs(early.amplitude(ZetaLabel(0, 3))) ** 2 == pytest.approx(1.0, abs=1e-6)
        late = dark_state(params, 10 * params.pulse_width)
        assert abs(np.vdot(singlet_zeta_coefficients(3), late.amplitudes)) ** 2 == pytest.approx(1.0, abs=1e-6)

    def test_explicit_couplings(self):
        coefficients = dark_state_from_couplings([1.0, 1.0], [1.0, 1.0])
        np.testing.assert_allclose(coefficients, np.array([1, -1, 1]) / math.sqrt(3))

    def test_residuals_recorded_both_ways(self):
        times = random_times(ProtocolParams(n_parties=3, pulse_width=40.0), 20, seed=4)
        compensated = dark_state_residuals(ProtocolParams(n_parties=3, pulse_width=40.0), times)
        assert compensated["coupling_residual"] <= 1e-8
        assert compensated["full_residual"] <= 1e-8
        uncompensated = dark_state_residuals(ProtocolParams(n_parties=3, pulse_width=40.0, compensated=False), times)
        assert uncompensated["coupling_residual"] <= 1e-8
        assert uncompensated["full_residual"] > 1e-6

    def test_residuals_skip_undefined_times(self):
        params = ProtocolParams(n_parties=3, enabled_pulses=(False, False))
        assert dark_state_residuals(params, [0.0, 1.0]) == {"coupling_residual": 0.0, "full_residual": 0.0}

    def test_vanishing_couplings(self):
        with pytest.raises(ZeroVectorError):
            dark_state_from_couplings([0.0, 0.0], [0.0, 0.0])

    def test_disabled_pulses_leave_dark_state_undefined(self):
        with pytest.raises(ZeroVectorError):
            dark_state(ProtocolParams(n_parties=3, enabled_pulses=(False, False)), 0.0)
