import numpy as np
import pytest

from msi_cert.core.delay_core import exact_gain
from msi_cert.core.model_analysis import (
    certify_model,
    closed_loop_blocks,
    frequency_check,
    frequency_grid,
    hinf_norm_estimate,
    is_schur,
    scalar_condition,
    scalar_region,
    spectral_radius,
    model_lmi_problem,
    transfer_function_value,
)
from msi_cert.core.models import SystemModel, Verdict
from msi_cert.core.sdp_backend import Cone
from msi_cert.utils.validation import DimensionError, ValidationError


class TestSystemModel:
    def test_closed_loop_of_benchmark(self, benchmark_model):
        np.testing.assert_allclose(
            benchmark_model.closed_loop,
            [[0.99998125, 0.0099425], [-0.00375, 0.9875]],
            atol=1e-12,
        )

    def test_scalar_blocks(self):
        blocks = closed_loop_blocks(SystemModel.scalar(0.3, 0.2))
        np.testing.assert_allclose(blocks, [[0.5, 0.2], [0.5, -0.2]])

    def test_dimension_checks(self):
        with pytest.raises(DimensionError):
            SystemModel(A=np.eye(2), B=np.ones((3, 1)), K=np.ones((1, 2)))
        with pytest.raises(DimensionError):
            SystemModel(A=np.eye(2), B=np.ones((2, 1)), K=np.ones((2, 2)))

    def test_schur(self, benchmark_model):
        assert is_schur(benchmark_model.closed_loop)
        assert not is_schur(np.eye(2))
        assert spectral_radius(np.diag([0.5, -2.0])) == pytest.approx(2.0)


class TestModelLmi:
    def test_benchmark_certified_at_known_msi(self, benchmark_model):
        certificate = certify_model(benchmark_model, 136)
        assert certificate.verdict == Verdict.CERTIFIED
        assert certificate.gain_sq == pytest.approx(exact_gain(136))
        assert np.all(np.linalg.eigvalsh(certificate.S) > 0)
        assert np.all(np.linalg.eigvalsh(certificate.multipliers.X) > 0)

    def test_benchmark_fails_beyond_msi(self, benchmark_model):
        assert not certify_model(benchmark_model, 137).certified

    def test_legacy_gain_limit(self, benchmark_model):
        assert certify_model(benchmark_model, 122, gain_mode="legacy").certified
        assert not certify_model(benchmark_model, 123, gain_mode="legacy").certified

    def test_pinned_passivity_keeps_benchmark_msi(self, benchmark_model):
        assert certify_model(benchmark_model, 136, pin_passivity=True).certified
        assert not certify_model(benchmark_model, 137, pin_passivity=True).certified

    @pytest.mark.parametrize("hbar", [60, 110, 122, 126, 130, 136])
    def test_tighter_gain_never_loses_a_certificate(self, benchmark_model, hbar):
        legacy = certify_model(benchmark_model, hbar, gain_mode="legacy").certified
        frobenius = certify_model(benchmark_model, hbar, gain_mode="frobenius").certified
        exact = certify_model(benchmark_model, hbar).certified
        assert not legacy or frobenius
        assert not frobenius or exact

    def test_unit_sampling_needs_schur_closed_loop(self):
        assert certify_model(SystemModel.scalar(0.5, 0.2), 1).certified
        assert not certify_model(SystemModel.scalar(1.5, 0.2), 1).certified

    def test_legacy_mode_pins_passivity(self, benchmark_model):
        legacy = model_lmi_problem(benchmark_model, 10, gain_mode="legacy")
        exact = model_lmi_problem(benchmark_model, 10)
        pinned = model_lmi_problem(benchmark_model, 10, pin_passivity=True)
        assert legacy.variable("Y").cone == Cone.ZERO
        assert exact.variable("Y").cone == Cone.POSITIVE_SEMIDEFINITE
        assert pinned.variable("Y").cone == Cone.ZERO

    def test_certificate_serializes(self, benchmark_model):
        data = certify_model(benchmark_model, 50).to_dict()
        assert data["verdict"] == "certified"
        assert len(data["S"]) == 2
        assert data["multipliers"]["gain_sq"] == pytest.approx(exact_gain(50))


class TestScalarLoops:
    @pytest.mark.parametrize("hbar", [10, 100])
    def test_passivity_certifies_long_intervals(self, passive_scalar, hbar):
        assert certify_model(passive_scalar, hbar).certified

    @pytest.mark.slow
    def test_passivity_certifies_very_long_intervals(self, passive_scalar):
        assert certify_model(passive_scalar, 1000).certified

    def test_pinned_passivity_fails_for_long_intervals(self, passive_scalar):
        assert not certify_model(passive_scalar, 50, pin_passivity=True).certified

    def test_negative_input_gain_fails_for_long_intervals(self):
        assert not certify_model(SystemModel.scalar(0.5, -0.1), 1000).certified

    def test_region(self):
        assert scalar_region(0.4, 0.5)
        assert not scalar_region(0.4, -0.1)
        assert not scalar_region(0.8, 0.5)

    def test_closed_form_condition(self):
        lam = exact_gain(50)
        assert scalar_condition(0.4, 0.5, 50, 10 * lam)
        assert not scalar_condition(0.4, 0.5, 50, 0.0)
        assert not scalar_condition(0.5, -0.1, 50, 10 * lam)
        with pytest.raises(ValidationError):
            scalar_condition(0.4, 0.5, 50, -1.0)


class TestFrequencyDomain:
    def test_transfer_function_at_dc_vanishes(self):
        G = transfer_function_value(SystemModel.scalar(0.0, 0.5), 0.0)
        assert abs(G[0, 0]) < 1e-12

    def test_scalar_transfer_formula(self):
        a, b = 0.4, 0.5
        model = SystemModel.scalar(a, b)
        for omega in (0.3, 1.1, np.pi):
            z = np.exp(1j * omega)
            assert transfer_function_value(model, omega)[0, 0] == pytest.approx(b * (1 - z) / (z - a - b))

    def test_hinf_positive(self, passive_scalar):
        assert hinf_norm_estimate(passive_scalar, 256) > 0

    def test_grid_agrees_with_certificate(self, benchmark_model):
        certificate = certify_model(benchmark_model, 60)
        check = frequency_check(benchmark_model, 60, certificate.multipliers.X, certificate.multipliers.Y, 512)
        assert check.holds
        assert not check.rigorous

    def test_certificate_holds_on_fine_grid(self, benchmark_model):
        certificate = certify_model(benchmark_model, 136)
        check = frequency_check(benchmark_model, 136, certificate.multipliers.X, certificate.multipliers.Y, 4096)
        assert check.grid_size == 4096
        assert check.holds

    @pytest.mark.parametrize("Y", [0.0, 1.0, 1e3])
    def test_negative_input_gain_fails_on_grid(self, Y):
        check = frequency_check(SystemModel.scalar(0.5, -0.1), 100, np.eye(1), Y * np.eye(1), 4096)
        assert not check.holds
        assert check.worst_omega == pytest.approx(np.pi)

    def test_gain_only_multiplier_fails_for_long_intervals(self, passive_scalar):
        check = frequency_check(passive_scalar, 1000, np.eye(1), np.zeros((1, 1)), 4096)
        assert not check.holds

    def test_grid_rejects_unstable_loop(self):
        with pytest.raises(ValidationError):
            frequency_check(SystemModel.scalar(1.5, 0.2), 2, np.eye(1), np.zeros((1, 1)))

    def test_grid_size_validated(self):
        assert len(frequency_grid(16)) == 16
        with pytest.raises(ValidationError):
            frequency_grid(1)
