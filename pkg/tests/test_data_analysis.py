import numpy as np
import pytest

from msi_cert.core.data_analysis import (
    build_qmi,
    certify_data,
    certify_qmi,
    check_disturbance_bound,
    membership,
    membership_dual,
    norm_bound_disturbance,
    pab_matrix,
    qmi_value,
    data_lmi_problem,
)
from msi_cert.core.model_analysis import certify_model
from msi_cert.core.models import DataSet, DisturbanceModel, Verdict
from msi_cert.core.msi_search import data_certifier, exponential_search
from msi_cert.core.simulate import generate_experiment
from msi_cert.utils.validation import DimensionError, ValidationError

BD = 0.01 * np.eye(2)


def _experiment(model, dbar, seed=42, N=1000):
    return generate_experiment(model, N, (-10.0, 10.0), dbar, BD, seed)


def _rebound(dataset, dbar):
    """Same trajectory under a different norm bound"""
    N = dataset.X.shape[1]
    return DataSet(Xplus=dataset.Xplus, X=dataset.X, U=dataset.U, disturbance=norm_bound_disturbance(N, 2, dbar, BD))


class TestDisturbanceModel:
    def test_norm_bound_blocks(self):
        dist = norm_bound_disturbance(5, 2, 0.1, BD)
        np.testing.assert_array_equal(dist.Qd, -np.eye(5))
        np.testing.assert_array_equal(dist.Sd, np.zeros((5, 2)))
        np.testing.assert_allclose(dist.Rd, 0.05 * np.eye(2))

    def test_rejects_bad_descriptions(self):
        with pytest.raises(ValidationError):
            DisturbanceModel(Qd=np.eye(3), Sd=np.zeros((3, 1)), Rd=np.eye(1), Bd=np.ones((2, 1)))
        with pytest.raises(ValidationError):
            DisturbanceModel(Qd=-np.eye(3), Sd=np.zeros((3, 2)), Rd=np.eye(2), Bd=np.ones((2, 2)))

    def test_realized_disturbance_within_bound(self, benchmark_model):
        experiment = _experiment(benchmark_model, 0.005)
        assert check_disturbance_bound(experiment.disturbance, experiment.dataset.disturbance)
        assert np.all(np.linalg.norm(experiment.disturbance, axis=0) <= 0.005 + 1e-15)

    def test_dataset_dimensions(self):
        dist = norm_bound_disturbance(4, 2, 0.1, BD)
        with pytest.raises(DimensionError):
            DataSet(Xplus=np.zeros((2, 3)), X=np.zeros((2, 3)), U=np.zeros((1, 3)), disturbance=dist)


class TestQmi:
    def test_inertia_of_benchmark_data(self, benchmark_model):
        qmi = build_qmi(_experiment(benchmark_model, 0.01).dataset)
        assert qmi.assumption_ok, qmi.assumption_message
        assert qmi.inertia == (3, 0, 2)
        np.testing.assert_allclose(qmi.P_inv @ qmi.P, np.eye(5), atol=1e-4)

    def test_noise_free_data_is_singular(self, benchmark_model):
        qmi = build_qmi(_experiment(benchmark_model, 0.0, N=50).dataset)
        assert not qmi.assumption_ok

    def test_tiny_noise_trips_condition_guard(self, benchmark_model):
        qmi = build_qmi(_experiment(benchmark_model, 0.0002).dataset)
        assert not qmi.assumption_ok
        assert "singular" in qmi.assumption_message

    def test_true_system_is_consistent(self, benchmark_model):
        for seed in (1, 2, 3):
            dataset = _experiment(benchmark_model, 0.01, seed=seed).dataset
            assert membership(benchmark_model.A, benchmark_model.B, dataset)
            assert np.min(np.linalg.eigvalsh(qmi_value(benchmark_model.A, benchmark_model.B, dataset))) >= -1e-9

    def test_noise_free_data_admits_only_the_true_system(self, benchmark_model):
        dataset = _experiment(benchmark_model, 0.0, N=50).dataset
        assert membership(benchmark_model.A, benchmark_model.B, dataset)
        assert not membership(benchmark_model.A, benchmark_model.B + 1e-4 * np.array([[0.0], [1.0]]), dataset)

    def test_gross_perturbation_is_inconsistent(self, benchmark_model):
        dataset = _experiment(benchmark_model, 0.001).dataset
        assert not membership(benchmark_model.A + 1e3 * np.eye(2), benchmark_model.B, dataset)

    def test_primal_and_dual_membership_agree(self, benchmark_model, rng):
        dataset = _experiment(benchmark_model, 0.01).dataset
        qmi = build_qmi(dataset)
        for _ in range(200):
            scale = 10.0 ** rng.uniform(-7, 0)
            A = benchmark_model.A + scale * rng.standard_normal((2, 2))
            B = benchmark_model.B + scale * rng.standard_normal((2, 1))
            assert membership(A, B, dataset) == membership_dual(A, B, qmi)

    def test_pab_is_symmetric(self, benchmark_model):
        P = pab_matrix(_experiment(benchmark_model, 0.01, N=30).dataset)
        np.testing.assert_array_equal(P, P.T)


class TestDataLmi:
    def test_requires_validated_data(self, benchmark_model):
        qmi = build_qmi(_experiment(benchmark_model, 0.0, N=50).dataset)
        with pytest.raises(ValidationError):
            data_lmi_problem(benchmark_model.K, qmi, 10)
        certificate = certify_qmi(qmi, benchmark_model.K, 10)
        assert certificate.verdict == Verdict.ASSUMPTION_VIOLATED

    def test_certifies_moderate_interval(self, benchmark_model):
        certificate = certify_data(_experiment(benchmark_model, 0.01).dataset, benchmark_model.K, 10)
        assert certificate.certified
        assert certificate.source == "data"
        assert certificate.diagnostics["qmi"]["assumption_ok"]

    def test_large_noise_stays_below_model_msi(self, benchmark_model):
        qmi = build_qmi(_experiment(benchmark_model, 0.02).dataset)
        assert qmi.assumption_ok
        certificate = certify_qmi(qmi, benchmark_model.K, 137)
        assert not certificate.certified
        assert certificate.verdict != Verdict.ASSUMPTION_VIOLATED

    def test_light_noise_certifies_near_model_msi(self, benchmark_model):
        certificate = certify_data(_experiment(benchmark_model, 0.001).dataset, benchmark_model.K, 133)
        assert certificate.certified
        assert certificate.diagnostics["tau"] > 0

    def test_margin_only_fixes_scale(self, benchmark_model):
        qmi = build_qmi(_experiment(benchmark_model, 0.01).dataset)
        for epsilon in (1e-9, 1e-7, 1e-5):
            assert certify_qmi(qmi, benchmark_model.K, 60, epsilon=epsilon).certified

    def test_wider_bound_on_same_data_certifies_less(self, benchmark_model):
        dataset = _experiment(benchmark_model, 0.005).dataset
        narrow, wide = build_qmi(dataset), build_qmi(_rebound(dataset, 0.02))
        assert narrow.assumption_ok and wide.assumption_ok
        for hbar in (1, 40, 100, 130):
            if certify_qmi(wide, benchmark_model.K, hbar).certified:
                assert certify_qmi(narrow, benchmark_model.K, hbar).certified

    def test_data_certificate_implies_model_certificate(self, benchmark_model):
        for seed in (7, 8):
            qmi = build_qmi(_experiment(benchmark_model, 0.005, seed=seed).dataset)
            for hbar in (40, 120, 140):
                if certify_qmi(qmi, benchmark_model.K, hbar).certified:
                    assert certify_model(benchmark_model, hbar).certified

    def test_legacy_mode_pins_passivity(self, benchmark_model):
        qmi = build_qmi(_experiment(benchmark_model, 0.01).dataset)
        problem = data_lmi_problem(benchmark_model.K, qmi, 10, gain_mode="legacy")
        assert problem.variable("Y").cone == "zero"
        assert problem.variable("tau").cone == "pd"


@pytest.mark.slow
class TestReplicaTable:
    """Seeded replica of the noisy-data experiment: N=1000, inputs in [-10, 10], Bd=0.01 I"""

    @pytest.mark.parametrize("dbar,expected", [(0.001, 136), (0.002, 135), (0.005, 134), (0.01, 128)])
    def test_exact_gain_msi(self, benchmark_model, dbar, expected):
        certifier = data_certifier(_experiment(benchmark_model, dbar).dataset, benchmark_model.K)
        result = exponential_search(certifier, 1000)
        assert result.msi is not None
        assert abs(result.msi - expected) <= 3

    @pytest.mark.parametrize("dbar,expected", [(0.001, 122), (0.002, 122), (0.005, 121), (0.01, 115)])
    def test_legacy_gain_msi(self, benchmark_model, dbar, expected):
        certifier = data_certifier(_experiment(benchmark_model, dbar).dataset, benchmark_model.K, "legacy")
        result = exponential_search(certifier, 1000)
        assert result.msi is not None
        assert abs(result.msi - expected) <= 3

    def test_large_noise_falls_well_below_model_msi(self, benchmark_model):
        result = exponential_search(data_certifier(_experiment(benchmark_model, 0.02).dataset, benchmark_model.K), 1000)
        assert result.msi is None or result.msi < 125

    def test_msi_shrinks_as_bound_grows(self, benchmark_model):
        dataset = _experiment(benchmark_model, 0.002).dataset
        estimates = []
        for dbar in (0.002, 0.005, 0.01, 0.02):
            result = exponential_search(data_certifier(_rebound(dataset, dbar), benchmark_model.K), 1000)
            estimates.append(result.msi or 0)
        assert estimates == sorted(estimates, reverse=True)
        assert estimates[0] <= 136


@pytest.mark.slow
class TestSoundness:
    @pytest.mark.parametrize("seed", range(20))
    def test_data_certificates_hold_for_hidden_system(self, benchmark_model, seed):
        qmi = build_qmi(_experiment(benchmark_model, 0.005, seed=seed).dataset)
        assert qmi.assumption_ok
        for hbar in (20, 80, 130, 137):
            certificate = certify_qmi(qmi, benchmark_model.K, hbar)
            if certificate.certified:
                assert certify_model(benchmark_model, hbar).certified
                assert membership_dual(benchmark_model.A, benchmark_model.B, qmi)
