import math

import numpy as np
import pytest

from msi_cert.core.msi_search import (
    Certifier,
    exponential_search,
    linear_search,
    model_certifier,
    search,
)
from msi_cert.core.models import Certificate, Verdict
from msi_cert.utils.validation import ValidationError


class ThresholdOracle:
    """Monotone certifier: true up to the threshold, counting calls"""

    def __init__(self, threshold):
        self.threshold = threshold
        self.calls = []

    def __call__(self, hbar):
        self.calls.append(hbar)
        return hbar <= self.threshold


class TestLinearSearch:
    def test_finds_threshold(self):
        result = linear_search(ThresholdOracle(136), 1000)
        assert result.msi == 136
        assert result.calls == 137
        assert not result.cap_exhausted

    def test_fails_at_one(self):
        result = linear_search(ThresholdOracle(0), 10)
        assert result.msi is None
        assert not result.cap_exhausted
        assert "hbar=1" in result.message

    def test_cap_exhausted(self):
        result = linear_search(ThresholdOracle(10 ** 6), 10)
        assert result.msi == 10
        assert result.cap_exhausted

    def test_concurrent_window_merges_in_order(self):
        oracle = ThresholdOracle(37)
        result = linear_search(oracle, 100, workers=8)
        assert result.msi == 37
        assert [h for h, _ in result.history] == list(range(1, 41))

    def test_non_monotone_oracle_flagged(self):
        result = linear_search(lambda h: h in (1, 2, 4), 10, workers=4)
        assert result.msi == 2
        assert result.inconsistent


class TestExponentialSearch:
    def test_finds_threshold_within_call_budget(self):
        oracle = ThresholdOracle(136)
        result = exponential_search(oracle, 10_000)
        assert result.msi == 136
        assert result.calls <= 18
        assert result.calls == len(oracle.calls)

    def test_threshold_one(self):
        result = exponential_search(ThresholdOracle(1), 100)
        assert result.msi == 1
        assert result.calls == 2

    def test_fails_at_one(self):
        assert exponential_search(ThresholdOracle(0), 100).msi is None

    def test_cap_exhausted(self):
        result = exponential_search(ThresholdOracle(10 ** 6), 100)
        assert result.msi == 100
        assert result.cap_exhausted

    def test_agrees_with_linear_search(self, rng):
        for _ in range(100):
            threshold = int(rng.integers(1, 501))
            cap = int(rng.integers(1, 600))
            fast = exponential_search(ThresholdOracle(threshold), cap)
            slow = linear_search(ThresholdOracle(threshold), cap)
            assert (fast.msi, fast.cap_exhausted) == (slow.msi, slow.cap_exhausted)
            if fast.msi and not fast.cap_exhausted:
                assert fast.calls <= 2 * math.log2(fast.msi) + 2

    def test_non_monotone_oracle_flagged(self):
        oracle = lambda h: h in (1, 2, 4, 8, 16, 20)
        assert not exponential_search(oracle, 1000).inconsistent
        result = exponential_search(oracle, 1000, spot_checks=1)
        assert result.msi == 20
        assert result.history[-1] == (19, False)
        assert result.inconsistent


class TestCertifiers:
    def test_certifier_keeps_certificates(self):
        def certify(hbar):
            verdict = Verdict.CERTIFIED if hbar < 3 else Verdict.NUMERICAL_FAILURE
            return Certificate(verdict=verdict, hbar=hbar, gain_mode="exact", gain_sq=0.0)

        certifier = Certifier(certify)
        result = linear_search(certifier, 10)
        assert result.msi == 2
        assert certifier.certificate(3).verdict == Verdict.NUMERICAL_FAILURE
        assert certifier.certificate(None) is None

    def test_model_msi_exact_and_legacy(self, benchmark_model):
        assert exponential_search(model_certifier(benchmark_model), 1000).msi == 136
        assert exponential_search(model_certifier(benchmark_model, "legacy"), 1000).msi == 122

    def test_passive_scalar_reaches_cap(self, passive_scalar):
        result = exponential_search(model_certifier(passive_scalar), 64)
        assert result.msi == 64
        assert result.cap_exhausted

    def test_dispatch(self):
        assert search(ThresholdOracle(5), "linear", 20).msi == 5
        assert search(ThresholdOracle(5), "exponential", 20).msi == 5
        with pytest.raises(ValidationError):
            search(ThresholdOracle(5), "ternary", 20)
