"""
Hard static IQC multipliers for the delay operator and their empirical verification
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..config.settings import config
from ..utils.validation import DimensionError, ValidationError, as_matrix, as_signal, require_symmetric
from .delay_core import apply_delay
from .models import MultiplierSet, SamplingPattern

logger = logging.getLogger(__name__)

# horizon above which partial sums are accumulated in extended precision
EXTENDED_PRECISION_HORIZON = 10_000


@dataclass
class IqcCheck:
    """Verdict of a truncated IQC check and the partial sums behind it"""
    holds: bool
    partial_sums: np.ndarray

    @property
    def min_partial_sum(self) -> float:
        return float(np.min(self.partial_sums))


def _tolerance(matrix: np.ndarray, tolerance: Optional[float]) -> float:
    tol = config.get_psd_tolerance() if tolerance is None else tolerance
    return tol * max(1.0, float(np.linalg.norm(matrix, 2)))


def min_eigenvalue(matrix: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (matrix + matrix.T))[0])


def is_positive_definite(matrix: np.ndarray, tolerance: Optional[float] = None) -> bool:
    return min_eigenvalue(matrix) > _tolerance(matrix, tolerance)


def is_positive_semidefinite(matrix: np.ndarray, tolerance: Optional[float] = None) -> bool:
    return min_eigenvalue(matrix) >= -_tolerance(matrix, tolerance)


def validate_multipliers(ms: MultiplierSet, tolerance: Optional[float] = None) -> MultiplierSet:
    X = require_symmetric(as_matrix(ms.X, "X"), "X")
    Y = require_symmetric(as_matrix(ms.Y, "Y"), "Y")
    if X.shape != Y.shape:
        raise DimensionError(f"X is {X.shape} but Y is {Y.shape}")
    if not is_positive_definite(X, tolerance):
        raise ValidationError("gain multiplier X must be positive definite")
    if not is_positive_semidefinite(Y, tolerance):
        raise ValidationError("passivity multiplier Y must be positive semidefinite")
    if ms.gain_sq < 0:
        raise ValidationError(f"gain_sq must be nonnegative, got {ms.gain_sq}")
    return MultiplierSet(X=X, Y=Y, gain_sq=float(ms.gain_sq))


def passivity_multiplier(Y) -> np.ndarray:
    """Π_P = [[Y, Y], [Y, 0]]"""
    Y = as_matrix(Y, "Y")
    return np.block([[Y, Y], [Y, np.zeros_like(Y)]])


def gain_multiplier(X, gain_sq: float) -> np.ndarray:
    """Π_ℓ2 = [[gain_sq X, 0], [0, -X]]"""
    X = as_matrix(X, "X")
    zero = np.zeros_like(X)
    return np.block([[gain_sq * X, zero], [zero, -X]])


def combine_multipliers(alpha: float, pi_p: np.ndarray, beta: float, pi_l2: np.ndarray) -> np.ndarray:
    """Conic combination αΠ_P + βΠ_ℓ2"""
    if alpha < 0 or beta < 0:
        raise ValidationError("conic combination needs nonnegative weights")
    if pi_p.shape != pi_l2.shape:
        raise DimensionError(f"multipliers have shapes {pi_p.shape} and {pi_l2.shape}")
    return alpha * pi_p + beta * pi_l2


def assemble_pi(ms: MultiplierSet, tolerance: Optional[float] = None) -> np.ndarray:
    """Π = [[gain_sq X + Y, Y], [Y, -X]]"""
    ms = validate_multipliers(ms, tolerance)
    return gain_multiplier(ms.X, ms.gain_sq) + passivity_multiplier(ms.Y)


def _partial_sums(terms: np.ndarray) -> np.ndarray:
    if terms.shape[0] > EXTENDED_PRECISION_HORIZON:
        return np.cumsum(terms.astype(np.longdouble)).astype(float)
    return np.cumsum(terms)


def check_iqc(y, e, pi, tolerance: Optional[float] = None) -> IqcCheck:
    """Σ_{t=0}^{T} [y; e]ᵀ Π [y; e] ≥ 0 for every truncation T"""
    y = as_signal(y, "y")
    e = as_signal(e, "e")
    pi = require_symmetric(as_matrix(pi, "pi"), "pi")
    if y.shape != e.shape:
        raise DimensionError(f"y is {y.shape} but e is {e.shape}")
    if pi.shape[0] != 2 * y.shape[1]:
        raise DimensionError(f"pi is {pi.shape}, signals have dimension {y.shape[1]}")
    stacked = np.hstack([y, e])
    terms = np.einsum("ti,ij,tj->t", stacked, pi, stacked)
    sums = _partial_sums(terms)
    tol = config.get_psd_tolerance() if tolerance is None else tolerance
    scale = max(1.0, float(np.sum(np.abs(terms))))
    holds = bool(np.all(sums >= -tol * scale))
    return IqcCheck(holds=holds, partial_sums=sums)


def passivity_sums(y, pattern: SamplingPattern, Y, factor: float = 0.5) -> np.ndarray:
    """Partial sums of yᵀYe + factor·yᵀYy with e = Δy"""
    y = as_signal(y, "y")
    Y = as_matrix(Y, "Y", (y.shape[1], y.shape[1]))
    e = apply_delay(y, pattern)
    terms = np.einsum("ti,ij,tj->t", y, Y, e) + factor * np.einsum("ti,ij,tj->t", y, Y, y)
    return _partial_sums(terms)


def check_passivity(y, pattern: SamplingPattern, Y, tolerance: Optional[float] = None) -> IqcCheck:
    """Input-feedforward passivity of Δ with multiplier Y ⪰ 0"""
    Y = require_symmetric(as_matrix(Y, "Y"), "Y")
    if not is_positive_semidefinite(Y, tolerance):
        raise ValidationError("passivity multiplier Y must be positive semidefinite")
    sums = passivity_sums(y, pattern, Y)
    tol = config.get_psd_tolerance() if tolerance is None else tolerance
    y = as_signal(y, "y")
    scale = max(1.0, float(np.sum(y * y)) * float(np.linalg.norm(Y, 2)))
    return IqcCheck(holds=bool(np.all(sums >= -tol * scale)), partial_sums=sums)


def find_factor_counterexample(factor: float, max_length: int = 64):
    """Scalar signal and pattern violating the passivity inequality with a factor below ½

    Over one interval of length L the alternating signal (1, -1, 1, -1, ...) of even length
    gives Σ y e = -L/2 and Σ y² = L, so the sum is L(factor - ½) < 0.
    """
    if factor >= 0.5:
        raise ValidationError(f"no counterexample exists for factor {factor} >= 0.5")
    for length in range(2, max_length + 1, 2):
        y = np.array([(-1.0) ** t for t in range(length)])
        pattern = SamplingPattern(intervals=(length,), bound=length)
        sums = passivity_sums(y, pattern, np.eye(1), factor)
        if np.min(sums) < 0:
            logger.debug("factor %.4f violated by alternating signal of length %d", factor, length)
            return y, pattern, sums
    return None
