"""
Sampling-induced delay operator Δ: the matrix E_h̄, its exact spectral gain and bounds,
the lifted one-interval operator and application of Δ to finite signals
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from ..config.settings import config
from ..utils.validation import DimensionError, ValidationError, as_signal, validate_hbar
from .models import DelayGainBundle, DelaySequence, SamplingPattern, validate_gain_mode

logger = logging.getLogger(__name__)


def build_E(hbar: int) -> np.ndarray:
    """E_h̄ with E[i][j] = min(i, j) - 1 (1-indexed); first row and column are zero"""
    hbar = validate_hbar(hbar)
    idx = np.arange(hbar, dtype=float)
    return np.minimum.outer(idx, idx)


def exact_gain(hbar: int) -> float:
    """Squared ℓ2 gain of Δ, λ_max(E_h̄)"""
    E = build_E(hbar)
    if hbar == 1:
        return 0.0
    top = linalg.eigh(E, eigvals_only=True, subset_by_index=[hbar - 1, hbar - 1])
    return max(0.0, float(top[0]))


def frobenius_norm_sq(hbar: int) -> float:
    """trace(E_h̄ᵀ E_h̄) in closed form, (1/6)(h̄-1)h̄(h̄²-h̄+1)"""
    h = validate_hbar(hbar)
    return (h - 1) * h * (h * h - h + 1) / 6.0


def frobenius_gain(hbar: int) -> float:
    """‖E_h̄‖_F, the upper bound that may replace λ_max(E_h̄)"""
    return float(np.sqrt(frobenius_norm_sq(hbar)))


def legacy_gain(hbar: int) -> float:
    """Earlier squared-gain bound h̄(h̄-1)/2"""
    h = validate_hbar(hbar)
    return h * (h - 1) / 2.0


def gain_bundle(hbar: int, eigen_threshold: Optional[int] = None) -> DelayGainBundle:
    """All three squared-gain values; beyond the eigen threshold the Frobenius bound stands in for λ_max"""
    hbar = validate_hbar(hbar)
    threshold = config.get_eigen_threshold() if eigen_threshold is None else eigen_threshold
    frob = frobenius_gain(hbar)
    if hbar > threshold:
        logger.debug("hbar=%d above eigen threshold %d, using Frobenius bound", hbar, threshold)
        exact, from_eig = frob, False
    else:
        exact, from_eig = exact_gain(hbar), True
    return DelayGainBundle(
        hbar=hbar,
        exact_sq_gain=exact,
        frobenius_sq_gain=frob,
        legacy_sq_gain=legacy_gain(hbar),
        exact_from_eigensolver=from_eig,
    )


def gain_value(hbar: int, gain_mode: str = "exact", eigen_threshold: Optional[int] = None) -> float:
    """Scalar multiplying X in the combined multiplier for the chosen gain mode"""
    validate_gain_mode(gain_mode)
    if gain_mode == "legacy":
        return legacy_gain(hbar)
    if gain_mode == "frobenius":
        return frobenius_gain(hbar)
    return gain_bundle(hbar, eigen_threshold).exact_sq_gain


def gain_ratios(hbar: int, eigen_threshold: Optional[int] = None) -> Tuple[float, float]:
    """(exact, Frobenius) gain relative to the legacy gain; tend to ≈0.9003 and ≈0.9036"""
    bundle = gain_bundle(hbar, eigen_threshold)
    return bundle.exact_ratio, bundle.frobenius_ratio


def lifted_matrix(hbar: int) -> np.ndarray:
    """D̄_h̄: strictly lower triangular ones, the one-interval operator on lifted scalar signals"""
    hbar = validate_hbar(hbar)
    return np.tril(np.ones((hbar, hbar)), k=-1)


def lifted_gain(hbar: int) -> float:
    """σ_max(D̄_h̄)², an oracle for exact_gain independent of E_h̄"""
    sigma = linalg.svdvals(lifted_matrix(hbar))
    return float(sigma[0] ** 2)


def tightness_witness(hbar: int) -> np.ndarray:
    """Unit scalar signal over one interval of length h̄ attaining the gain of Δ"""
    _, _, vt = linalg.svd(lifted_matrix(hbar))
    return vt[0]


def delay_sequence(pattern: SamplingPattern, horizon: int) -> DelaySequence:
    """τ(t) for t = 0..horizon-1: reset at sampling instants, +1 otherwise"""
    if horizon < 1:
        raise ValidationError(f"horizon must be >= 1, got {horizon}")
    if pattern.length < horizon:
        raise DimensionError(f"pattern covers {pattern.length} steps, horizon is {horizon}")
    values = []
    for h in pattern.intervals:
        values.extend(range(h))
        if len(values) >= horizon:
            break
    return DelaySequence(values=tuple(values[:horizon]))


def _checked_signal(y, pattern: SamplingPattern) -> np.ndarray:
    y = as_signal(y, "y")
    if pattern.length < y.shape[0]:
        raise DimensionError(f"pattern covers {pattern.length} steps, signal has {y.shape[0]}")
    return y


def apply_delay(y, pattern: SamplingPattern) -> np.ndarray:
    """e = Δy by the recursion e(t_k) = 0, e(t) = e(t-1) + y(t-1) inside an interval"""
    y = _checked_signal(y, pattern)
    tau = delay_sequence(pattern, y.shape[0]).values
    e = np.zeros_like(y)
    for t in range(1, y.shape[0]):
        if tau[t] != 0:
            e[t] = e[t - 1] + y[t - 1]
    return e


def apply_delay_direct(y, pattern: SamplingPattern) -> np.ndarray:
    """e(t) = Σ_{i=t-τ(t)}^{t-1} y(i), evaluated term by term"""
    y = _checked_signal(y, pattern)
    tau = delay_sequence(pattern, y.shape[0]).values
    e = np.zeros_like(y)
    for t in range(y.shape[0]):
        for i in range(t - tau[t], t):
            e[t] += y[i]
    return e
