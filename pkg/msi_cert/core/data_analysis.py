"""
Data-driven certification from a noisy state-input trajectory.

The set Σ_AB of system matrices consistent with the data and the disturbance bound is a
quadratic matrix inequality in [A B] with the data matrix P_AB. Its inverse enters the
robust LMI through the full-block S-procedure, so P_AB has to be invertible with exactly
n_d positive eigenvalues.
"""

import logging
from typing import Optional

import numpy as np

from ..config.settings import config
from ..utils.validation import ValidationError, as_matrix, validate_hbar, validate_positive
from .delay_core import gain_value
from .model_analysis import resolve_pinning, certificate_from_solution, combined_multiplier
from .models import Certificate, DataSet, DisturbanceModel, QmiSet, Verdict, validate_gain_mode
from .sdp_backend import Cone, LmiConstraint, LmiProblem, LmiVariable, Sense, solve

logger = logging.getLogger(__name__)


def norm_bound_disturbance(N: int, n_d: int, dbar: float, Bd) -> DisturbanceModel:
    """‖d(t)‖₂ ≤ d̄ for all t, relaxed to Qd = -I, Sd = 0, Rd = d̄²N I"""
    if N < 1:
        raise ValidationError(f"N must be >= 1, got {N}")
    dbar = validate_positive(dbar, "dbar", allow_zero=True)
    Bd = as_matrix(Bd, "Bd", (None, n_d))
    return DisturbanceModel(
        Qd=-np.eye(N),
        Sd=np.zeros((N, n_d)),
        Rd=dbar * dbar * N * np.eye(n_d),
        Bd=Bd,
    )


def check_disturbance_bound(D, disturbance: DisturbanceModel, tolerance: Optional[float] = None) -> bool:
    """Whether a disturbance realization D (n_d×N) lies in the bound set"""
    D = as_matrix(D, "D", (disturbance.n_d, disturbance.N))
    value = D @ disturbance.Qd @ D.T + D @ disturbance.Sd + disturbance.Sd.T @ D.T + disturbance.Rd
    tol = config.get_qmi_tolerance() if tolerance is None else tolerance
    scale = max(1.0, float(np.linalg.norm(disturbance.Rd, 2)))
    return float(np.linalg.eigvalsh(0.5 * (value + value.T))[0]) >= -tol * scale


def pab_matrix(dataset: DataSet) -> np.ndarray:
    """P_AB = [[-X, 0], [-U, 0], [X⁺, Bd]] [[Qd, Sd], [Sdᵀ, Rd]] (⋆)ᵀ"""
    dist = dataset.disturbance
    n, m, n_d = dataset.n, dataset.m, dist.n_d
    outer = np.block([
        [-dataset.X, np.zeros((n, n_d))],
        [-dataset.U, np.zeros((m, n_d))],
        [dataset.Xplus, dist.Bd],
    ])
    middle = np.block([[dist.Qd, dist.Sd], [dist.Sd.T, dist.Rd]])
    P = outer @ middle @ outer.T
    return 0.5 * (P + P.T)


def qmi_value(A, B, dataset: DataSet) -> np.ndarray:
    """[Aᵀ; Bᵀ; I]ᵀ P_AB [Aᵀ; Bᵀ; I]"""
    n, m = dataset.n, dataset.m
    A = as_matrix(A, "A", (n, n))
    B = as_matrix(B, "B", (n, m))
    Z = np.vstack([A.T, B.T, np.eye(n)])
    value = Z.T @ pab_matrix(dataset) @ Z
    return 0.5 * (value + value.T)


def _nonnegative(value: np.ndarray, middle: np.ndarray, Z: np.ndarray, tolerance: Optional[float]) -> bool:
    """λ_min(Zᵀ M Z) ≥ 0 up to tol·‖Zᵀ M Z‖ plus the rounding error of forming the product"""
    tol = config.get_qmi_tolerance() if tolerance is None else tolerance
    value = 0.5 * (value + value.T)
    rounding = 16 * np.finfo(float).eps * middle.shape[0] * float(np.linalg.norm(middle, 2)) \
        * float(np.linalg.norm(Z, 2)) ** 2
    threshold = tol * float(np.linalg.norm(value, 2)) + rounding
    return float(np.linalg.eigvalsh(value)[0]) >= -threshold


def membership(A, B, dataset: DataSet, tolerance: Optional[float] = None) -> bool:
    """[A B] ∈ Σ_AB, evaluated on the primal QMI"""
    n, m = dataset.n, dataset.m
    A = as_matrix(A, "A", (n, n))
    B = as_matrix(B, "B", (n, m))
    P = pab_matrix(dataset)
    Z = np.vstack([A.T, B.T, np.eye(n)])
    return _nonnegative(Z.T @ P @ Z, P, Z, tolerance)


def membership_dual(A, B, qmi: QmiSet, tolerance: Optional[float] = None) -> bool:
    """[A B] ∈ Σ_AB through the dualized QMI in the inverse blocks Q̃, S̃, R̃"""
    if not qmi.assumption_ok:
        raise ValidationError(f"dual membership needs a valid QMI: {qmi.assumption_message}")
    n, m = qmi.n, qmi.m
    AB = np.hstack([as_matrix(A, "A", (n, n)), as_matrix(B, "B", (n, m))])
    Z = np.vstack([AB, np.eye(n + m)])
    middle = np.block([[-qmi.R_tilde, qmi.S_tilde.T], [qmi.S_tilde, -qmi.Q_tilde]])
    return _nonnegative(Z.T @ middle @ Z, middle, Z, tolerance)


def build_qmi(dataset: DataSet, condition_limit: Optional[float] = None) -> QmiSet:
    """P_AB, its inertia and inverse blocks; a singular or wrongly signed P_AB is reported, not raised"""
    n, m, n_d = dataset.n, dataset.m, dataset.disturbance.n_d
    limit = config.get_condition_limit() if condition_limit is None else condition_limit
    P = pab_matrix(dataset)
    eigvals, eigvecs = np.linalg.eigh(P)
    magnitude = np.abs(eigvals)
    largest = float(np.max(magnitude)) if magnitude.size else 0.0
    zero_tol = np.finfo(float).eps * P.shape[0] * max(largest, 1e-300)
    negatives = int(np.sum(eigvals < -zero_tol))
    positives = int(np.sum(eigvals > zero_tol))
    zeros = P.shape[0] - negatives - positives
    smallest = float(np.min(magnitude)) if magnitude.size else 0.0
    condition = largest / smallest if smallest > 0 else float("inf")

    message = None
    if zeros:
        message = f"P_AB is singular ({zeros} zero eigenvalues)"
    elif (negatives, positives) != (n + m, n_d):
        message = f"P_AB has inertia (-{negatives}, +{positives}), expected (-{n + m}, +{n_d})"
    elif condition > limit:
        message = f"P_AB is near singular (condition {condition:.3e} > {limit:.1e})"

    size = 2 * n + m
    if zeros:
        P_inv = np.full((size, size), np.nan)
    else:
        P_inv = (eigvecs / eigvals) @ eigvecs.T
        P_inv = 0.5 * (P_inv + P_inv.T)

    if message:
        logger.warning("Assumption on the data matrix violated: %s", message)
    else:
        logger.debug("P_AB inertia (-%d, 0, +%d), condition %.3e", negatives, positives, condition)

    k = n + m
    return QmiSet(
        P=P,
        Q_tilde=P_inv[:k, :k],
        S_tilde=P_inv[:k, k:],
        R_tilde=P_inv[k:, k:],
        inertia=(negatives, zeros, positives),
        condition=condition,
        n=n,
        m=m,
        n_d=n_d,
        assumption_ok=message is None,
        assumption_message=message,
    )


def data_lmi_problem(K, qmi: QmiSet, hbar: int, gain_mode: str = "exact",
                     pin_passivity: Optional[bool] = None, epsilon: Optional[float] = None,
                     normalize: bool = True) -> LmiProblem:
    """Robust LMI over Σ_AB with two uncertainty channels: the delay (y → e) and the model (z → w).

    The P_AB⁻¹ block carries its own multiplier τ > 0, which leaves Σ_AB unchanged and makes
    the LMI homogeneous in (S, X, Y, τ). The strictness margins then fix a scale only and
    never cut off a certificate. ``normalize`` divides the block by ‖P_AB⁻¹‖ to keep the
    solver's data well scaled.
    """
    if not qmi.assumption_ok:
        raise ValidationError(f"data assumptions not validated: {qmi.assumption_message}")
    hbar = validate_hbar(hbar)
    validate_gain_mode(gain_mode)
    n, m = qmi.n, qmi.m
    K = as_matrix(K, "K", (m, n))
    gain_sq = gain_value(hbar, gain_mode)
    eye, zero = np.eye(n), np.zeros((n, n))

    # columns: x, e, w
    state_next = np.hstack([zero, zero, eye])
    state_now = np.hstack([eye, zero, zero])
    iqc_rows = np.block([[eye, zero, -eye], [zero, eye, zero]])
    model_rows = np.block([
        [eye, zero, zero],
        [K, K, np.zeros((m, n))],
        [zero, zero, eye],
    ])
    scale = float(np.linalg.norm(qmi.P_inv, 2)) if normalize else 1.0
    uncertainty = np.block([
        [-qmi.Q_tilde, qmi.S_tilde],
        [qmi.S_tilde.T, -qmi.R_tilde],
    ]) / scale
    uncertainty = 0.5 * (uncertainty + uncertainty.T)
    model_term = model_rows.T @ uncertainty @ model_rows

    def expression(values):
        S = values["S"]
        pi = combined_multiplier(values, gain_sq)
        return (state_next.T @ S @ state_next - state_now.T @ S @ state_now
                + iqc_rows.T @ pi @ iqc_rows + values["tau"][0, 0] * model_term)

    y_cone = Cone.ZERO if resolve_pinning(gain_mode, pin_passivity) else Cone.POSITIVE_SEMIDEFINITE
    return LmiProblem(
        variables=(
            LmiVariable("S", n, Cone.POSITIVE_DEFINITE),
            LmiVariable("X", n, Cone.POSITIVE_DEFINITE),
            LmiVariable("Y", n, y_cone),
            LmiVariable("tau", 1, Cone.POSITIVE_DEFINITE),
        ),
        constraints=(LmiConstraint("data_lmi", expression, Sense.STRICT_NEGATIVE),),
        epsilon=epsilon,
        name=f"data_lmi[hbar={hbar},{gain_mode}]",
    )


def certify_qmi(qmi: QmiSet, K, hbar: int, gain_mode: str = "exact",
                pin_passivity: Optional[bool] = None, solver: Optional[str] = None,
                epsilon: Optional[float] = None) -> Certificate:
    """Certification against a prebuilt QMI, reused across h̄ candidates"""
    hbar = validate_hbar(hbar)
    gain_sq = gain_value(hbar, gain_mode)
    if not qmi.assumption_ok:
        return Certificate(
            verdict=Verdict.ASSUMPTION_VIOLATED,
            hbar=hbar,
            gain_mode=gain_mode,
            gain_sq=gain_sq,
            source="data",
            diagnostics={"error": qmi.assumption_message, "qmi": qmi.to_dict()},
        )
    problem = data_lmi_problem(K, qmi, hbar, gain_mode, pin_passivity, epsilon)
    solution = solve(problem, solver=solver)
    certificate = certificate_from_solution(solution, hbar, gain_mode, gain_sq, "data")
    certificate.diagnostics["qmi"] = qmi.to_dict()
    if solution.feasible:
        certificate.diagnostics["tau"] = float(solution.witness["tau"][0, 0])
    logger.info("Data certification at hbar=%d (%s): %s", hbar, gain_mode, certificate.verdict)
    return certificate


def certify_data(dataset: DataSet, K, hbar: int, gain_mode: str = "exact",
                 pin_passivity: Optional[bool] = None, solver: Optional[str] = None,
                 epsilon: Optional[float] = None) -> Certificate:
    """Stability for every [A B] consistent with the data"""
    return certify_qmi(build_qmi(dataset), K, hbar, gain_mode, pin_passivity, solver, epsilon)
