"""
Model-based stability certification of the sampled-data loop: the state-space LMI,
its frequency-domain counterpart on a grid, and the closed-form scalar analysis
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..config.settings import config
from ..utils.validation import ValidationError, as_matrix, validate_hbar
from .delay_core import gain_value
from .iqc import is_positive_definite, is_positive_semidefinite
from .models import Certificate, MultiplierSet, SystemModel, Verdict, validate_gain_mode
from .sdp_backend import (
    Cone,
    LmiConstraint,
    LmiProblem,
    LmiSolution,
    LmiVariable,
    Sense,
    SolveStatus,
    bmat,
    solve,
)

logger = logging.getLogger(__name__)

_VERDICTS = {
    SolveStatus.FEASIBLE: Verdict.CERTIFIED,
    SolveStatus.INFEASIBLE: Verdict.NOT_CERTIFIED,
    SolveStatus.NUMERICAL_FAILURE: Verdict.NUMERICAL_FAILURE,
}


@dataclass
class FrequencyCheck:
    """Outcome of the gridded frequency-domain test"""
    holds: bool
    worst_omega: float
    worst_value: float
    grid_size: int
    rigorous: bool = False

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "worst_omega": self.worst_omega,
            "worst_value": self.worst_value,
            "grid_size": self.grid_size,
            "rigorous": self.rigorous,
        }


def spectral_radius(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(matrix))))


def is_schur(matrix: np.ndarray, margin: Optional[float] = None) -> bool:
    margin = config.get_schur_margin() if margin is None else margin
    return spectral_radius(matrix) < 1.0 - margin


def closed_loop_blocks(model: SystemModel) -> np.ndarray:
    """[[A+BK, BK], [I-A-BK, -BK]]: maps (x, e) to (x⁺, y)"""
    acl = model.closed_loop
    bk = model.B @ model.K
    eye = np.eye(model.n)
    return np.block([[acl, bk], [eye - acl, -bk]])


def combined_multiplier(values, gain_sq: float):
    """Π = [[gain_sq X + Y, Y], [Y, -X]] on numpy arrays or cvxpy variables"""
    X, Y = values["X"], values["Y"]
    return bmat([[gain_sq * X + Y, Y], [Y, -X]])


def resolve_pinning(gain_mode: str, pin_passivity: Optional[bool]) -> bool:
    # the legacy test only knows the gain IQC
    return gain_mode == "legacy" if pin_passivity is None else bool(pin_passivity)


def model_lmi_problem(model: SystemModel, hbar: int, gain_mode: str = "exact",
                     pin_passivity: Optional[bool] = None, epsilon: Optional[float] = None) -> LmiProblem:
    """State-space LMI in S ≻ 0, X ≻ 0, Y ⪰ 0 for the loop of LTI system and delay operator"""
    hbar = validate_hbar(hbar)
    validate_gain_mode(gain_mode)
    gain_sq = gain_value(hbar, gain_mode)
    n = model.n
    eye, zero = np.eye(n), np.zeros((n, n))
    acl = model.closed_loop
    bk = model.B @ model.K

    # rows of the outer factor: x⁺, x, then the IQC channel (y, e)
    state_next = np.hstack([acl, bk])
    state_now = np.hstack([eye, zero])
    iqc_rows = np.block([[eye - acl, -bk], [zero, eye]])

    def expression(values):
        S = values["S"]
        pi = combined_multiplier(values, gain_sq)
        return state_next.T @ S @ state_next - state_now.T @ S @ state_now + iqc_rows.T @ pi @ iqc_rows

    y_cone = Cone.ZERO if resolve_pinning(gain_mode, pin_passivity) else Cone.POSITIVE_SEMIDEFINITE
    return LmiProblem(
        variables=(
            LmiVariable("S", n, Cone.POSITIVE_DEFINITE),
            LmiVariable("X", n, Cone.POSITIVE_DEFINITE),
            LmiVariable("Y", n, y_cone),
        ),
        constraints=(LmiConstraint("model_lmi", expression, Sense.STRICT_NEGATIVE),),
        epsilon=epsilon,
        name=f"model_lmi[hbar={hbar},{gain_mode}]",
    )


def certificate_from_solution(solution: LmiSolution, hbar: int, gain_mode: str,
                              gain_sq: float, source: str) -> Certificate:
    verdict = _VERDICTS[solution.status]
    S = multipliers = None
    if solution.feasible:
        S = solution.witness["S"]
        multipliers = MultiplierSet(X=solution.witness["X"], Y=solution.witness["Y"], gain_sq=gain_sq)
    return Certificate(
        verdict=verdict,
        hbar=hbar,
        gain_mode=gain_mode,
        gain_sq=gain_sq,
        source=source,
        S=S,
        multipliers=multipliers,
        diagnostics=dict(solution.diagnostics),
    )


def certify_model(model: SystemModel, hbar: int, gain_mode: str = "exact",
                  pin_passivity: Optional[bool] = None, solver: Optional[str] = None,
                  epsilon: Optional[float] = None) -> Certificate:
    """Asymptotic stability for every sampling pattern with intervals up to h̄"""
    problem = model_lmi_problem(model, hbar, gain_mode, pin_passivity, epsilon)
    solution = solve(problem, solver=solver)
    certificate = certificate_from_solution(solution, hbar, gain_mode, gain_value(hbar, gain_mode), "model")
    logger.info("Model certification at hbar=%d (%s): %s", hbar, gain_mode, certificate.verdict)
    return certificate


def transfer_function_value(model: SystemModel, omega: float) -> np.ndarray:
    """G(e^{jω}) = (I - A - BK)(e^{jω}I - (A + BK))⁻¹ BK - BK"""
    acl = model.closed_loop
    bk = model.B @ model.K
    eye = np.eye(model.n)
    resolvent = np.exp(1j * omega) * eye - acl
    if np.linalg.cond(resolvent) > 1e12:
        raise ValidationError(f"resolvent is near singular at omega={omega}")
    return (eye - acl) @ np.linalg.solve(resolvent, bk) - bk


def frequency_grid(grid_size: Optional[int] = None) -> np.ndarray:
    """Uniform grid on [0, π]; negative frequencies follow by conjugate symmetry"""
    grid_size = config.get_grid_size() if grid_size is None else int(grid_size)
    if grid_size < 2:
        raise ValidationError("frequency grid needs at least two points")
    return np.linspace(0.0, np.pi, grid_size)


def hinf_norm_estimate(model: SystemModel, grid_size: Optional[int] = None) -> float:
    """Grid estimate of ‖G‖∞"""
    return max(
        float(np.linalg.norm(transfer_function_value(model, w), 2)) for w in frequency_grid(grid_size)
    )


def frequency_check(model: SystemModel, hbar: int, X, Y, grid_size: Optional[int] = None,
                     gain_mode: str = "exact") -> FrequencyCheck:
    """[G; I]* Π [G; I] ≺ 0 at every grid frequency (not a rigorous certificate)"""
    if not is_schur(model.closed_loop):
        raise ValidationError("A + BK must be Schur for the frequency-domain test")
    n = model.n
    X = as_matrix(X, "X", (n, n))
    Y = as_matrix(Y, "Y", (n, n))
    if not is_positive_definite(X, 0.0):
        raise ValidationError("X must be positive definite")
    if not is_positive_semidefinite(Y):
        raise ValidationError("Y must be positive semidefinite")
    gain_sq = gain_value(validate_hbar(hbar), gain_mode)
    top_left = gain_sq * X + Y

    grid = frequency_grid(grid_size)
    worst_omega, worst_value = 0.0, -np.inf
    for omega in grid:
        G = transfer_function_value(model, omega)
        H = G.conj().T @ top_left @ G + G.conj().T @ Y + Y @ G - X
        value = float(np.linalg.eigvalsh(0.5 * (H + H.conj().T))[-1])
        if value > worst_value:
            worst_omega, worst_value = float(omega), value
    return FrequencyCheck(holds=worst_value < 0, worst_omega=worst_omega,
                          worst_value=worst_value, grid_size=len(grid))


def scalar_region(a: float, b: float) -> bool:
    """Scalar systems with K = 1 certifiable for arbitrary h̄ via the passivity multiplier"""
    return -1 < a < 1 and 0 < b < 2 and -1 < a + b < 1


def scalar_condition(a: float, b: float, hbar: int, Y: float, gain_mode: str = "exact") -> bool:
    """Closed-form sufficient condition b²/(1+a+b) ≤ bY/(λ + Y) with X = 1, K = 1"""
    if Y < 0:
        raise ValidationError("Y must be nonnegative")
    if not -1 < a + b < 1:
        return False
    gain_sq = gain_value(validate_hbar(hbar), gain_mode)
    if gain_sq + Y == 0:
        return b * b / (1 + a + b) <= 0
    return b * b / (1 + a + b) <= b * Y / (gain_sq + Y)
