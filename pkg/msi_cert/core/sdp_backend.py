"""
Backend-neutral LMI feasibility problems and their solution through cvxpy.

A problem declares symmetric matrix variables with a cone each and a list of affine
constraints. Each constraint is a callable mapping variable values to a square matrix;
the same callable is evaluated on cvxpy variables when solving and on numpy arrays when
a witness is re-verified, so the check never goes through the solver.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import cvxpy as cp
import numpy as np

from ..config.defaults import FALLBACK_SOLVER
from ..config.settings import config
from ..utils.validation import DimensionError, ValidationError

logger = logging.getLogger(__name__)


class Cone:
    """Cone membership of a symmetric matrix variable"""
    POSITIVE_DEFINITE = "pd"
    POSITIVE_SEMIDEFINITE = "psd"
    ZERO = "zero"
    FREE = "free"

    ALL = (POSITIVE_DEFINITE, POSITIVE_SEMIDEFINITE, ZERO, FREE)


class Sense:
    """Required sign of a constraint expression"""
    STRICT_NEGATIVE = "< 0"
    NEGATIVE = "<= 0"
    POSITIVE = ">= 0"
    STRICT_POSITIVE = "> 0"

    ALL = (STRICT_NEGATIVE, NEGATIVE, POSITIVE, STRICT_POSITIVE)
    STRICT = (STRICT_NEGATIVE, STRICT_POSITIVE)


class SolveStatus:
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical-failure"


def bmat(blocks: List[List[Any]]):
    """Block matrix from numpy arrays or cvxpy expressions"""
    if any(isinstance(b, cp.Expression) for row in blocks for b in row):
        return cp.bmat(blocks)
    return np.block([[np.asarray(b, dtype=float) for b in row] for row in blocks])


@dataclass(frozen=True)
class LmiVariable:
    name: str
    dim: int
    cone: str = Cone.FREE

    def __post_init__(self):
        if self.cone not in Cone.ALL:
            raise ValidationError(f"unknown cone {self.cone!r} for variable {self.name}")
        if self.dim < 1:
            raise ValidationError(f"variable {self.name} needs a positive dimension")


@dataclass(frozen=True)
class LmiConstraint:
    name: str
    expression: Callable[[Mapping[str, Any]], Any]
    sense: str = Sense.STRICT_NEGATIVE

    def __post_init__(self):
        if self.sense not in Sense.ALL:
            raise ValidationError(f"unknown sense {self.sense!r} for constraint {self.name}")


@dataclass(frozen=True)
class LmiProblem:
    """Symmetric-matrix LMI feasibility problem; strict inequalities use an ε margin"""
    variables: Tuple[LmiVariable, ...]
    constraints: Tuple[LmiConstraint, ...]
    epsilon: Optional[float] = None
    name: str = "lmi"

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate variable names in {names}")
        # every constraint must evaluate on the declared variables alone
        zeros = self.zero_values()
        for constraint in self.constraints:
            try:
                matrix = np.asarray(constraint.expression(zeros), dtype=float)
            except KeyError as e:
                raise ValidationError(f"constraint {constraint.name} uses undeclared variable {e}") from e
            if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
                raise DimensionError(f"constraint {constraint.name} is not a square matrix: {matrix.shape}")

    @property
    def strictness(self) -> float:
        return config.get_epsilon() if self.epsilon is None else float(self.epsilon)

    def variable(self, name: str) -> LmiVariable:
        for var in self.variables:
            if var.name == name:
                return var
        raise KeyError(name)

    def zero_values(self) -> Dict[str, np.ndarray]:
        return {v.name: np.zeros((v.dim, v.dim)) for v in self.variables}

    def evaluate(self, constraint: LmiConstraint, values: Mapping[str, Any]) -> np.ndarray:
        matrix = np.asarray(constraint.expression(values), dtype=float)
        return 0.5 * (matrix + matrix.T)

    def margin(self, constraint: LmiConstraint) -> float:
        """ε scaled by the norm of the constraint's constant term"""
        constant = self.evaluate(constraint, self.zero_values())
        scale = float(np.linalg.norm(constant, 2)) if constant.size else 0.0
        return self.strictness * max(1.0, scale)

    def scaled(self, factor: float) -> "LmiProblem":
        """Same problem with every constraint matrix multiplied by a positive factor"""
        if factor <= 0:
            raise ValidationError("scaling factor must be positive")
        scaled = tuple(
            replace(c, expression=(lambda values, f=c.expression: factor * f(values)))
            for c in self.constraints
        )
        return replace(self, constraints=scaled)


@dataclass
class WitnessCheck:
    ok: bool
    max_violation: float
    violations: Dict[str, float] = field(default_factory=dict)


@dataclass
class LmiSolution:
    status: str
    witness: Dict[str, np.ndarray] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.status == SolveStatus.FEASIBLE

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "witness": {k: np.asarray(v).tolist() for k, v in self.witness.items()},
            "diagnostics": self.diagnostics,
        }


def _extreme_eigenvalues(matrix: np.ndarray) -> Tuple[float, float]:
    eigs = np.linalg.eigvalsh(0.5 * (matrix + matrix.T))
    return float(eigs[0]), float(eigs[-1])


def verify_witness(problem: LmiProblem, witness: Mapping[str, Any],
                   tolerance: Optional[float] = None) -> WitnessCheck:
    """Re-check every cone and constraint of a witness by dense eigenvalue decomposition.

    Strict inequalities must hold strictly; non-strict ones within the tolerance, which is
    scaled by the norm of the checked matrix.
    """
    tol = config.get_psd_tolerance() if tolerance is None else tolerance
    values: Dict[str, np.ndarray] = {}
    violations: Dict[str, float] = {}
    ok = True

    for var in problem.variables:
        if var.name not in witness:
            if var.cone != Cone.ZERO:
                raise ValidationError(f"witness lacks variable {var.name}")
            values[var.name] = np.zeros((var.dim, var.dim))
            continue
        value = np.asarray(witness[var.name], dtype=float)
        if value.size != var.dim * var.dim:
            raise DimensionError(f"witness {var.name} does not have shape ({var.dim}, {var.dim})")
        value = value.reshape(var.dim, var.dim)
        values[var.name] = value
        scaled_tol = tol * max(1.0, float(np.linalg.norm(value, 2)))
        asym = float(np.max(np.abs(value - value.T)))
        if var.cone == Cone.ZERO:
            violation = float(np.max(np.abs(value)))
        elif var.cone == Cone.FREE:
            violation = 0.0
        else:
            lam_min, _ = _extreme_eigenvalues(value)
            violation = max(0.0, -lam_min)
            if var.cone == Cone.POSITIVE_DEFINITE and lam_min <= 0:
                ok = False
        violation = max(violation, asym)
        violations[f"var:{var.name}"] = violation
        if violation > scaled_tol:
            ok = False

    for constraint in problem.constraints:
        matrix = problem.evaluate(constraint, values)
        lam_min, lam_max = _extreme_eigenvalues(matrix)
        scaled_tol = tol * max(1.0, float(np.linalg.norm(matrix, 2)))
        if constraint.sense in (Sense.STRICT_NEGATIVE, Sense.NEGATIVE):
            violation = max(0.0, lam_max)
            strict_ok = lam_max < 0
        else:
            violation = max(0.0, -lam_min)
            strict_ok = lam_min > 0
        if constraint.sense in Sense.STRICT and not strict_ok:
            ok = False
        if violation > scaled_tol:
            ok = False
        violations[f"con:{constraint.name}"] = violation

    max_violation = max(violations.values(), default=0.0)
    return WitnessCheck(ok=ok, max_violation=max_violation, violations=violations)


def _select_solver(solver: Optional[str]) -> str:
    name = (solver or config.get_solver()).upper()
    installed = cp.installed_solvers()
    if name not in installed:
        logger.warning("Solver %s not installed, falling back to %s", name, FALLBACK_SOLVER)
        name = FALLBACK_SOLVER
    return name


def _psd(expr) -> cp.Constraint:
    return 0.5 * (expr + expr.T) >> 0


def _run_solver(cvx_problem: cp.Problem, solver_name: str, verbose: bool) -> Optional[str]:
    """Error text if the solver raised, None otherwise"""
    try:
        cvx_problem.solve(solver=solver_name, verbose=verbose)
    except (KeyboardInterrupt, SystemExit):
        raise
    except BaseException as e:
        # native solver panics derive from BaseException only
        return f"{type(e).__name__}: {e}"
    return None


def solve(problem: LmiProblem, solver: Optional[str] = None, verbose: bool = False) -> LmiSolution:
    """Solve once with cvxpy and re-verify the witness independently before reporting feasibility"""
    eps = problem.strictness
    values: Dict[str, Any] = {}
    cvx_vars: Dict[str, cp.Variable] = {}
    constraints: List[cp.Constraint] = []

    for var in problem.variables:
        if var.cone == Cone.ZERO:
            values[var.name] = np.zeros((var.dim, var.dim))
            continue
        v = cp.Variable((var.dim, var.dim), symmetric=True, name=var.name)
        cvx_vars[var.name] = v
        values[var.name] = v
        if var.cone == Cone.POSITIVE_DEFINITE:
            constraints.append(v - eps * np.eye(var.dim) >> 0)
        elif var.cone == Cone.POSITIVE_SEMIDEFINITE:
            constraints.append(v >> 0)

    for constraint in problem.constraints:
        expr = constraint.expression(values)
        if not isinstance(expr, cp.Expression):
            expr = cp.Constant(np.asarray(expr, dtype=float))
        dim = expr.shape[0]
        margin = problem.margin(constraint)
        if constraint.sense == Sense.STRICT_NEGATIVE:
            constraints.append(_psd(-expr - margin * np.eye(dim)))
        elif constraint.sense == Sense.NEGATIVE:
            constraints.append(_psd(-expr))
        elif constraint.sense == Sense.POSITIVE:
            constraints.append(_psd(expr))
        else:
            constraints.append(_psd(expr - margin * np.eye(dim)))

    solver_name = _select_solver(solver)
    cvx_problem = cp.Problem(cp.Minimize(0), constraints)
    diagnostics: Dict[str, Any] = {"problem": problem.name, "solver": solver_name, "epsilon": eps}

    error = _run_solver(cvx_problem, solver_name, verbose)
    if error is not None and solver_name != FALLBACK_SOLVER and FALLBACK_SOLVER in cp.installed_solvers():
        logger.warning("Solver %s failed on %s (%s), retrying with %s",
                       solver_name, problem.name, error, FALLBACK_SOLVER)
        diagnostics["primary_error"] = error
        solver_name = diagnostics["solver"] = FALLBACK_SOLVER
        error = _run_solver(cvx_problem, solver_name, verbose)
    if error is not None:
        logger.warning("Solver %s failed on %s: %s", solver_name, problem.name, error)
        diagnostics["error"] = error
        return LmiSolution(status=SolveStatus.NUMERICAL_FAILURE, diagnostics=diagnostics)

    status = cvx_problem.status
    diagnostics["solver_status"] = status
    logger.debug("%s: solver %s returned %s", problem.name, solver_name, status)

    if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        return LmiSolution(status=SolveStatus.INFEASIBLE, diagnostics=diagnostics)
    if status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        return LmiSolution(status=SolveStatus.NUMERICAL_FAILURE, diagnostics=diagnostics)

    witness = {name: np.asarray(v.value, dtype=float) for name, v in cvx_vars.items()}
    for var in problem.variables:
        if var.cone == Cone.ZERO:
            witness[var.name] = np.zeros((var.dim, var.dim))
    residual = max((float(np.max(c.violation())) for c in constraints), default=0.0)
    # non-strict parts are accepted up to the solver's own accuracy
    tolerance = max(config.get_psd_tolerance(), config.get_residual_factor() * residual)
    check = verify_witness(problem, witness, tolerance)
    diagnostics.update({"solver_residual": residual, "max_violation": check.max_violation})

    if not check.ok:
        logger.info("%s: witness failed re-verification (violation %.3e)", problem.name, check.max_violation)
        diagnostics["error"] = "witness failed independent re-verification"
        return LmiSolution(status=SolveStatus.NUMERICAL_FAILURE, witness=witness, diagnostics=diagnostics)
    return LmiSolution(status=SolveStatus.FEASIBLE, witness=witness, diagnostics=diagnostics)
