"""
Data models for MSI Cert
"""

from dataclasses import dataclass, field
from typing import Dict, Any, Optional, List, Tuple

import numpy as np

from ..utils.validation import (
    ValidationError,
    DimensionError,
    as_matrix,
    require_symmetric,
    validate_hbar,
)


GAIN_MODES = ("exact", "frobenius", "legacy")


class Verdict:
    """Certification outcomes"""
    CERTIFIED = "certified"
    NOT_CERTIFIED = "not-certified"
    ASSUMPTION_VIOLATED = "assumption-violated"
    NUMERICAL_FAILURE = "numerical-failure"


def _matrix_to_list(matrix: Optional[np.ndarray]) -> Optional[list]:
    """Row-major nested list at full precision"""
    if matrix is None:
        return None
    return np.asarray(matrix, dtype=float).tolist()


def validate_gain_mode(gain_mode: str) -> str:
    if gain_mode not in GAIN_MODES:
        raise ValidationError(f"gain_mode must be one of {GAIN_MODES}, got {gain_mode!r}")
    return gain_mode


@dataclass(frozen=True)
class SamplingPattern:
    """Sequence of sampling intervals h_k, each within [1, bound]"""
    intervals: Tuple[int, ...]
    bound: int

    def __post_init__(self):
        bound = validate_hbar(self.bound, "bound")
        intervals = tuple(int(h) for h in self.intervals)
        if not intervals:
            raise ValidationError("sampling pattern needs at least one interval")
        for h in intervals:
            if h < 1 or h > bound:
                raise ValidationError(f"interval {h} outside [1, {bound}]")
        object.__setattr__(self, "intervals", intervals)
        object.__setattr__(self, "bound", bound)

    @property
    def length(self) -> int:
        """Number of time steps covered by the intervals"""
        return sum(self.intervals)

    def instants(self) -> List[int]:
        """Sampling instants t_0 = 0, t_{k+1} = t_k + h_k that start an interval"""
        instants = [0]
        for h in self.intervals[:-1]:
            instants.append(instants[-1] + h)
        return instants

    def to_dict(self) -> dict:
        return {"intervals": list(self.intervals), "bound": self.bound}


@dataclass(frozen=True)
class DelaySequence:
    """Sawtooth delay τ(t): time elapsed since the last sampling instant"""
    values: Tuple[int, ...]

    @property
    def max_delay(self) -> int:
        return max(self.values) if self.values else 0

    def is_sawtooth(self) -> bool:
        """τ(0) = 0 and every step either resets to 0 or increases by one"""
        if not self.values or self.values[0] != 0:
            return False
        return all(b == 0 or b == a + 1 for a, b in zip(self.values, self.values[1:]))

    def to_dict(self) -> dict:
        return {"values": list(self.values)}


@dataclass(frozen=True)
class DelayGainBundle:
    """Squared ℓ2 gain of the delay operator and its two upper bounds"""
    hbar: int
    exact_sq_gain: float
    frobenius_sq_gain: float
    legacy_sq_gain: float
    exact_from_eigensolver: bool = True

    @property
    def exact_ratio(self) -> float:
        """Gain ratio exact / legacy (square roots of the squared gains)"""
        if self.legacy_sq_gain == 0:
            return 0.0
        return float(np.sqrt(self.exact_sq_gain / self.legacy_sq_gain))

    @property
    def frobenius_ratio(self) -> float:
        if self.legacy_sq_gain == 0:
            return 0.0
        return float(np.sqrt(self.frobenius_sq_gain / self.legacy_sq_gain))

    def to_dict(self) -> dict:
        return {
            "hbar": self.hbar,
            "exact_sq_gain": self.exact_sq_gain,
            "frobenius_sq_gain": self.frobenius_sq_gain,
            "legacy_sq_gain": self.legacy_sq_gain,
            "exact_ratio": self.exact_ratio,
            "frobenius_ratio": self.frobenius_ratio,
            "exact_from_eigensolver": self.exact_from_eigensolver,
        }


@dataclass(frozen=True)
class MultiplierSet:
    """Gain multiplier X ≻ 0, passivity multiplier Y ⪰ 0 and the scalar multiplying X"""
    X: np.ndarray
    Y: np.ndarray
    gain_sq: float

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def to_dict(self) -> dict:
        return {"X": _matrix_to_list(self.X), "Y": _matrix_to_list(self.Y), "gain_sq": self.gain_sq}


@dataclass(frozen=True)
class SystemModel:
    """x(t+1) = A x(t) + B u(t) with sample-and-hold feedback u = K x(t_k)"""
    A: np.ndarray
    B: np.ndarray
    K: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        if A.shape[0] != A.shape[1]:
            raise DimensionError(f"A must be square, got {A.shape}")
        n = A.shape[0]
        B = as_matrix(self.B, "B", (n, None))
        K = np.asarray(self.K, dtype=float)
        if K.ndim == 1 and B.shape[1] == 1:
            K = K.reshape(1, -1)
        K = as_matrix(K, "K", (B.shape[1], n))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "K", K)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def closed_loop(self) -> np.ndarray:
        """A + BK"""
        return self.A + self.B @ self.K

    @classmethod
    def scalar(cls, a: float, b: float, k: float = 1.0) -> "SystemModel":
        return cls(A=[[a]], B=[[b]], K=[[k]])

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SystemModel":
        missing = [key for key in ("A", "B", "K") if key not in data]
        if missing:
            raise ValidationError(f"system description lacks {', '.join(missing)}")
        return cls(A=data["A"], B=data["B"], K=data["K"])

    def to_dict(self) -> dict:
        return {"A": _matrix_to_list(self.A), "B": _matrix_to_list(self.B), "K": _matrix_to_list(self.K)}


@dataclass(frozen=True)
class DisturbanceModel:
    """Quadratic disturbance bound [Dᵀ; I]ᵀ [[Qd, Sd], [Sdᵀ, Rd]] [Dᵀ; I] ⪰ 0 and input matrix Bd"""
    Qd: np.ndarray
    Sd: np.ndarray
    Rd: np.ndarray
    Bd: np.ndarray

    def __post_init__(self):
        Qd = require_symmetric(as_matrix(self.Qd, "Qd"), "Qd")
        N = Qd.shape[0]
        Bd = as_matrix(self.Bd, "Bd")
        n_d = Bd.shape[1]
        Sd = as_matrix(self.Sd, "Sd", (N, n_d))
        Rd = require_symmetric(as_matrix(self.Rd, "Rd", (n_d, n_d)), "Rd")
        if np.max(np.linalg.eigvalsh(Qd)) >= 0:
            raise ValidationError("Qd must be negative definite")
        if np.linalg.matrix_rank(Bd) < n_d:
            raise ValidationError("Bd must have full column rank")
        object.__setattr__(self, "Qd", Qd)
        object.__setattr__(self, "Sd", Sd)
        object.__setattr__(self, "Rd", Rd)
        object.__setattr__(self, "Bd", Bd)

    @property
    def N(self) -> int:
        return self.Qd.shape[0]

    @property
    def n_d(self) -> int:
        return self.Bd.shape[1]

    def to_dict(self) -> dict:
        return {
            "Qd": _matrix_to_list(self.Qd),
            "Sd": _matrix_to_list(self.Sd),
            "Rd": _matrix_to_list(self.Rd),
            "Bd": _matrix_to_list(self.Bd),
        }


@dataclass(frozen=True)
class DataSet:
    """Trajectory matrices X⁺ (n×N), X (n×N), U (m×N) and the disturbance description"""
    Xplus: np.ndarray
    X: np.ndarray
    U: np.ndarray
    disturbance: DisturbanceModel

    def __post_init__(self):
        X = as_matrix(self.X, "X")
        n, N = X.shape
        if N < 1:
            raise ValidationError("data set needs at least one sample")
        Xplus = as_matrix(self.Xplus, "Xplus", (n, N))
        U = as_matrix(self.U, "U", (None, N))
        if self.disturbance.N != N:
            raise DimensionError(f"disturbance bound is for N={self.disturbance.N}, data has N={N}")
        if self.disturbance.Bd.shape[0] != n:
            raise DimensionError(f"Bd has {self.disturbance.Bd.shape[0]} rows, state dimension is {n}")
        object.__setattr__(self, "Xplus", Xplus)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "U", U)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.U.shape[0]

    @property
    def N(self) -> int:
        return self.X.shape[1]

    @classmethod
    def from_trajectory(cls, states: np.ndarray, inputs: np.ndarray,
                        disturbance: DisturbanceModel) -> "DataSet":
        """Build from time-major states x(0..N) and inputs u(0..N-1)"""
        states = as_matrix(states, "states")
        inputs = as_matrix(inputs, "inputs")
        if states.shape[0] != inputs.shape[0] + 1:
            raise DimensionError(
                f"need one more state than inputs, got {states.shape[0]} states and {inputs.shape[0]} inputs"
            )
        return cls(Xplus=states[1:].T, X=states[:-1].T, U=inputs.T, disturbance=disturbance)


@dataclass(frozen=True)
class QmiSet:
    """Data-based QMI description of Σ_AB together with the inverse blocks used by the dual test"""
    P: np.ndarray
    Q_tilde: np.ndarray
    S_tilde: np.ndarray
    R_tilde: np.ndarray
    inertia: Tuple[int, int, int]
    condition: float
    n: int
    m: int
    n_d: int
    assumption_ok: bool = True
    assumption_message: Optional[str] = None

    @property
    def P_inv(self) -> np.ndarray:
        return np.block([[self.Q_tilde, self.S_tilde], [self.S_tilde.T, self.R_tilde]])

    def to_dict(self) -> dict:
        return {
            "inertia": list(self.inertia),
            "condition": self.condition,
            "n": self.n,
            "m": self.m,
            "n_d": self.n_d,
            "assumption_ok": self.assumption_ok,
            "assumption_message": self.assumption_message,
        }


@dataclass
class Certificate:
    """Outcome of a stability test at one h̄, with the multiplier witnesses when certified"""
    verdict: str
    hbar: int
    gain_mode: str
    gain_sq: float
    source: str = "model"
    S: Optional[np.ndarray] = None
    multipliers: Optional[MultiplierSet] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.verdict == Verdict.CERTIFIED

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "hbar": self.hbar,
            "gain_mode": self.gain_mode,
            "gain_sq": self.gain_sq,
            "source": self.source,
            "S": _matrix_to_list(self.S),
            "multipliers": self.multipliers.to_dict() if self.multipliers else None,
            "diagnostics": self.diagnostics,
        }


@dataclass
class SearchResult:
    """Result of an MSI search"""
    msi: Optional[int]
    cap: int
    cap_exhausted: bool = False
    inconsistent: bool = False
    calls: int = 0
    history: List[Tuple[int, bool]] = field(default_factory=list)
    message: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "msi": self.msi,
            "cap": self.cap,
            "cap_exhausted": self.cap_exhausted,
            "inconsistent": self.inconsistent,
            "calls": self.calls,
            "history": [[h, ok] for h, ok in self.history],
            "message": self.message,
        }


@dataclass
class FalsificationResult:
    """Largest observed state growth ‖x(horizon)‖/‖x0‖ and the pattern that produced it"""
    growth_factor: float
    worst_pattern: SamplingPattern
    hbar: int
    horizon: int
    trials: int
    note: str = "heuristic search: absence of growth is evidence, not proof"

    def to_dict(self) -> dict:
        return {
            "growth_factor": self.growth_factor,
            "worst_pattern": self.worst_pattern.to_dict(),
            "hbar": self.hbar,
            "horizon": self.horizon,
            "trials": self.trials,
            "note": self.note,
        }


@dataclass
class Experiment:
    """Generated open-loop experiment and its hidden disturbance realization"""
    dataset: DataSet
    states: np.ndarray
    inputs: np.ndarray
    disturbance: np.ndarray
    dbar: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "N": self.dataset.N,
            "dbar": self.dbar,
            "seed": self.seed,
            "disturbance_energy": float(np.sum(self.disturbance ** 2)),
        }
