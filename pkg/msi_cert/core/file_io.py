"""
File formats: system JSON, trajectory CSV, disturbance JSON and reports
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from ..utils.validation import DimensionError, ValidationError, as_matrix
from .data_analysis import norm_bound_disturbance
from .models import DisturbanceModel, SystemModel

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _read_json(path: PathLike) -> Dict[str, Any]:
    path = Path(path)
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ValidationError(f"{path} must contain a JSON object")
    return data


def load_system(path: PathLike) -> Tuple[SystemModel, Dict[str, Any]]:
    """System description {A, B, K, optional hbar}; remaining fields are returned as extras"""
    data = _read_json(path)
    model = SystemModel.from_dict(data)
    extras = {k: v for k, v in data.items() if k not in ("A", "B", "K")}
    logger.debug("Loaded system n=%d, m=%d from %s", model.n, model.m, path)
    return model, extras


def load_gain(path: PathLike) -> Tuple[np.ndarray, Dict[str, Any]]:
    """Controller gain K alone, for data-driven analysis where A and B are unknown"""
    data = _read_json(path)
    if "K" not in data:
        raise ValidationError(f"{path} lacks the controller gain K")
    extras = {k: v for k, v in data.items() if k not in ("A", "B", "K")}
    return as_matrix(data["K"], "K"), extras


def save_system(model: SystemModel, path: PathLike, hbar: Optional[int] = None):
    data = model.to_dict()
    if hbar is not None:
        data["hbar"] = int(hbar)
    write_report(path, data)


def _format(value: float) -> str:
    return repr(float(value))


def write_trajectory_csv(path: PathLike, states, inputs=None):
    """Rows t, x1..xn, u1..um; the final state has no paired input and leaves u empty"""
    states = as_matrix(states, "states")
    n = states.shape[1]
    inputs = np.zeros((0, 0)) if inputs is None else as_matrix(inputs, "inputs")
    m = inputs.shape[1] if inputs.size else 0
    if m and inputs.shape[0] not in (states.shape[0], states.shape[0] - 1):
        raise DimensionError(f"{inputs.shape[0]} inputs do not fit {states.shape[0]} states")

    header = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"u{j + 1}" for j in range(m)]
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for t, x in enumerate(states):
            row = [str(t)] + [_format(v) for v in x]
            if m:
                row += [_format(v) for v in inputs[t]] if t < inputs.shape[0] else [""] * m
            writer.writerow(row)
    logger.info("Wrote %d trajectory rows to %s", states.shape[0], path)


def read_trajectory_csv(path: PathLike) -> Tuple[np.ndarray, np.ndarray]:
    """States x(0..N) and inputs u(0..N-1) from a trajectory CSV"""
    with open(path, "r", newline="") as f:
        reader = csv.DictReader(f)
        fields = reader.fieldnames or []
        x_cols = [c for c in fields if c.startswith("x")]
        u_cols = [c for c in fields if c.startswith("u")]
        if not x_cols or not u_cols:
            raise ValidationError(f"{path}: header needs x and u columns, got {fields}")
        states, inputs = [], []
        for line, row in enumerate(reader, start=2):
            try:
                states.append([float(row[c]) for c in x_cols])
                u = [row[c] for c in u_cols]
                if all(v not in (None, "") for v in u):
                    if len(inputs) != len(states) - 1:
                        raise ValidationError(f"{path}:{line}: input after a row without input")
                    inputs.append([float(v) for v in u])
            except ValidationError:
                raise
            except (TypeError, ValueError) as e:
                raise ValidationError(f"{path}:{line}: {e}") from e

    states = np.array(states, dtype=float).reshape(-1, len(x_cols))
    inputs = np.array(inputs, dtype=float).reshape(-1, len(u_cols))
    if states.shape[0] < 2:
        raise ValidationError(f"{path}: need at least two states")
    if inputs.shape[0] == states.shape[0]:
        inputs = inputs[:-1]
    if inputs.shape[0] != states.shape[0] - 1:
        raise DimensionError(f"{path}: {inputs.shape[0]} inputs for {states.shape[0]} states")
    return states, inputs


def disturbance_from_dict(data: Dict[str, Any], N: int, n: int) -> DisturbanceModel:
    """{dbar, Bd} for a norm bound, or the full {Qd, Sd, Rd, Bd}; Bd defaults to I"""
    Bd = data.get("Bd")
    Bd = np.eye(n) if Bd is None else as_matrix(Bd, "Bd", (n, None))
    if "dbar" in data:
        return norm_bound_disturbance(N, Bd.shape[1], data["dbar"], Bd)
    missing = [key for key in ("Qd", "Sd", "Rd") if key not in data]
    if missing:
        raise ValidationError(f"disturbance description lacks dbar or {', '.join(missing)}")
    return DisturbanceModel(Qd=data["Qd"], Sd=data["Sd"], Rd=data["Rd"], Bd=Bd)


def load_disturbance(path: PathLike, N: int, n: int) -> DisturbanceModel:
    return disturbance_from_dict(_read_json(path), N, n)


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if hasattr(value, "to_dict"):
        return value.to_dict()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def report_json(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, indent=2, default=_jsonable)


def write_report(path: PathLike, payload: Dict[str, Any]):
    with open(path, "w") as f:
        f.write(report_json(payload))
        f.write("\n")
    logger.info("Report written to %s", path)
