"""
Closed-loop simulation under aperiodic sampling, experiment generation for the data-driven
pipeline and a heuristic search for growing trajectories.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..config.defaults import DEFAULT_INPUT_RANGE
from ..config.settings import config
from ..utils.threading import run_in_order
from ..utils.validation import DimensionError, ValidationError, as_matrix, validate_hbar, validate_positive
from .data_analysis import norm_bound_disturbance
from .delay_core import delay_sequence
from .models import DataSet, Experiment, FalsificationResult, SamplingPattern, SystemModel

logger = logging.getLogger(__name__)


def _initial_state(model: SystemModel, x0) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape[0] != model.n:
        raise DimensionError(f"x0 has {x0.shape[0]} entries, state dimension is {model.n}")
    return x0


def pattern_from_intervals(intervals: Sequence[int], bound: Optional[int] = None) -> SamplingPattern:
    """Pattern from explicit intervals; the bound defaults to the longest interval"""
    intervals = tuple(int(h) for h in intervals)
    if not intervals:
        raise ValidationError("need at least one interval")
    return SamplingPattern(intervals=intervals, bound=max(intervals) if bound is None else bound)


def sample_pattern(hbar: int, horizon: int, rng: np.random.Generator) -> SamplingPattern:
    """Intervals drawn uniformly from 1..h̄ until the horizon is covered"""
    hbar = validate_hbar(hbar)
    if horizon < 1:
        raise ValidationError(f"horizon must be >= 1, got {horizon}")
    batch = max(1, 2 * horizon // (hbar + 1) + 2)
    intervals: List[int] = []
    covered = 0
    while covered < horizon:
        draws = rng.integers(1, hbar + 1, size=batch)
        for h in draws:
            intervals.append(int(h))
            covered += int(h)
            if covered >= horizon:
                break
    return SamplingPattern(intervals=tuple(intervals), bound=hbar)


def closed_loop(model: SystemModel, pattern: SamplingPattern, x0, horizon: Optional[int] = None,
                return_inputs: bool = False):
    """x(t+1) = A x(t) + B K x(t_k) for t = 0..horizon-1; rows of the result are x(0..horizon)"""
    horizon = pattern.length if horizon is None else int(horizon)
    tau = delay_sequence(pattern, horizon).values
    states = np.zeros((horizon + 1, model.n))
    inputs = np.zeros((horizon, model.m))
    states[0] = _initial_state(model, x0)
    held = None
    for t in range(horizon):
        if tau[t] == 0:
            held = model.K @ states[t]
        inputs[t] = held
        states[t + 1] = model.A @ states[t] + model.B @ held
    if return_inputs:
        return states, inputs
    return states


def interval_maps(model: SystemModel, hbar: int) -> np.ndarray:
    """Stack of Φ(0..h̄), Φ(h) = A^h + (Σ_{i<h} A^i) B K, with Φ(0) = I"""
    hbar = validate_hbar(hbar)
    n = model.n
    bk = model.B @ model.K
    maps = np.empty((hbar + 1, n, n))
    power = np.eye(n)
    partial = np.zeros((n, n))
    maps[0] = power
    for h in range(1, hbar + 1):
        partial = partial + power
        power = model.A @ power
        maps[h] = power + partial @ bk
    return maps


def interval_map(model: SystemModel, h: int) -> np.ndarray:
    """State transition over one sampling interval of length h"""
    return interval_maps(model, h)[-1]


def _log_growth(maps: np.ndarray, pattern: SamplingPattern, x0: np.ndarray, horizon: int) -> float:
    """log(‖x(horizon)‖/‖x0‖), renormalizing after each interval"""
    x = x0 / np.linalg.norm(x0)
    total = 0.0
    covered = 0
    for h in pattern.intervals:
        step = min(h, horizon - covered)
        x = maps[step] @ x
        norm = float(np.linalg.norm(x))
        if norm == 0.0:
            return -math.inf
        total += math.log(norm)
        x = x / norm
        covered += step
        if covered >= horizon:
            break
    return total


def greedy_pattern(model: SystemModel, hbar: int, horizon: int, x0,
                   maps: Optional[np.ndarray] = None) -> SamplingPattern:
    """At every sampling instant pick the interval with the largest one-interval growth of ‖x‖"""
    hbar = validate_hbar(hbar)
    maps = interval_maps(model, hbar) if maps is None else maps
    x = _initial_state(model, x0)
    x = x / np.linalg.norm(x)
    intervals: List[int] = []
    covered = 0
    while covered < horizon:
        norms = np.linalg.norm(maps[1:] @ x, axis=1)
        h = int(np.argmax(norms)) + 1
        intervals.append(h)
        covered += h
        x = maps[h] @ x
        norm = np.linalg.norm(x)
        if norm == 0.0:
            break
        x = x / norm
    return SamplingPattern(intervals=tuple(intervals) or (1,), bound=hbar)


def _worst_periodic(maps: np.ndarray, hbar: int, horizon: int) -> Tuple[SamplingPattern, np.ndarray]:
    """Constant pattern at the interval whose Φ(h) has the largest spectral radius"""
    radii = [float(np.max(np.abs(np.linalg.eigvals(maps[h])))) for h in range(1, hbar + 1)]
    h = int(np.argmax(radii)) + 1
    eigvals, eigvecs = np.linalg.eig(maps[h])
    v = eigvecs[:, int(np.argmax(np.abs(eigvals)))]
    x0 = v.real if np.linalg.norm(v.real) > 1e-12 else v.imag
    pattern = SamplingPattern(intervals=(h,) * math.ceil(horizon / h), bound=hbar)
    return pattern, x0


def falsify(model: SystemModel, hbar: int, trials: int = 100, horizon: int = 1000,
            seed: Optional[int] = None, workers: Optional[int] = None) -> FalsificationResult:
    """Largest growth ‖x(horizon)‖/‖x0‖ over random, greedy and worst periodic patterns"""
    hbar = validate_hbar(hbar)
    if trials < 0 or horizon < 1:
        raise ValidationError("trials must be >= 0 and horizon >= 1")
    seed = config.get_seed() if seed is None else seed
    workers = config.get_workers() if workers is None else workers
    maps = interval_maps(model, hbar)
    streams = np.random.SeedSequence(seed).spawn(trials + 1)

    def random_trial(stream: np.random.SeedSequence) -> Tuple[float, SamplingPattern]:
        rng = np.random.default_rng(stream)
        pattern = sample_pattern(hbar, horizon, rng)
        x0 = rng.standard_normal(model.n)
        return _log_growth(maps, pattern, x0, horizon), pattern

    candidates = run_in_order(random_trial, streams[:trials], workers)

    starts = [np.eye(model.n)[i] for i in range(model.n)]
    starts.append(np.random.default_rng(streams[-1]).standard_normal(model.n))
    for x0 in starts:
        pattern = greedy_pattern(model, hbar, horizon, x0, maps)
        candidates.append((_log_growth(maps, pattern, x0, horizon), pattern))

    periodic, x0 = _worst_periodic(maps, hbar, horizon)
    candidates.append((_log_growth(maps, periodic, x0, horizon), periodic))

    log_growth, worst = max(candidates, key=lambda item: item[0])
    growth = math.exp(log_growth) if log_growth < 700 else math.inf
    logger.info("Falsification at hbar=%d: worst growth %.6g over %d candidates",
                hbar, growth, len(candidates))
    return FalsificationResult(growth_factor=growth, worst_pattern=worst, hbar=hbar,
                               horizon=horizon, trials=len(candidates))


def _ball_samples(rng: np.random.Generator, count: int, dim: int, radius: float) -> np.ndarray:
    """Uniform samples in the Euclidean ball of the given radius"""
    if radius == 0.0:
        return np.zeros((count, dim))
    directions = rng.standard_normal((count, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.uniform(0.0, 1.0, size=(count, 1)) ** (1.0 / dim)
    return directions * radii


def generate_experiment(model_true: SystemModel, N: int, input_range: Optional[Tuple[float, float]] = None,
                        dbar: float = 0.0, Bd=None, seed: Optional[int] = None, x0=None) -> Experiment:
    """Open-loop experiment x(t+1) = A x(t) + B u(t) + Bd d(t), u uniform on the range, ‖d(t)‖ ≤ d̄"""
    if N < 1:
        raise ValidationError(f"N must be >= 1, got {N}")
    n, m = model_true.n, model_true.m
    low, high = DEFAULT_INPUT_RANGE if input_range is None else input_range
    if not low < high:
        raise ValidationError(f"input range must satisfy low < high, got ({low}, {high})")
    dbar = validate_positive(dbar, "dbar", allow_zero=True)
    Bd = np.eye(n) if Bd is None else as_matrix(Bd, "Bd", (n, None))
    seed = config.get_seed() if seed is None else seed
    rng = np.random.default_rng(seed)

    inputs = rng.uniform(low, high, size=(N, m))
    disturbance = _ball_samples(rng, N, Bd.shape[1], dbar)
    states = np.zeros((N + 1, n))
    if x0 is not None:
        states[0] = _initial_state(model_true, x0)
    for t in range(N):
        states[t + 1] = model_true.A @ states[t] + model_true.B @ inputs[t] + Bd @ disturbance[t]

    dataset = DataSet.from_trajectory(states, inputs, norm_bound_disturbance(N, Bd.shape[1], dbar, Bd))
    logger.info("Generated experiment: N=%d, dbar=%g, seed=%s", N, dbar, seed)
    return Experiment(dataset=dataset, states=states, inputs=inputs, disturbance=disturbance.T,
                      dbar=dbar, seed=seed)
