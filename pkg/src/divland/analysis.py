"""Controller characterization: robustness statistics, response maps and
curves, per-neuron activity, and proportional baselines.

Everything here emits plain data structures; rendering lives elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .env import (
    GRAVITY,
    SETTLING_TIME,
    THRUST_CLAMP,
    TRAJ_D_OBS,
    TRAJ_T,
    TRAJ_T_SP,
    run_episode,
    sample_env_params,
)
from .evolve import OBJECTIVE_NAMES, episode_objectives
from .network import Genome, SNNController

__all__ = [
    "P_SLOW",
    "P_FAST",
    "PControllerSpec",
    "PController",
    "p_controller",
    "as_controller",
    "named_baselines",
    "median_sorted",
    "median_select",
    "moving_average",
    "RobustnessReport",
    "evaluate_robustness",
    "steady_state_response",
    "DEFAULT_D_GRID",
    "DEFAULT_DD_GRID",
    "ResponseCurve",
    "transient_response",
    "ActivityMap",
    "record_activity",
    "compare",
]

# Seed-tree domains, disjoint from the evolution domains.
_DOMAIN_ROBUSTNESS = 10
_DOMAIN_TRANSIENT = 11
_DOMAIN_ACTIVITY = 12
_DOMAIN_COMPARE = 13


def _episode_rng(seed: int, domain: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, domain, index)))


@dataclass(frozen=True)
class PControllerSpec:
    """Proportional divergence law: gain (m/s), setpoint (1/s), output clamp (g)."""

    gain: float
    setpoint: float
    clamp: tuple[float, float] = THRUST_CLAMP

    def __post_init__(self) -> None:
        if not self.clamp[0] < self.clamp[1]:
            raise ValueError(f"empty clamp range {self.clamp!r}")


P_SLOW = PControllerSpec(gain=0.98, setpoint=2.5, clamp=(-0.2, 0.25))
P_FAST = PControllerSpec(gain=1.96, setpoint=2.5, clamp=(-0.7, 0.3))


def p_controller(spec: PControllerSpec, d_obs: float) -> float:
    """Clamped proportional thrust response to the divergence error, in g."""
    t_sp = spec.gain / GRAVITY * (d_obs - spec.setpoint)
    lo, hi = spec.clamp
    return lo if t_sp < lo else hi if t_sp > hi else t_sp


class PController:
    """Episode-runnable wrapper around a proportional divergence law."""

    spike_counts: tuple[int, ...] = ()

    def __init__(self, spec: PControllerSpec):
        self.spec = spec

    def reset(self) -> None:
        pass

    def step(self, d_obs: float, dd_obs: float) -> float:
        return p_controller(self.spec, d_obs)


def named_baselines() -> dict[str, PControllerSpec]:
    return {"p-slow": P_SLOW, "p-fast": P_FAST}


def as_controller(obj):
    """Coerce a genome or baseline spec into an episode-runnable controller."""
    if isinstance(obj, Genome):
        return SNNController(obj)
    if isinstance(obj, PControllerSpec):
        return PController(obj)
    return obj


def median_sorted(values) -> float:
    """Median via a full sort, averaging the two central order statistics."""
    ordered = sorted(float(x) for x in values)
    if not ordered:
        raise ValueError("median of empty sequence")
    n = len(ordered)
    mid = n // 2
    if n % 2:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def median_select(values) -> float:
    """Median via partial selection; no full sort."""
    a = np.asarray(list(values), dtype=float)
    if a.size == 0:
        raise ValueError("median of empty sequence")
    mid = a.size // 2
    if a.size % 2:
        return float(np.partition(a, mid)[mid])
    part = np.partition(a, [mid - 1, mid])
    return (float(part[mid - 1]) + float(part[mid])) / 2.0


def moving_average(values, window: int) -> np.ndarray:
    """Centered-on-window running means; entry i averages values[i:i+window]."""
    if window < 1:
        raise ValueError(f"window must be positive, got {window}")
    a = np.asarray(values, dtype=float)
    if a.size < window:
        raise ValueError(f"{a.size} samples cannot fill a window of {window}")
    return sliding_window_view(a, window).mean(axis=1)


@dataclass(frozen=True, eq=False)
class RobustnessReport:
    """Per-objective spread over many randomized landings from one altitude.

    ``samples`` holds one scored row per landing in OBJECTIVE_NAMES order;
    quartiles use linear interpolation, the median both central order stats.
    """

    landings: int
    h0: float
    success_rate: float
    medians: tuple[float, float, float, float]
    q1: tuple[float, float, float, float]
    q3: tuple[float, float, float, float]
    samples: np.ndarray

    @property
    def iqr(self) -> tuple[float, float, float, float]:
        return tuple(hi - lo for lo, hi in zip(self.q1, self.q3))


def evaluate_robustness(controller, landings: int = 250, seed: int = 0,
                        h0: float = 4.0) -> RobustnessReport:
    """Score ``landings`` independently randomized episodes from ``h0``."""
    if landings < 1:
        raise ValueError(f"landings must be positive, got {landings}")
    ctrl = as_controller(controller)
    rows = []
    successes = 0
    for i in range(landings):
        rng = _episode_rng(seed, _DOMAIN_ROBUSTNESS, i)
        params = sample_env_params(rng)
        result = run_episode(ctrl, h0, params, rng)
        if result.landed:
            successes += 1
        rows.append(episode_objectives(result, h0))
    samples = np.asarray(rows, dtype=float)
    medians = tuple(median_sorted(samples[:, k]) for k in range(samples.shape[1]))
    q1 = tuple(float(np.quantile(samples[:, k], 0.25)) for k in range(samples.shape[1]))
    q3 = tuple(float(np.quantile(samples[:, k], 0.75)) for k in range(samples.shape[1]))
    return RobustnessReport(
        landings=landings,
        h0=h0,
        success_rate=successes / landings,
        medians=medians,
        q1=q1,
        q3=q3,
        samples=samples,
    )


DEFAULT_D_GRID = tuple(np.linspace(-5.0, 5.0, 101))
DEFAULT_DD_GRID = tuple(np.linspace(-20.0, 20.0, 101))


def steady_state_response(controller, d_values=DEFAULT_D_GRID,
                          dd_values=DEFAULT_DD_GRID, steps: int = 100,
                          tail: int = 50) -> np.ndarray:
    """Late-step mean setpoint under constant observations, per grid point.

    Returns a matrix indexed [divergence, divergence rate]. The controller
    restarts from reset at every grid point and runs ``steps`` steps; the
    last ``tail`` outputs are averaged so onset transients wash out.
    """
    if not 1 <= tail <= steps:
        raise ValueError(f"need 1 <= tail <= steps, got tail={tail} steps={steps}")
    ctrl = as_controller(controller)
    out = np.empty((len(d_values), len(dd_values)))
    skip = steps - tail
    for i, d_obs in enumerate(d_values):
        for j, dd_obs in enumerate(dd_values):
            ctrl.reset()
            step = ctrl.step
            for _ in range(skip):
                step(d_obs, dd_obs)
            acc = 0.0
            for _ in range(tail):
                acc += step(d_obs, dd_obs)
            out[i, j] = acc / tail
    return out


@dataclass(frozen=True, eq=False)
class ResponseCurve:
    """Closed-loop observation/response samples sorted by observed divergence."""

    d_obs: np.ndarray
    t_sp: np.ndarray
    smoothed_d: np.ndarray
    smoothed_t: np.ndarray
    window: int


def transient_response(controller, episodes: int = 100, window: int = 40,
                       seed: int = 0, h0: float = 4.0) -> ResponseCurve:
    """Pool post-settling (observation, applied setpoint) samples from many
    randomized landings, sort them by observation, and smooth both axes."""
    ctrl = as_controller(controller)
    d_samples: list[float] = []
    t_samples: list[float] = []
    for i in range(episodes):
        rng = _episode_rng(seed, _DOMAIN_TRANSIENT, i)
        params = sample_env_params(rng)
        result = run_episode(ctrl, h0, params, rng, record=True)
        for row in result.trajectory:
            if row[TRAJ_T] >= SETTLING_TIME:
                d_samples.append(row[TRAJ_D_OBS])
                t_samples.append(row[TRAJ_T_SP])
    if len(d_samples) < window:
        raise ValueError(
            f"{len(d_samples)} samples cannot fill a window of {window}"
        )
    d_arr = np.asarray(d_samples)
    t_arr = np.asarray(t_samples)
    order = np.argsort(d_arr, kind="stable")
    d_sorted = d_arr[order]
    t_sorted = t_arr[order]
    return ResponseCurve(
        d_obs=d_sorted,
        t_sp=t_sorted,
        smoothed_d=moving_average(d_sorted, window),
        smoothed_t=moving_average(t_sorted, window),
        window=window,
    )


@dataclass(frozen=True, eq=False)
class ActivityMap:
    """Per-neuron firing rates over several landings, plus the signed wiring.

    ``rates`` is hidden neurons first, output last, in Hz of simulated time.
    """

    rates: tuple[float, ...]
    total_time: float
    episodes: int
    w_in: tuple[tuple[float, ...], ...]
    w_out: tuple[float, ...]


def record_activity(controller, episodes: int = 5, seed: int = 0,
                    h0: float = 4.0) -> ActivityMap:
    """Accumulate spike counts of a spiking controller over randomized landings."""
    ctrl = as_controller(controller)
    genome = ctrl.genome
    counts = [0] * genome.n_neurons
    total_time = 0.0
    for i in range(episodes):
        rng = _episode_rng(seed, _DOMAIN_ACTIVITY, i)
        params = sample_env_params(rng)
        result = run_episode(ctrl, h0, params, rng)
        for k, c in enumerate(result.spike_counts):
            counts[k] += c
        total_time += result.duration
    rates = tuple(c / total_time for c in counts)
    return ActivityMap(
        rates=rates,
        total_time=total_time,
        episodes=episodes,
        w_in=genome.w_in,
        w_out=genome.w_out,
    )


def compare(named_controllers, episodes: int = 50, seed: int = 0, h0: float = 4.0,
            env_params=None) -> list[dict]:
    """Summarize several controllers on matched landings.

    Landing i uses the same environment draw and noise stream for every
    controller. ``env_params``, if given, fixes the world configuration
    instead of sampling one per landing. One summary dict per controller.
    """
    rows = []
    for name, obj in named_controllers:
        ctrl = as_controller(obj)
        scores = []
        successes = 0
        for i in range(episodes):
            rng = _episode_rng(seed, _DOMAIN_COMPARE, i)
            params = env_params if env_params is not None else sample_env_params(rng)
            result = run_episode(ctrl, h0, params, rng)
            if result.landed:
                successes += 1
            scores.append(episode_objectives(result, h0))
        matrix = np.asarray(scores, dtype=float)
        row = {
            "controller": name,
            "landings": episodes,
            "success_rate": successes / episodes,
        }
        for k, objective in enumerate(OBJECTIVE_NAMES):
            row[f"median_{objective}"] = median_sorted(matrix[:, k])
        rows.append(row)
    return rows
