"""Randomized vertical landing world.

A point vehicle descends under gravity-normalized thrust with lagged motor
response and additive wind. The only feedback a controller receives is the
flow-field divergence of the ground plane, observed with transport delay,
additive and proportional noise, and occasional one-step holds. Episodes
start from a handful of altitudes, settle briefly with the setpoint forced
to zero, and end on touchdown, flyaway, or a time bound.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .network import Genome, SNNController

__all__ = [
    "GRAVITY",
    "THRUST_CLAMP",
    "LANDING_ALTITUDE",
    "CEILING_MARGIN",
    "MAX_EPISODE_TIME",
    "SETTLING_TIME",
    "OUTCOME_LANDED",
    "OUTCOME_FLYAWAY",
    "OUTCOME_TIMEOUT",
    "TRAJECTORY_HEADER",
    "InvalidStateError",
    "EnvParams",
    "EnvState",
    "PointPairSample",
    "EpisodeResult",
    "sample_env_params",
    "noise_free_params",
    "init_state",
    "ground_truth_divergence",
    "dynamics_step",
    "observe",
    "size_divergence",
    "run_episode",
]

GRAVITY = 9.81
THRUST_CLAMP = (-0.8, 0.5)  # applied setpoint bounds, units of g
LANDING_ALTITUDE = 0.05     # m; at or below counts as touchdown
CEILING_MARGIN = 5.0        # m above the start altitude
MAX_EPISODE_TIME = 30.0     # s
SETTLING_TIME = 0.5         # s with the setpoint forced to zero
WIND_STD_DEFAULT = 0.1

OUTCOME_LANDED = "landed"
OUTCOME_FLYAWAY = "flyaway"
OUTCOME_TIMEOUT = "timeout"

# Sampling ranges for one environment draw.
DELAY_STEPS_CHOICES = (1, 2, 3, 4)
NOISE_STD_RANGE = (0.05, 0.15)
NOISE_STD_PROP_RANGE = (0.0, 0.25)
MOTOR_LAG_RANGE = (0.005, 0.04)
DT_RANGE = (0.02, 0.0333)
JITTER_PROB_RANGE = (0.0, 0.2)

TRAJECTORY_HEADER = ("t", "h", "v", "T", "T_sp", "D", "d_hat", "dd_hat", "spikes")
TRAJ_T, TRAJ_H, TRAJ_V, TRAJ_THRUST, TRAJ_T_SP, TRAJ_D, TRAJ_D_OBS, TRAJ_DD_OBS, TRAJ_SPIKES = range(9)


class InvalidStateError(ValueError):
    """Physical state no longer supports an observation (vehicle underground)."""


@dataclass(frozen=True)
class EnvParams:
    """One sampled configuration of the randomized world.

    ``delay_steps`` is the observation transport delay in whole steps;
    ``noise_std``/``noise_std_prop`` the additive and proportional
    observation noise; ``motor_lag`` the thrust response time constant;
    ``jitter_prob`` the chance an observation is held one step.
    """

    delay_steps: int
    noise_std: float
    noise_std_prop: float
    motor_lag: float
    dt: float
    jitter_prob: float
    wind_std: float = WIND_STD_DEFAULT

    def __post_init__(self) -> None:
        if self.delay_steps < 1 or self.delay_steps != int(self.delay_steps):
            raise ValueError(f"delay_steps must be a positive integer, got {self.delay_steps}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.noise_std < 0 or self.noise_std_prop < 0 or self.wind_std < 0:
            raise ValueError("noise magnitudes must be nonnegative")
        if not 0 <= self.jitter_prob <= 1:
            raise ValueError(f"jitter_prob must lie in [0, 1], got {self.jitter_prob}")
        if self.motor_lag < 0:
            raise ValueError(f"motor_lag must be nonnegative, got {self.motor_lag}")


def sample_env_params(rng: np.random.Generator) -> EnvParams:
    """Draw one world configuration; draw order is fixed for replayability."""
    return EnvParams(
        delay_steps=int(rng.integers(DELAY_STEPS_CHOICES[0], DELAY_STEPS_CHOICES[-1] + 1)),
        noise_std=float(rng.uniform(*NOISE_STD_RANGE)),
        noise_std_prop=float(rng.uniform(*NOISE_STD_PROP_RANGE)),
        motor_lag=float(rng.uniform(*MOTOR_LAG_RANGE)),
        dt=float(rng.uniform(*DT_RANGE)),
        jitter_prob=float(rng.uniform(*JITTER_PROB_RANGE)),
    )


def noise_free_params(dt: float = 0.025, motor_lag: float = 0.02,
                      delay_steps: int = 1) -> EnvParams:
    """Degenerate configuration: no noise, no jitter, no wind."""
    return EnvParams(
        delay_steps=delay_steps,
        noise_std=0.0,
        noise_std_prop=0.0,
        motor_lag=motor_lag,
        dt=dt,
        jitter_prob=0.0,
        wind_std=0.0,
    )


@dataclass
class EnvState:
    """Mutable vehicle and observation-pipeline state.

    ``thrust`` is the realized net vertical acceleration relative to hover
    (m/s^2); ``divergence_history`` buffers ground-truth divergence oldest
    first and always holds exactly ``delay_steps`` entries between calls.
    """

    h: float
    v: float
    thrust: float
    wind: float
    t: float
    divergence_history: deque
    last_obs: float
    held_last_step: bool


def ground_truth_divergence(state: EnvState) -> float:
    """Instantaneous divergence, positive while descending."""
    if state.h <= 0:
        raise InvalidStateError(f"altitude {state.h} is not above ground")
    return (0.0 - state.v) / state.h


def init_state(h0: float, params: EnvParams) -> EnvState:
    """State at rest at altitude ``h0`` with a saturated delay buffer."""
    if h0 <= LANDING_ALTITUDE:
        raise ValueError(f"start altitude {h0} must exceed {LANDING_ALTITUDE}")
    state = EnvState(
        h=float(h0), v=0.0, thrust=0.0, wind=0.0, t=0.0,
        divergence_history=deque(), last_obs=0.0, held_last_step=False,
    )
    d0 = ground_truth_divergence(state)
    state.divergence_history.extend([d0] * params.delay_steps)
    state.last_obs = d0
    return state


def dynamics_step(state: EnvState, params: EnvParams, t_sp: float,
                  rng: np.random.Generator) -> None:
    """Advance the physics one step under setpoint ``t_sp`` (units of g).

    Update order: wind first, then altitude from the old velocity, velocity
    from the old thrust plus the new wind, thrust toward the setpoint, time.
    The wind term enters the velocity update unscaled by dt.
    """
    dt = params.dt
    wind = state.wind + dt * (rng.normal(0.0, params.wind_std) - state.wind) / (dt + params.wind_std)
    state.wind = wind
    state.h += dt * state.v
    state.v += dt * state.thrust + wind
    state.thrust += dt * (t_sp * GRAVITY - state.thrust) / (dt + params.motor_lag)
    state.t += dt


def observe(state: EnvState, params: EnvParams,
            rng: np.random.Generator) -> tuple[float, float]:
    """Produce the (divergence, divergence rate) pair the controller sees.

    The freshest ground truth enters the delay buffer and the stalest leaves
    it; the delayed value then picks up additive plus proportional noise. A
    jitter event repeats the previous observation with a zero rate and never
    occurs on consecutive steps. The rate is the backward difference of what
    was actually observed.
    """
    hist = state.divergence_history
    base = hist.popleft()
    hist.append(ground_truth_divergence(state))
    if not state.held_last_step and rng.random() < params.jitter_prob:
        state.held_last_step = True
        return state.last_obs, 0.0
    d_obs = base + rng.normal(0.0, params.noise_std) + base * rng.normal(0.0, params.noise_std_prop)
    dd_obs = (d_obs - state.last_obs) / params.dt
    state.last_obs = d_obs
    state.held_last_step = False
    return d_obs, dd_obs


@dataclass(frozen=True)
class PointPairSample:
    """Distance between one tracked point pair in two consecutive frames."""

    dist_prev: float
    dist_curr: float


def size_divergence(pairs, dt: float) -> float:
    """Divergence estimate from tracked point-pair distances.

    Averages the per-pair relative shrink rate; shrinking pairs give a
    positive estimate. Rejects an empty list, nonpositive previous
    distances, and nonpositive dt.
    """
    if not pairs:
        raise ValueError("size_divergence needs at least one point pair")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    total = 0.0
    for pair in pairs:
        if not pair.dist_prev > 0:
            raise ValueError(f"previous distance must be positive, got {pair.dist_prev}")
        total += (pair.dist_prev - pair.dist_curr) / pair.dist_prev
    return total / (len(pairs) * dt)


@dataclass(frozen=True, eq=False)
class EpisodeResult:
    """How one landing attempt ended.

    ``spike_counts`` is per neuron (hidden first, output last) and empty for
    non-spiking controllers; ``trajectory`` rows follow TRAJECTORY_HEADER.
    """

    outcome: str
    duration: float
    final_h: float
    final_v: float
    total_spikes: int
    spike_counts: tuple[int, ...]
    trajectory: tuple[tuple, ...] | None = None

    @property
    def landed(self) -> bool:
        return self.outcome == OUTCOME_LANDED


def run_episode(controller, h0: float, params: EnvParams,
                rng: np.random.Generator, record: bool = False) -> EpisodeResult:
    """Fly one landing attempt and report how it ended.

    ``controller`` may be a genome (wrapped in a fresh network runner) or any
    object with ``reset()``, ``step(d_obs, dd_obs) -> setpoint`` and a
    ``spike_counts`` sequence. The controller steps from t=0 so its state
    can evolve during settling, but its setpoint is only applied (clamped)
    once the settling window has passed.
    """
    if isinstance(controller, Genome):
        controller = SNNController(controller)
    controller.reset()
    state = init_state(h0, params)
    ceiling = h0 + CEILING_MARGIN
    clamp_lo, clamp_hi = THRUST_CLAMP
    rows = [] if record else None
    prev_spikes = 0
    while True:
        d_obs, dd_obs = observe(state, params, rng)
        t_sp = controller.step(d_obs, dd_obs)
        if state.t < SETTLING_TIME:
            applied = 0.0
        elif t_sp < clamp_lo:
            applied = clamp_lo
        elif t_sp > clamp_hi:
            applied = clamp_hi
        else:
            applied = t_sp
        if rows is not None:
            total = sum(controller.spike_counts)
            rows.append((
                state.t, state.h, state.v, state.thrust, applied,
                ground_truth_divergence(state), d_obs, dd_obs, total - prev_spikes,
            ))
            prev_spikes = total
        dynamics_step(state, params, applied, rng)
        if state.h <= LANDING_ALTITUDE:
            outcome = OUTCOME_LANDED
            break
        if state.h >= ceiling:
            outcome = OUTCOME_FLYAWAY
            break
        if state.t >= MAX_EPISODE_TIME:
            outcome = OUTCOME_TIMEOUT
            break
    counts = tuple(controller.spike_counts)
    # accumulated time can overshoot the bound by float epsilon
    duration = min(state.t, MAX_EPISODE_TIME)
    return EpisodeResult(
        outcome=outcome,
        duration=duration,
        final_h=state.h,
        final_v=state.v,
        total_spikes=sum(counts),
        spike_counts=counts,
        trajectory=tuple(rows) if rows is not None else None,
    )
