"""Spiking network substrate: current encoding, LIF dynamics, trace decoding.

Controllers are small feed-forward maps from a divergence observation to a
thrust setpoint. Two sign-split currents per observation channel feed a
hidden layer of adaptive leaky integrate-and-fire neurons (their threshold
rises with firing and decays back), whose spikes drive a single plain LIF
output neuron. The output spike train is low-pass filtered into a trace and
affinely scaled to a bounded setpoint in units of g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ALPHA_RANGE",
    "TAU_RANGE",
    "THRESH_RANGE",
    "MAX_HIDDEN",
    "N_INPUTS",
    "ConfigurationError",
    "InvalidObservationError",
    "NeuronParams",
    "DecoderParams",
    "Genome",
    "NetworkState",
    "new_state",
    "reset_state",
    "encode",
    "lif_step",
    "decode",
    "forward",
    "SNNController",
]

# Clamping ranges shared by genome validation and mutation.
ALPHA_RANGE = (0.0, 2.0)
TAU_RANGE = (0.0, 1.0)
THRESH_RANGE = (0.0, 1.0)

N_INPUTS = 4
MAX_HIDDEN = 20


class ConfigurationError(ValueError):
    """Genome or state is internally inconsistent."""


class InvalidObservationError(ValueError):
    """Observation fed to the network is not a finite number."""


def _check_range(name: str, value: float, lo: float, hi: float) -> None:
    if not (math.isfinite(value) and lo <= value <= hi):
        raise ConfigurationError(f"{name}={value!r} outside [{lo}, {hi}]")


@dataclass(frozen=True)
class NeuronParams:
    """Per-neuron LIF coefficients.

    ``alpha_mem``/``tau_mem`` scale the input current and the membrane leak.
    Adaptive neurons bump their threshold by ``alpha_thresh`` per emitted
    spike and let it decay by ``tau_thresh`` each step; plain neurons hold it
    constant at ``thresh_init``.
    """

    alpha_mem: float
    tau_mem: float
    alpha_thresh: float
    tau_thresh: float
    thresh_init: float

    def __post_init__(self) -> None:
        _check_range("alpha_mem", self.alpha_mem, *ALPHA_RANGE)
        _check_range("tau_mem", self.tau_mem, *TAU_RANGE)
        _check_range("alpha_thresh", self.alpha_thresh, *ALPHA_RANGE)
        _check_range("tau_thresh", self.tau_thresh, *TAU_RANGE)
        _check_range("thresh_init", self.thresh_init, *THRESH_RANGE)


@dataclass(frozen=True)
class DecoderParams:
    """Output trace filter plus the affine range it is scaled onto."""

    alpha_trace: float
    tau_trace: float
    out_min: float = -0.8
    out_max: float = 0.5

    def __post_init__(self) -> None:
        _check_range("alpha_trace", self.alpha_trace, *ALPHA_RANGE)
        _check_range("tau_trace", self.tau_trace, *TAU_RANGE)
        if not (math.isfinite(self.out_min) and math.isfinite(self.out_max)):
            raise ConfigurationError("decoder output bounds must be finite")
        if not self.out_min < self.out_max:
            raise ConfigurationError(
                f"decoder range is empty: [{self.out_min}, {self.out_max}]"
            )


def _as_float_tuple(values) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    if not all(math.isfinite(v) for v in out):
        raise ConfigurationError("weights must be finite")
    return out


@dataclass(frozen=True)
class Genome:
    """Immutable description of one controller network.

    ``w_in`` has one row per encoder current; columns address hidden neurons,
    or the single output neuron when ``n_hidden`` is zero (the hidden layer
    is bypassed entirely in that case and ``w_out`` is empty).
    """

    n_hidden: int
    w_in: tuple[tuple[float, ...], ...]
    w_out: tuple[float, ...]
    hidden_neurons: tuple[NeuronParams, ...]
    output_neuron: NeuronParams
    decoder: DecoderParams

    def __post_init__(self) -> None:
        if not 0 <= self.n_hidden <= MAX_HIDDEN:
            raise ConfigurationError(f"n_hidden={self.n_hidden} outside 0..{MAX_HIDDEN}")
        cols = self.n_hidden if self.n_hidden else 1
        w_in = tuple(_as_float_tuple(row) for row in self.w_in)
        if len(w_in) != N_INPUTS or any(len(row) != cols for row in w_in):
            raise ConfigurationError(
                f"w_in must be {N_INPUTS}x{cols} for n_hidden={self.n_hidden}"
            )
        w_out = _as_float_tuple(self.w_out)
        if len(w_out) != self.n_hidden:
            raise ConfigurationError(
                f"w_out must have {self.n_hidden} entries, got {len(w_out)}"
            )
        hidden = tuple(self.hidden_neurons)
        if len(hidden) != self.n_hidden:
            raise ConfigurationError(
                f"hidden_neurons must have {self.n_hidden} entries, got {len(hidden)}"
            )
        if not all(isinstance(p, NeuronParams) for p in hidden):
            raise ConfigurationError("hidden_neurons must hold NeuronParams")
        if not isinstance(self.output_neuron, NeuronParams):
            raise ConfigurationError("output_neuron must be NeuronParams")
        if not isinstance(self.decoder, DecoderParams):
            raise ConfigurationError("decoder must be DecoderParams")
        object.__setattr__(self, "w_in", w_in)
        object.__setattr__(self, "w_out", w_out)
        object.__setattr__(self, "hidden_neurons", hidden)

    @property
    def n_neurons(self) -> int:
        """Spiking neurons in the network (hidden plus the output)."""
        return self.n_hidden + 1


@dataclass
class NetworkState:
    """Mutable per-network run state; index ``n_hidden`` is the output neuron."""

    membrane: list[float]
    threshold: list[float]
    spiked: list[int]
    trace: float
    spike_counts: list[int]


def new_state(genome: Genome) -> NetworkState:
    n = genome.n_neurons
    thresholds = [p.thresh_init for p in genome.hidden_neurons]
    thresholds.append(genome.output_neuron.thresh_init)
    return NetworkState(
        membrane=[0.0] * n,
        threshold=thresholds,
        spiked=[0] * n,
        trace=0.0,
        spike_counts=[0] * n,
    )


def reset_state(state: NetworkState, genome: Genome) -> None:
    """Restore `state` to the value `new_state(genome)` would produce."""
    fresh = new_state(genome)
    state.membrane = fresh.membrane
    state.threshold = fresh.threshold
    state.spiked = fresh.spiked
    state.trace = 0.0
    state.spike_counts = fresh.spike_counts


def encode(d_obs: float, dd_obs: float) -> tuple[float, float, float, float]:
    """Sign-split the observation pair into four nonnegative currents.

    Order: positive/negative divergence, then positive/negative divergence
    rate. Exactly one of each pair is nonzero (both zero at 0).
    """
    if not (math.isfinite(d_obs) and math.isfinite(dd_obs)):
        raise InvalidObservationError(f"non-finite observation ({d_obs}, {dd_obs})")
    return (
        abs(max(0.0, d_obs)),
        abs(min(0.0, d_obs)),
        abs(max(0.0, dd_obs)),
        abs(min(0.0, dd_obs)),
    )


def lif_step(
    membrane: float,
    threshold: float,
    params: NeuronParams,
    forcing: float,
    adaptive: bool,
) -> tuple[float, float, int]:
    """Advance one neuron a single step; returns (membrane, threshold, spike).

    The membrane leaks multiplicatively and integrates the forcing current;
    crossing strictly above the pre-update threshold emits a spike and resets
    the membrane to zero. Adaptive neurons then decay and (on a spike) bump
    the threshold; plain neurons leave it untouched.
    """
    membrane = membrane * params.tau_mem + params.alpha_mem * forcing
    if membrane > threshold:
        spike = 1
        membrane = 0.0
    else:
        spike = 0
    if adaptive:
        threshold = threshold * params.tau_thresh + params.alpha_thresh * spike
    return membrane, threshold, spike


def decode(trace: float, decoder: DecoderParams, spike: int) -> tuple[float, float]:
    """Fold a spike into the output trace and scale it to a setpoint.

    The trace is updated before scaling. Returns (setpoint, new trace); the
    setpoint is clamped to the decoder range.
    """
    trace = trace * decoder.tau_trace + decoder.alpha_trace * spike
    lo = decoder.out_min
    hi = decoder.out_max
    action = lo + (hi - lo) * trace
    if action > hi:
        action = hi
    elif action < lo:
        action = lo
    return action, trace


def forward(genome: Genome, state: NetworkState, d_obs: float, dd_obs: float) -> float:
    """Run one full network step and return the thrust setpoint.

    Pure function of (genome, state, observations) apart from mutating
    `state` in place. Composed of encode/lif_step/decode so the pieces stay
    individually testable; `SNNController.step` is the loop-optimized twin.
    """
    n = genome.n_hidden
    if len(state.membrane) != n + 1:
        raise ConfigurationError(
            f"state holds {len(state.membrane)} neurons, genome needs {n + 1}"
        )
    c0, c1, c2, c3 = encode(d_obs, dd_obs)
    w_in = genome.w_in
    out_forcing = 0.0
    if n:
        for j in range(n):
            forcing = (
                w_in[0][j] * c0 + w_in[1][j] * c1 + w_in[2][j] * c2 + w_in[3][j] * c3
            )
            m, th, sp = lif_step(
                state.membrane[j], state.threshold[j], genome.hidden_neurons[j],
                forcing, adaptive=True,
            )
            state.membrane[j] = m
            state.threshold[j] = th
            state.spiked[j] = sp
            if sp:
                state.spike_counts[j] += 1
                out_forcing += genome.w_out[j]
    else:
        out_forcing = (
            w_in[0][0] * c0 + w_in[1][0] * c1 + w_in[2][0] * c2 + w_in[3][0] * c3
        )
    m, th, sp = lif_step(
        state.membrane[n], state.threshold[n], genome.output_neuron,
        out_forcing, adaptive=False,
    )
    state.membrane[n] = m
    state.threshold[n] = th
    state.spiked[n] = sp
    if sp:
        state.spike_counts[n] += 1
    action, trace = decode(state.trace, genome.decoder, sp)
    state.trace = trace
    return action


class SNNController:
    """Stateful runner binding a genome to its mutable network state.

    ``step`` is arithmetic-identical to :func:`forward` but caches the genome
    in flat lists so long episode loops stay cheap.
    """

    __slots__ = (
        "genome", "state", "_n",
        "_w0", "_w1", "_w2", "_w3", "_wout",
        "_am", "_tm", "_at", "_tt",
        "_o_am", "_o_tm",
        "_d_alpha", "_d_tau", "_d_lo", "_d_hi", "_d_span",
    )

    def __init__(self, genome: Genome):
        self.genome = genome
        self._n = genome.n_hidden
        self._w0, self._w1, self._w2, self._w3 = (list(r) for r in genome.w_in)
        self._wout = list(genome.w_out)
        hidden = genome.hidden_neurons
        self._am = [p.alpha_mem for p in hidden]
        self._tm = [p.tau_mem for p in hidden]
        self._at = [p.alpha_thresh for p in hidden]
        self._tt = [p.tau_thresh for p in hidden]
        out = genome.output_neuron
        self._o_am = out.alpha_mem
        self._o_tm = out.tau_mem
        dec = genome.decoder
        self._d_alpha = dec.alpha_trace
        self._d_tau = dec.tau_trace
        self._d_lo = dec.out_min
        self._d_hi = dec.out_max
        self._d_span = dec.out_max - dec.out_min
        self.state = new_state(genome)

    def reset(self) -> None:
        reset_state(self.state, self.genome)

    @property
    def spike_counts(self) -> list[int]:
        return self.state.spike_counts

    @property
    def total_spikes(self) -> int:
        return sum(self.state.spike_counts)

    def step(self, d_obs: float, dd_obs: float) -> float:
        if not (math.isfinite(d_obs) and math.isfinite(dd_obs)):
            raise InvalidObservationError(f"non-finite observation ({d_obs}, {dd_obs})")
        c0 = abs(max(0.0, d_obs))
        c1 = abs(min(0.0, d_obs))
        c2 = abs(max(0.0, dd_obs))
        c3 = abs(min(0.0, dd_obs))
        st = self.state
        mem = st.membrane
        th = st.threshold
        spk = st.spiked
        counts = st.spike_counts
        n = self._n
        out_forcing = 0.0
        if n:
            w0 = self._w0
            w1 = self._w1
            w2 = self._w2
            w3 = self._w3
            wout = self._wout
            am = self._am
            tm = self._tm
            at = self._at
            tt = self._tt
            for j in range(n):
                forcing = w0[j] * c0 + w1[j] * c1 + w2[j] * c2 + w3[j] * c3
                m = mem[j] * tm[j] + am[j] * forcing
                t = th[j]
                if m > t:
                    counts[j] += 1
                    spk[j] = 1
                    mem[j] = 0.0
                    th[j] = t * tt[j] + at[j]
                    out_forcing += wout[j]
                else:
                    spk[j] = 0
                    mem[j] = m
                    th[j] = t * tt[j]
        else:
            out_forcing = (
                self._w0[0] * c0 + self._w1[0] * c1
                + self._w2[0] * c2 + self._w3[0] * c3
            )
        m = mem[n] * self._o_tm + self._o_am * out_forcing
        if m > th[n]:
            counts[n] += 1
            spk[n] = 1
            mem[n] = 0.0
            s_out = 1
        else:
            spk[n] = 0
            mem[n] = m
            s_out = 0
        trace = st.trace * self._d_tau + self._d_alpha * s_out
        st.trace = trace
        action = self._d_lo + self._d_span * trace
        if action > self._d_hi:
            action = self._d_hi
        elif action < self._d_lo:
            action = self._d_lo
        return action
