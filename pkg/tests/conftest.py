"""Shared builders for the test suite."""

import numpy as np
import pytest

from divland.network import DecoderParams, Genome, NeuronParams


def make_neuron(alpha_mem=0.2, tau_mem=0.8, alpha_thresh=0.2, tau_thresh=0.8,
                thresh_init=0.2) -> NeuronParams:
    return NeuronParams(alpha_mem, tau_mem, alpha_thresh, tau_thresh, thresh_init)


def make_genome(n_hidden=0, w_in=None, w_out=None, neuron=None, decoder=None) -> Genome:
    """Small genome with explicit weights; defaults to an all-zero direct net."""
    cols = n_hidden if n_hidden else 1
    if w_in is None:
        w_in = tuple((0.0,) * cols for _ in range(4))
    if w_out is None:
        w_out = (0.0,) * n_hidden
    if neuron is None:
        neuron = make_neuron()
    if decoder is None:
        decoder = DecoderParams(1.0, 0.8)
    return Genome(
        n_hidden=n_hidden,
        w_in=w_in,
        w_out=w_out,
        hidden_neurons=(neuron,) * n_hidden,
        output_neuron=neuron,
        decoder=decoder,
    )


class ConstantController:
    """Non-spiking stub that always commands the same setpoint."""

    spike_counts = ()

    def __init__(self, setpoint: float = 0.0):
        self.setpoint = setpoint
        self.steps = 0

    def reset(self):
        self.steps = 0

    def step(self, d_obs, dd_obs):
        self.steps += 1
        return self.setpoint


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
