"""Neuroevolution of spiking divergence-based landing controllers.

The package splits into a spiking network substrate (`network`), a
randomized vertical landing world (`env`), multi-objective evolution with a
pan-generational archive (`evolve`), controller characterization
(`analysis`), on-disk formats (`store`), figure rendering (`figures`), and
a command-line front end (`cli`).
"""

from .analysis import (
    P_FAST,
    P_SLOW,
    PController,
    PControllerSpec,
    RobustnessReport,
    evaluate_robustness,
    record_activity,
    steady_state_response,
    transient_response,
)
from .env import (
    EnvParams,
    EnvState,
    EpisodeResult,
    PointPairSample,
    noise_free_params,
    run_episode,
    sample_env_params,
    size_divergence,
)
from .evolve import (
    ArchiveEntry,
    EvolutionConfig,
    Individual,
    MutationConfig,
    ObjectiveVector,
    ParetoArchive,
    merge_archives,
    mutate,
    run_evolution,
)
from .network import (
    DecoderParams,
    Genome,
    NetworkState,
    NeuronParams,
    SNNController,
    decode,
    encode,
    forward,
    lif_step,
)

__version__ = "0.1.0"

__all__ = [
    "P_FAST",
    "P_SLOW",
    "PController",
    "PControllerSpec",
    "RobustnessReport",
    "evaluate_robustness",
    "record_activity",
    "steady_state_response",
    "transient_response",
    "EnvParams",
    "EnvState",
    "EpisodeResult",
    "PointPairSample",
    "noise_free_params",
    "run_episode",
    "sample_env_params",
    "size_divergence",
    "ArchiveEntry",
    "EvolutionConfig",
    "Individual",
    "MutationConfig",
    "ObjectiveVector",
    "ParetoArchive",
    "merge_archives",
    "mutate",
    "run_evolution",
    "DecoderParams",
    "Genome",
    "NetworkState",
    "NeuronParams",
    "SNNController",
    "decode",
    "encode",
    "forward",
    "lif_step",
    "__version__",
]
