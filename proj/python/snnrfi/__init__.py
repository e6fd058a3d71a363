"""Spiking-network RFI flagging toolkit."""

from ._core import (
    ConfigError,
    DataError,
    GenerationError,
    GeneratorConfig,
    Network,
    ShapeError,
    TrainingError,
    UndefinedMetric,
    auprc,
    auroc,
    decode,
    describe,
    encode,
    encode_target,
    encoding_methods,
    evaluate,
    generate,
    lif_step,
    normalize,
    pareto_front,
    run_experiment,
    sample_trial,
)

__version__ = "0.1.0"
