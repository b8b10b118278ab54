"""Toy neural harness for FST-simulation pre-training and prefix tuning."""

from .data import (
    Example,
    SymbolMap,
    load_corpus,
    load_prefix,
    load_split_pairs,
    make_batch,
    save_prefix,
)
from .model import ModelConfig, SipModel, num_parameters
from .probe import LinearProbe, ProbeConfig, predict_states, probe_token_accuracy, train_probe
from .training import (
    FinetuneConfig,
    TrainConfig,
    average_prefix_init,
    finetune,
    pretrain,
    sequence_accuracy,
)

__all__ = [
    "Example", "SymbolMap", "load_corpus", "load_prefix", "load_split_pairs",
    "make_batch", "save_prefix", "ModelConfig", "SipModel", "num_parameters",
    "LinearProbe", "ProbeConfig", "predict_states", "probe_token_accuracy",
    "train_probe", "FinetuneConfig", "TrainConfig", "average_prefix_init",
    "finetune", "pretrain", "sequence_accuracy",
]
