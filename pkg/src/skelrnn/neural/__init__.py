from .lstm import LstmLayerParams, lstm_forward, lstm_step, sigmoid
from .network import (NetworkSpec, backward, build_spec, count_params, forward,
                      forward_hierarchical, forward_stacked, init_params, loss_and_grads,
                      param_shapes, parse_structure, predict_proba)
from .optim import TrainConfig, learning_rate, sgd_step

__all__ = [
    "LstmLayerParams", "lstm_forward", "lstm_step", "sigmoid",
    "NetworkSpec", "backward", "build_spec", "count_params", "forward",
    "forward_hierarchical", "forward_stacked", "init_params", "loss_and_grads",
    "param_shapes", "parse_structure", "predict_proba",
    "TrainConfig", "learning_rate", "sgd_step",
]
