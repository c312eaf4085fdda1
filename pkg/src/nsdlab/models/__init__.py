"""Student/expert networks over flat parameter vectors."""

from .networks import Model, build_model, classifier_features, forward_loss, param_distance, param_shapes
from .params import ParamEntry, ParamLayout, ParamVector, unflatten_node
from .training import TrainResult, accuracy, sgd_step, sgd_train


__all__ = [
    "Model",
    "ParamEntry",
    "ParamLayout",
    "ParamVector",
    "TrainResult",
    "accuracy",
    "build_model",
    "classifier_features",
    "forward_loss",
    "param_distance",
    "param_shapes",
    "sgd_step",
    "sgd_train",
    "unflatten_node",
]
