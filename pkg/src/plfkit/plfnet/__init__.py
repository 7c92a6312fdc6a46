"""Trainable model: conv front end, feature bottleneck, scoring paths, training."""

from .frontend import FrontEndConfig, FrontEndParams, init_frontend  # noqa: F401
from .model import ModelParams, TrainConfig, init_params, loss_and_grads  # noqa: F401
from .scoring import PhoneScorer, compress, grouped_posterior, phone_scores, plf_posterior  # noqa: F401
from .training import (  # noqa: F401
    Checkpoint,
    TrainUtterance,
    extract_plf,
    framewise_accuracy,
    load_checkpoint,
    phone_scores_for,
    save_checkpoint,
    train,
)
