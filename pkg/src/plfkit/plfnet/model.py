"""Parameter container and the combined three-path training loss.

Path 1 scores phones through the fixed conversion matrix, path 2 through the
scaled matrix plus per-phone affine calibration, path 3 classifies phones
directly from the acoustic embedding. Each enabled path contributes a
softmax negative log-likelihood over phones, weighted by its lambda, and the
backward pass produces gradients for every trainable array by hand.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..phonology import ConversionSpec, ScalingMatrix
from .frontend import (
    FrontEndConfig,
    FrontEndParams,
    frontend_backward,
    frontend_forward,
    init_frontend,
)
from .scoring import PhoneScorer


@dataclass(frozen=True)
class TrainConfig:
    e_param: float = 4.0
    lambda1: float = 1.0
    lambda2: float = 1.0
    lambda3: float = 1.0
    enable_path2: bool = True
    enable_path3: bool = True
    learning_rate: float = 1e-3
    epochs: int = 30
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    augment: bool = False
    frontend: FrontEndConfig = field(default_factory=FrontEndConfig)

    def __post_init__(self):
        if self.e_param <= 0:
            raise ValueError("e_param must be positive")
        if min(self.lambda1, self.lambda2, self.lambda3) < 0:
            raise ValueError("path weights must be nonnegative")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        active = (self.lambda1 > 0) \
            or (self.enable_path2 and self.lambda2 > 0) \
            or (self.enable_path3 and self.lambda3 > 0)
        if not active:
            raise ValueError("no training path is enabled")

    def enabled_paths(self) -> list[int]:
        paths = [1]
        if self.enable_path2:
            paths.append(2)
        if self.enable_path3:
            paths.append(3)
        return paths

    def with_ablations(self, no_scaling_matrix: bool = False, no_direct_path: bool = False) -> "TrainConfig":
        return replace(self, enable_path2=self.enable_path2 and not no_scaling_matrix,
                       enable_path3=self.enable_path3 and not no_direct_path)


@dataclass
class ModelParams:
    spec: ConversionSpec
    frontend: FrontEndParams
    plf_w: np.ndarray      # (F, embed)
    plf_b: np.ndarray      # (F,)
    direct_w: np.ndarray   # (P, embed)
    direct_b: np.ndarray   # (P,)
    scaling: ScalingMatrix  # raw (P, F)
    calib_a: np.ndarray    # (P,)
    calib_b: np.ndarray    # (P,)

    def named_arrays(self):
        yield from self.frontend.named_arrays()
        yield "plf.w", self.plf_w
        yield "plf.b", self.plf_b
        yield "direct.w", self.direct_w
        yield "direct.b", self.direct_b
        yield "scaling.raw", self.scaling.raw
        yield "calib.a", self.calib_a
        yield "calib.b", self.calib_b


def init_params(spec: ConversionSpec, cfg: TrainConfig, rng: np.random.Generator) -> ModelParams:
    fe = init_frontend(cfg.frontend, rng)
    embed = cfg.frontend.embed_dim
    f, p = spec.n_features, spec.n_phones
    plf_w = rng.normal(0.0, 1.0 / np.sqrt(embed), (f, embed))
    direct_w = rng.normal(0.0, 1.0 / np.sqrt(embed), (p, embed))
    return ModelParams(
        spec=spec,
        frontend=fe,
        plf_w=plf_w,
        plf_b=np.zeros(f),
        direct_w=direct_w,
        direct_b=np.zeros(p),
        scaling=ScalingMatrix.zeros(p, f),
        calib_a=np.ones(p),
        calib_b=np.zeros(p),
    )


def nll_softmax(scores: np.ndarray, labels: np.ndarray):
    """Mean softmax NLL over frames. scores: (P, T), labels: (T,) ints.

    Returns (loss, d_scores). A single phone gives loss 0 exactly.
    """
    p, t = scores.shape
    if np.any(labels < 0) or np.any(labels >= p):
        raise IndexError(f"phone label outside [0, {p})")
    shifted = scores - scores.max(axis=0, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=0, keepdims=True))
    logp = shifted - logz
    loss = -logp[labels, np.arange(t)].mean()
    d = np.exp(logp)
    d[labels, np.arange(t)] -= 1.0
    return loss, d / t


def loss_and_grads(params: ModelParams, frames: np.ndarray, labels: np.ndarray,
                   cfg: TrainConfig, scorer: PhoneScorer | None = None):
    """Combined loss, gradients and per-frame stats for one utterance.

    frames: (T, n_mels); labels: (T,) frame-aligned phone indices at the
    input rate (labels are sampled at the receptive-field centers of the
    front-end output frames).
    """
    if scorer is None:
        scorer = PhoneScorer(params.spec, cfg.e_param)
    fe_cfg = params.frontend.config
    centers = fe_cfg.output_centers(frames.shape[0])
    labels = np.asarray(labels)
    if labels.shape[0] != frames.shape[0]:
        raise ValueError("labels must be frame-aligned with the input frames")
    y = labels[centers]

    emb, fe_cache = frontend_forward(params.frontend, frames, want_cache=True)
    v = params.plf_w @ emb.T + params.plf_b[:, None]  # (F, T_out)

    grads: dict[str, np.ndarray] = {name: np.zeros_like(arr) for name, arr in params.named_arrays()}
    d_emb = np.zeros_like(emb)
    d_v = np.zeros_like(v)
    total = 0.0
    losses = {}

    s1, cache1 = scorer.forward(v)
    loss1, ds1 = nll_softmax(s1, y)
    losses["path1"] = loss1
    if cfg.lambda1 > 0:
        total += cfg.lambda1 * loss1
        dv1, _, _, _ = scorer.backward(cache1, cfg.lambda1 * ds1)
        d_v += dv1

    if cfg.enable_path2:
        s2, cache2 = scorer.forward(v, params.scaling.raw, (params.calib_a, params.calib_b))
        loss2, ds2 = nll_softmax(s2, y)
        losses["path2"] = loss2
        if cfg.lambda2 > 0:
            total += cfg.lambda2 * loss2
            dv2, draw, da, db = scorer.backward(cache2, cfg.lambda2 * ds2)
            d_v += dv2
            grads["scaling.raw"] += draw
            grads["calib.a"] += da
            grads["calib.b"] += db

    if cfg.enable_path3:
        s3 = params.direct_w @ emb.T + params.direct_b[:, None]
        loss3, ds3 = nll_softmax(s3, y)
        losses["path3"] = loss3
        if cfg.lambda3 > 0:
            total += cfg.lambda3 * loss3
            ds3 = cfg.lambda3 * ds3
            grads["direct.w"] += ds3 @ emb
            grads["direct.b"] += ds3.sum(axis=1)
            d_emb += ds3.T @ params.direct_w

    grads["plf.w"] += d_v @ emb
    grads["plf.b"] += d_v.sum(axis=1)
    d_emb += d_v.T @ params.plf_w
    grads.update(frontend_backward(params.frontend, fe_cache, d_emb))

    n_correct = int(np.sum(np.argmax(s1, axis=0) == y))
    stats = {"losses": losses, "n_frames": y.size, "n_correct_path1": n_correct}
    return total, grads, stats
