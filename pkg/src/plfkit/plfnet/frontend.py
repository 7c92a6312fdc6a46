"""Convolutional front end: stacked valid 2D convolutions over (time, band)
followed by a fully-connected projection to per-frame acoustic embeddings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import TooShortError
from ..kernels import conv2d_backward, conv2d_forward


@dataclass(frozen=True)
class FrontEndConfig:
    n_mels: int = 24
    channels: tuple[int, ...] = (32, 64)
    kernel: tuple[int, int] = (3, 3)
    time_strides: tuple[int, ...] = (1, 2)
    embed_dim: int = 512

    def __post_init__(self):
        if len(self.channels) != len(self.time_strides):
            raise ValueError("channels and time_strides must have equal length")
        if self.n_mels - len(self.channels) * (self.kernel[1] - 1) < 1:
            raise ValueError("too many conv layers for the band axis")

    @property
    def mel_out(self) -> int:
        return self.n_mels - len(self.channels) * (self.kernel[1] - 1)

    @property
    def flat_dim(self) -> int:
        return self.channels[-1] * self.mel_out

    def min_frames(self) -> int:
        """Smallest input length producing at least one output frame."""
        t = 1
        for s in reversed(self.time_strides):
            t = (t - 1) * s + self.kernel[0]
        return t

    def out_frames(self, t: int) -> int:
        if t < self.min_frames():
            raise TooShortError(f"{t} frames < receptive field of {self.min_frames()}")
        for s in self.time_strides:
            t = (t - self.kernel[0]) // s + 1
        return t

    def output_centers(self, t: int) -> np.ndarray:
        """Input-frame index at the center of each output frame's field."""
        n_out = self.out_frames(t)
        offset, stride = 0, 1
        for s in self.time_strides:
            offset += ((self.kernel[0] - 1) // 2) * stride
            stride *= s
        return offset + stride * np.arange(n_out)


@dataclass
class ConvLayer:
    w: np.ndarray  # (cout, cin, kh, kw)
    b: np.ndarray  # (cout,)
    time_stride: int


@dataclass
class FrontEndParams:
    config: FrontEndConfig
    convs: list[ConvLayer] = field(default_factory=list)
    fc_w: np.ndarray = None
    fc_b: np.ndarray = None

    def named_arrays(self):
        for i, layer in enumerate(self.convs):
            yield f"conv{i}.w", layer.w
            yield f"conv{i}.b", layer.b
        yield "fc.w", self.fc_w
        yield "fc.b", self.fc_b


def init_frontend(cfg: FrontEndConfig, rng: np.random.Generator) -> FrontEndParams:
    kh, kw = cfg.kernel
    convs = []
    cin = 1
    for cout, s in zip(cfg.channels, cfg.time_strides):
        std = np.sqrt(2.0 / (cin * kh * kw))
        convs.append(
            ConvLayer(w=rng.normal(0.0, std, (cout, cin, kh, kw)), b=np.zeros(cout), time_stride=s)
        )
        cin = cout
    std = np.sqrt(2.0 / cfg.flat_dim)
    fc_w = rng.normal(0.0, std, (cfg.embed_dim, cfg.flat_dim))
    fc_b = np.zeros(cfg.embed_dim)
    return FrontEndParams(config=cfg, convs=convs, fc_w=fc_w, fc_b=fc_b)


def frontend_forward(params: FrontEndParams, frames: np.ndarray, want_cache: bool = False):
    """frames: (T, n_mels) -> embeddings (T_out, embed_dim).

    Raises TooShortError when T is below the receptive field.
    """
    cfg = params.config
    t, m = frames.shape
    if m != cfg.n_mels:
        raise ValueError(f"expected {cfg.n_mels} bands, got {m}")
    cfg.out_frames(t)  # validates length
    x = np.ascontiguousarray(frames[None, :, :], dtype=np.float64)
    conv_inputs, conv_pre = [], []
    h = x
    for layer in params.convs:
        conv_inputs.append(h)
        z = conv2d_forward(h, layer.w, layer.b, layer.time_stride, 1)
        conv_pre.append(z)
        h = np.maximum(z, 0.0)
    c, t_out, m_out = h.shape
    feat = h.transpose(1, 0, 2).reshape(t_out, c * m_out)
    z_fc = feat @ params.fc_w.T + params.fc_b
    emb = np.maximum(z_fc, 0.0)
    if not want_cache:
        return emb
    cache = {
        "conv_inputs": conv_inputs,
        "conv_pre": conv_pre,
        "feat": feat,
        "z_fc": z_fc,
        "h_shape": (c, t_out, m_out),
    }
    return emb, cache


def frontend_backward(params: FrontEndParams, cache: dict, d_emb: np.ndarray) -> dict:
    """Gradients of the embedding outputs w.r.t. every front-end parameter."""
    grads: dict[str, np.ndarray] = {}
    dz_fc = d_emb * (cache["z_fc"] > 0)
    grads["fc.w"] = dz_fc.T @ cache["feat"]
    grads["fc.b"] = dz_fc.sum(axis=0)
    dfeat = dz_fc @ params.fc_w
    c, t_out, m_out = cache["h_shape"]
    dh = dfeat.reshape(t_out, c, m_out).transpose(1, 0, 2)
    for i in reversed(range(len(params.convs))):
        layer = params.convs[i]
        dz = np.ascontiguousarray(dh * (cache["conv_pre"][i] > 0))
        dx, dw, db = conv2d_backward(cache["conv_inputs"][i], layer.w, layer.time_stride, 1, dz)
        grads[f"conv{i}.w"] = dw
        grads[f"conv{i}.b"] = db
        dh = dx
    return grads


def smallest_preactivation(cache: dict) -> float:
    """Smallest |preactivation| across all ReLUs; used by the gradient checker
    to reject configurations where finite differences would straddle a kink."""
    vals = [np.min(np.abs(z)) for z in cache["conv_pre"]]
    vals.append(np.min(np.abs(cache["z_fc"])))
    return float(min(vals))
