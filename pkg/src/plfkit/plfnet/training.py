"""Training loop, checkpoint serialization, extraction.

Checkpoints are a single file: a 4-byte magic, a little-endian uint32 header
length, a JSON header (version, embedded conversion spec + hash, config,
array manifest, training curve) and a flat block of little-endian float64
parameters in manifest order.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import CheckpointMismatchError, CorpusError, TrainingDivergedError
from ..phonology import ConversionSpec, validate_spec
from ..signal import AugmentConfig, MelFrames, spec_augment
from .frontend import FrontEndConfig, frontend_forward
from .model import ModelParams, TrainConfig, init_params, loss_and_grads
from .scoring import PhoneScorer

_MAGIC = b"PLFK"
_VERSION = 1


class TrainUtterance(NamedTuple):
    utt_id: str
    frames: np.ndarray  # (T, n_mels)
    labels: np.ndarray  # (T,) phone indices


@dataclass
class Checkpoint:
    params: ModelParams
    config: TrainConfig
    curve: list  # (epoch, mean_loss, frame_accuracy) rows

    @property
    def spec(self) -> ConversionSpec:
        return self.params.spec

    @property
    def spec_hash(self) -> str:
        return self.params.spec.content_hash()


def config_to_dict(cfg: TrainConfig) -> dict:
    fe = cfg.frontend
    return {
        "e_param": cfg.e_param,
        "lambda1": cfg.lambda1,
        "lambda2": cfg.lambda2,
        "lambda3": cfg.lambda3,
        "enable_path2": cfg.enable_path2,
        "enable_path3": cfg.enable_path3,
        "learning_rate": cfg.learning_rate,
        "epochs": cfg.epochs,
        "seed": cfg.seed,
        "adam_beta1": cfg.adam_beta1,
        "adam_beta2": cfg.adam_beta2,
        "adam_eps": cfg.adam_eps,
        "augment": cfg.augment,
        "frontend": {
            "n_mels": fe.n_mels,
            "channels": list(fe.channels),
            "kernel": list(fe.kernel),
            "time_strides": list(fe.time_strides),
            "embed_dim": fe.embed_dim,
        },
    }


def config_from_dict(doc: dict) -> TrainConfig:
    doc = dict(doc)
    fe = doc.pop("frontend")
    frontend = FrontEndConfig(
        n_mels=fe["n_mels"],
        channels=tuple(fe["channels"]),
        kernel=tuple(fe["kernel"]),
        time_strides=tuple(fe["time_strides"]),
        embed_dim=fe["embed_dim"],
    )
    return TrainConfig(frontend=frontend, **doc)


class AdamState:
    """Adaptive-moment update, one slot per named parameter array."""

    def __init__(self, params: ModelParams, cfg: TrainConfig):
        self.cfg = cfg
        self.step = 0
        self.m = {name: np.zeros_like(arr) for name, arr in params.named_arrays()}
        self.v = {name: np.zeros_like(arr) for name, arr in params.named_arrays()}

    def update(self, params: ModelParams, grads: dict) -> None:
        cfg = self.cfg
        self.step += 1
        bc1 = 1.0 - cfg.adam_beta1 ** self.step
        bc2 = 1.0 - cfg.adam_beta2 ** self.step
        for name, arr in params.named_arrays():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= cfg.adam_beta1
            m += (1.0 - cfg.adam_beta1) * g
            v *= cfg.adam_beta2
            v += (1.0 - cfg.adam_beta2) * g * g
            arr -= cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + cfg.adam_eps)


def train(corpus: list[TrainUtterance], spec: ConversionSpec, cfg: TrainConfig) -> Checkpoint:
    """Weakly supervised training from frame-aligned phone labels.

    One optimizer step per utterance; epoch order reshuffled from the seed.
    Raises CorpusError on an empty corpus and TrainingDivergedError if the
    loss becomes non-finite.
    """
    if not corpus:
        raise CorpusError("training corpus contains no labeled utterances")
    for utt in corpus:
        if utt.labels is None or len(utt.labels) != len(utt.frames):
            raise CorpusError(f"utterance '{utt.utt_id}' lacks frame-aligned labels")

    seed_seq = np.random.SeedSequence(cfg.seed)
    init_rng, shuffle_rng, augment_rng = (np.random.default_rng(s) for s in seed_seq.spawn(3))
    params = init_params(spec, cfg, init_rng)
    scorer = PhoneScorer(spec, cfg.e_param)
    adam = AdamState(params, cfg)
    curve = []

    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(len(corpus))
        frame_total = 0
        correct_total = 0
        loss_weighted = 0.0
        for k in order:
            utt = corpus[k]
            frames = utt.frames
            if cfg.augment:
                aug_seed = int(augment_rng.integers(0, 2**31 - 1))
                frames = spec_augment(MelFrames(values=frames), AugmentConfig(seed=aug_seed)).values
            loss, grads, stats = loss_and_grads(params, frames, np.asarray(utt.labels), cfg, scorer)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, utterance '{utt.utt_id}': {loss}"
                )
            adam.update(params, grads)
            n = stats["n_frames"]
            frame_total += n
            correct_total += stats["n_correct_path1"]
            loss_weighted += loss * n
        curve.append((epoch, loss_weighted / max(frame_total, 1), correct_total / max(frame_total, 1)))

    return Checkpoint(params=params, config=cfg, curve=curve)


def framewise_accuracy(ckpt: Checkpoint, corpus: list[TrainUtterance]) -> float:
    """Path-1 argmax accuracy against center-aligned frame labels."""
    scorer = PhoneScorer(ckpt.spec, ckpt.config.e_param)
    correct = 0
    total = 0
    for utt in corpus:
        v = extract_plf(utt.frames, ckpt)
        scores, _ = scorer.forward(v)
        centers = ckpt.params.frontend.config.output_centers(utt.frames.shape[0])
        y = np.asarray(utt.labels)[centers]
        correct += int(np.sum(np.argmax(scores, axis=0) == y))
        total += y.size
    return correct / max(total, 1)


def extract_plf(frames: np.ndarray, ckpt: Checkpoint, expected_spec: ConversionSpec | None = None) -> np.ndarray:
    """Frame-level feature logits (F, T_out) for one utterance."""
    if expected_spec is not None and expected_spec.content_hash() != ckpt.spec_hash:
        raise CheckpointMismatchError(
            "checkpoint was trained against a different conversion spec"
        )
    emb = frontend_forward(ckpt.params.frontend, frames)
    return ckpt.params.plf_w @ emb.T + ckpt.params.plf_b[:, None]


def phone_scores_for(frames: np.ndarray, ckpt: Checkpoint) -> np.ndarray:
    """Path-1 phone scores (P, T_out); the decoding input for error rates."""
    v = extract_plf(frames, ckpt)
    scorer = PhoneScorer(ckpt.spec, ckpt.config.e_param)
    scores, _ = scorer.forward(v)
    return scores


def write_training_log(path, curve) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "frame_accuracy"])
        for epoch, loss, acc in curve:
            writer.writerow([epoch, f"{loss:.8f}", f"{acc:.6f}"])


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    arrays = list(ckpt.params.named_arrays())
    header = {
        "version": _VERSION,
        "spec": ckpt.spec.to_dict(),
        "spec_hash": ckpt.spec_hash,
        "config": config_to_dict(ckpt.config),
        "arrays": [{"name": name, "shape": list(arr.shape)} for name, arr in arrays],
        "curve": [list(row) for row in ckpt.curve],
    }
    blob = json.dumps(header).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for _, arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise CheckpointMismatchError(f"{path}: not a checkpoint file")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode())
        if header.get("version") != _VERSION:
            raise CheckpointMismatchError(f"{path}: unsupported version {header.get('version')}")
        raw = fh.read()
    spec_doc = header["spec"]
    spec = validate_spec(spec_doc["plfs"], spec_doc["groups"], spec_doc["phones"], spec_doc["matrix"])
    cfg = config_from_dict(header["config"])
    params = init_params(spec, cfg, np.random.default_rng(0))
    offset = 0
    loaded = {}
    for entry in header["arrays"]:
        size = int(np.prod(entry["shape"])) if entry["shape"] else 1
        chunk = np.frombuffer(raw, dtype="<f8", count=size, offset=offset * 8)
        loaded[entry["name"]] = chunk.reshape(entry["shape"])
        offset += size
    for name, arr in params.named_arrays():
        arr[...] = loaded[name]
    ckpt = Checkpoint(params=params, config=cfg, curve=[tuple(r) for r in header["curve"]])
    if ckpt.spec_hash != header["spec_hash"]:
        raise CheckpointMismatchError(f"{path}: spec hash mismatch in header")
    return ckpt
