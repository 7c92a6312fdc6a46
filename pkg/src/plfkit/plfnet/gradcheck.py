"""Finite-difference validation of the hand-derived gradients.

Draws random small problems (few phones/features/frames, a miniature front
end), evaluates the combined three-path loss, and compares the analytic
gradient of every parameter against central differences. Configurations with
a ReLU preactivation close to zero are redrawn: central differences straddle
the kink there and measure nothing useful.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..phonology import ConversionSpec, validate_spec
from .frontend import FrontEndConfig, frontend_forward, smallest_preactivation
from .model import ModelParams, TrainConfig, init_params, loss_and_grads
from .scoring import PhoneScorer

KINK_MARGIN = 5e-3


def flatten_arrays(named) -> np.ndarray:
    return np.concatenate([np.asarray(arr, dtype=np.float64).ravel() for _, arr in named])


def assign_params(params: ModelParams, vec: np.ndarray) -> None:
    off = 0
    for _, arr in params.named_arrays():
        n = arr.size
        arr[...] = vec[off : off + n].reshape(arr.shape)
        off += n


def random_small_spec(rng: np.random.Generator, n_phones: int, n_features: int) -> ConversionSpec:
    """Random conversion spec exercising grouped, fractional and zero entries."""
    names = [f"f{i}" for i in range(n_features)]
    groups: dict[str, list[str]] = {"horizontal": [], "vertical": []}
    groupable = n_features - 2  # keep at least two non-grouped features
    if groupable >= 2 and rng.random() < 0.8:
        groups["horizontal"] = names[-2:]
    if groupable >= 4 and rng.random() < 0.8:
        groups["vertical"] = names[-4:-2]
    grouped_idx = {names.index(n) for g in groups.values() for n in g}

    nongrouped = [f for f in range(n_features) if f not in grouped_idx]
    matrix = np.zeros((n_phones, n_features))
    for p in range(n_phones):
        for f in nongrouped:
            matrix[p, f] = rng.choice([-1.0, 0.0, 1.0])
        if grouped_idx and rng.random() < 0.5:  # vowel-like row
            for members in groups.values():
                if not members:
                    continue
                for name in members:
                    matrix[p, names.index(name)] = rng.choice([0.0, 0.5, 1.0])
                if all(matrix[p, names.index(n)] == 0 for n in members):
                    matrix[p, names.index(rng.choice(members))] = 1.0
        if np.all(matrix[p] == 0):
            matrix[p, rng.choice(nongrouped)] = 1.0
    return validate_spec(names, groups, [f"p{i}" for i in range(n_phones)], matrix)


_GRADCHECK_FRONTEND = FrontEndConfig(
    n_mels=6, channels=(2, 3), kernel=(3, 3), time_strides=(1, 1), embed_dim=8
)


def _draw_trial(rng: np.random.Generator):
    n_phones = int(rng.integers(2, 7))
    n_features = int(rng.integers(3, 9))
    spec = random_small_spec(rng, n_phones, n_features)
    cfg = TrainConfig(
        e_param=float(rng.choice([0.5, 4.0, 50.0])),
        frontend=_GRADCHECK_FRONTEND,
        epochs=0,
    )
    params = init_params(spec, cfg, rng)
    params.scaling.raw[...] = 0.3 * rng.normal(size=params.scaling.raw.shape)
    params.calib_a[...] = 1.0 + 0.2 * rng.normal(size=params.calib_a.shape)
    params.calib_b[...] = 0.2 * rng.normal(size=params.calib_b.shape)
    t = 5
    frames = rng.normal(0.0, 1.0, (t, _GRADCHECK_FRONTEND.n_mels))
    labels = rng.integers(0, n_phones, t)
    return spec, cfg, params, frames, labels


@dataclass
class GradCheckReport:
    n_trials: int
    eps: float
    tol: float
    max_rel_error: float = 0.0
    n_redrawn: int = 0
    per_trial: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tol


def check_gradients(n_trials: int = 100, seed: int = 0, eps: float = 1e-4, tol: float = 1e-4) -> GradCheckReport:
    """Compare analytic gradients with central differences over random trials.

    Relative error per parameter is |g_a - g_fd| / max(1, |g_a|, |g_fd|);
    the report carries the maximum over all parameters of all trials.
    """
    report = GradCheckReport(n_trials=n_trials, eps=eps, tol=tol)
    streams = np.random.SeedSequence(seed).spawn(n_trials)
    for trial, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        for _ in range(64):
            spec, cfg, params, frames, labels = _draw_trial(rng)
            _, cache = frontend_forward(params.frontend, frames, want_cache=True)
            if smallest_preactivation(cache) >= KINK_MARGIN:
                break
            report.n_redrawn += 1
        scorer = PhoneScorer(spec, cfg.e_param)

        _, grads, _ = loss_and_grads(params, frames, labels, cfg, scorer)
        analytic = flatten_arrays((n, grads[n]) for n, _ in params.named_arrays())

        theta = flatten_arrays(params.named_arrays())
        numeric = np.zeros_like(theta)
        for i in range(theta.size):
            for sign in (+1.0, -1.0):
                theta[i] += sign * eps
                assign_params(params, theta)
                loss, _, _ = loss_and_grads(params, frames, labels, cfg, scorer)
                numeric[i] += sign * loss
                theta[i] -= sign * eps
            numeric[i] /= 2.0 * eps
        assign_params(params, theta)

        denom = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
        rel = float(np.max(np.abs(analytic - numeric) / denom))
        report.per_trial.append(rel)
        report.max_rel_error = max(report.max_rel_error, rel)
    return report
