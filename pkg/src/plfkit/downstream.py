"""Intelligibility regression and pathology classification harness.

Protocol: speaker-level five-fold cross-validation; within each fold, 20% of
the training speakers form a validation set for exhaustive grid search with
the model family treated as one more hyperparameter; the winner is retrained
on the full training partition and evaluated on the held-out test partition.
Accuracy is reported for classification, RMSE for regression (predictions
clamped to the 0-100 score range), aggregated as the mean over folds.

Model families are scikit-learn estimators behind a fixed enumeration order;
the trivial baseline (training mean / majority class) is implemented here.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression, Ridge
from sklearn.neural_network import MLPClassifier, MLPRegressor
from sklearn.tree import DecisionTreeClassifier, DecisionTreeRegressor

from .errors import CorpusError, ShapeError

SCORE_RANGE = (0.0, 100.0)
REGRESSION = "intelligibility"
CLASSIFICATION = "pathology"


@dataclass
class SpeakerRecord:
    speaker_id: str
    features: np.ndarray
    pathology: str
    intelligibility: float


@dataclass(frozen=True)
class CVPlan:
    folds: tuple[tuple[str, ...], ...]
    val_fraction: float
    seed: int


@dataclass(frozen=True)
class ModelSpace:
    """Ordered (family, grid point) enumeration."""

    grids: tuple[tuple[str, tuple[dict, ...]], ...]

    def points(self):
        for family, grid in self.grids:
            for params in grid:
                yield family, params


def default_model_space(task: str) -> ModelSpace:
    shrink = tuple({"alpha": a} for a in (0.01, 0.1, 1.0, 10.0))
    depths = tuple({"max_depth": d} for d in (2, 4, 8))
    hidden = tuple({"hidden": h} for h in (16, 64))
    linear_family = "ridge" if task == REGRESSION else "logistic"
    return ModelSpace(
        grids=(
            ("baseline", ({},)),
            (linear_family, shrink),
            ("tree", depths),
            ("mlp", hidden),
        )
    )


class _Baseline:
    """Predicts the training mean (regression) or majority class."""

    def __init__(self, task: str):
        self.task = task
        self.value = None

    def fit(self, x, y):
        if self.task == REGRESSION:
            self.value = float(np.mean(y))
        else:
            labels, counts = np.unique(y, return_counts=True)
            self.value = labels[int(np.argmax(counts))]  # ties -> smallest label
        return self

    def predict(self, x):
        return np.full(len(x), self.value)


def _make_estimator(family: str, params: dict, task: str, seed: int):
    if family == "baseline":
        return _Baseline(task)
    if family == "ridge":
        if params["alpha"] <= 0:
            raise ValueError("ridge must stay regularized (alpha > 0)")
        return Ridge(alpha=params["alpha"])
    if family == "logistic":
        if params["alpha"] <= 0:
            raise ValueError("logistic regression must stay regularized (alpha > 0)")
        return LogisticRegression(C=1.0 / params["alpha"], max_iter=5000)
    if family == "tree":
        cls = DecisionTreeRegressor if task == REGRESSION else DecisionTreeClassifier
        # leaf-size floor: unregularized deep trees are pure variance at
        # the ~100-speaker scale this harness targets
        return cls(max_depth=params["max_depth"], min_samples_leaf=5, random_state=seed)
    if family == "mlp":
        cls = MLPRegressor if task == REGRESSION else MLPClassifier
        return cls(hidden_layer_sizes=(params["hidden"],), random_state=seed, max_iter=3000)
    raise ValueError(f"unknown model family '{family}'")


def _targets(records: list[SpeakerRecord], task: str):
    if task == REGRESSION:
        return np.array([r.intelligibility for r in records], dtype=np.float64)
    if task == CLASSIFICATION:
        return np.array([r.pathology for r in records])
    raise ValueError(f"unknown task '{task}'")


def _standardizer(train_x: np.ndarray):
    mu = train_x.mean(axis=0)
    sd = train_x.std(axis=0)
    sd = np.where(sd < 1e-12, 1.0, sd)
    return lambda x: (x - mu) / sd


def _feature_matrix(records: list[SpeakerRecord]) -> np.ndarray:
    dims = {r.features.size for r in records}
    if len(dims) != 1:
        raise CorpusError(f"inconsistent feature dimensions across speakers: {sorted(dims)}")
    return np.vstack([np.asarray(r.features, dtype=np.float64).ravel() for r in records])


def make_folds(records: list[SpeakerRecord], seed: int, k: int = 5, stratify: bool = False) -> CVPlan:
    """Deterministic speaker-level partition; fold sizes differ by at most 1."""
    ids = sorted({r.speaker_id for r in records})
    if len(ids) != len(records):
        raise CorpusError("duplicate speaker ids in the dataset")
    if len(ids) < k:
        raise CorpusError(f"need at least {k} speakers for {k}-fold CV, got {len(ids)}")
    rng = np.random.default_rng(seed)
    if stratify:
        by_class: dict[str, list[str]] = {}
        for r in sorted(records, key=lambda r: r.speaker_id):
            by_class.setdefault(r.pathology, []).append(r.speaker_id)
        folds: list[list[str]] = [[] for _ in range(k)]
        slot = 0
        for label in sorted(by_class):
            for sid in rng.permutation(by_class[label]):
                folds[slot % k].append(str(sid))
                slot += 1
    else:
        perm = rng.permutation(ids)
        folds = [list(map(str, chunk)) for chunk in np.array_split(perm, k)]
    return CVPlan(folds=tuple(tuple(f) for f in folds), val_fraction=0.2, seed=seed)


def _split_train_val(train: list[SpeakerRecord], fraction: float, rng: np.random.Generator):
    ids = sorted(r.speaker_id for r in train)
    n_val = max(1, int(round(fraction * len(ids))))
    val_ids = set(map(str, rng.permutation(ids)[:n_val]))
    inner = [r for r in train if r.speaker_id not in val_ids]
    val = [r for r in train if r.speaker_id in val_ids]
    return inner, val


def evaluate(predictions, truth, task: str) -> float:
    predictions = np.asarray(predictions)
    truth = np.asarray(truth)
    if predictions.shape != truth.shape or predictions.size < 1:
        raise ShapeError(f"predictions {predictions.shape} vs truth {truth.shape}")
    if task == REGRESSION:
        diff = predictions.astype(np.float64) - truth.astype(np.float64)
        return float(np.sqrt(np.mean(diff * diff)))
    return float(np.mean(predictions == truth))


def fit_predict(family: str, params: dict, train: list[SpeakerRecord],
                test: list[SpeakerRecord], task: str, seed: int = 0) -> np.ndarray:
    """Fit on train, predict test; regression outputs clamped to [0, 100]."""
    x_train = _feature_matrix(train)
    x_test = _feature_matrix(test)
    if x_train.shape[1] != x_test.shape[1]:
        raise CorpusError("train/test feature dimensions differ")
    scale = _standardizer(x_train)
    est = _make_estimator(family, params, task, seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        est.fit(scale(x_train), _targets(train, task))
        pred = est.predict(scale(x_test))
    if task == REGRESSION:
        pred = np.clip(np.asarray(pred, dtype=np.float64), *SCORE_RANGE)
    return pred


def grid_search(train: list[SpeakerRecord], val: list[SpeakerRecord],
                space: ModelSpace, task: str, seed: int = 0):
    """Exhaustive search; selection by validation RMSE/accuracy.

    Returns (family, params, audit) where audit records every evaluated point
    and which split its metric came from. Ties keep the first point in
    enumeration order. A single-class classification validation set triggers
    a warning and falls back to selection on the training metric.
    """
    if not train or not val:
        raise CorpusError("grid search needs non-empty train and validation sets")
    if {r.speaker_id for r in train} & {r.speaker_id for r in val}:
        raise CorpusError("train and validation speakers overlap")
    select_split = "val"
    if task == CLASSIFICATION and len({r.pathology for r in val}) < 2:
        warnings.warn("validation split has a single class; selecting on the training metric")
        select_split = "train"
    eval_records = val if select_split == "val" else train
    truth = _targets(eval_records, task)
    best = None
    audit = []
    for family, params in space.points():
        pred = fit_predict(family, params, train, eval_records, task, seed)
        metric = evaluate(pred, truth, task)
        audit.append({"family": family, "params": dict(params), "split": select_split, "metric": metric})
        better = best is None or (metric < best[2] if task == REGRESSION else metric > best[2])
        if better:
            best = (family, params, metric)
    return best[0], best[1], audit


@dataclass
class FoldResult:
    fold: int
    family: str
    params: dict
    metric: float
    n_test: int


@dataclass
class CVResult:
    task: str
    folds: list[FoldResult]
    aggregate: float
    plan: CVPlan
    audits: list = field(default_factory=list)


def run_cross_validation(records: list[SpeakerRecord], task: str, seed: int = 0,
                         k: int = 5, stratify: bool = False,
                         space: ModelSpace | None = None) -> CVResult:
    """Full protocol over one dataset; asserts speaker-leakage freedom."""
    if space is None:
        space = default_model_space(task)
    plan = make_folds(records, seed=seed, k=k, stratify=stratify)
    by_id = {r.speaker_id: r for r in records}
    fold_results = []
    audits = []
    rng = np.random.default_rng(seed + 1)
    for i, test_ids in enumerate(plan.folds):
        test_set = set(test_ids)
        train_all = [r for r in records if r.speaker_id not in test_set]
        test = [by_id[sid] for sid in test_ids]
        inner, val = _split_train_val(train_all, plan.val_fraction, rng)
        train_ids = {r.speaker_id for r in train_all}
        val_ids = {r.speaker_id for r in val}
        if (test_set & train_ids) or (test_set & val_ids):
            raise AssertionError(f"speaker leakage detected in fold {i}")
        family, params, audit = grid_search(inner, val, space, task, seed)
        pred = fit_predict(family, params, train_all, test, task, seed)
        metric = evaluate(pred, _targets(test, task), task)
        fold_results.append(FoldResult(fold=i, family=family, params=dict(params), metric=metric, n_test=len(test)))
        audits.append(audit)
    aggregate = float(np.mean([f.metric for f in fold_results]))
    return CVResult(task=task, folds=fold_results, aggregate=aggregate, plan=plan, audits=audits)


def write_results_csv(path, result: CVResult) -> None:
    metric_name = "rmse" if result.task == REGRESSION else "accuracy"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fold", "family", "params", metric_name, "n_test"])
        for f in result.folds:
            writer.writerow([f.fold, f.family, repr(f.params), f"{f.metric:.6f}", f.n_test])
        writer.writerow(["aggregate", "", "", f"{result.aggregate:.6f}", sum(f.n_test for f in result.folds)])


# ---------------------------------------------------------------------------
# feature-manifest IO (speaker_id, feature_file, pathology, intelligibility)


def write_feature_dataset(outdir, rows) -> Path:
    """rows: iterable of (speaker_id, feature_names, values, pathology, score).

    Writes one small CSV per speaker plus the manifest; returns manifest path.
    """
    outdir = Path(outdir)
    (outdir / "features").mkdir(parents=True, exist_ok=True)
    manifest = outdir / "feature_manifest.csv"
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["speaker_id", "feature_file", "pathology", "intelligibility"])
        for speaker_id, names, values, pathology, score in rows:
            feature_file = f"features/{speaker_id}.csv"
            with open(outdir / feature_file, "w", newline="") as ff:
                w2 = csv.writer(ff)
                w2.writerow(names)
                w2.writerow([f"{v:.10g}" for v in values])
            writer.writerow([speaker_id, feature_file, pathology, f"{score:.4f}"])
    return manifest


def load_feature_manifest(manifest_path) -> list[SpeakerRecord]:
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    records = []
    with open(manifest_path, newline="") as fh:
        for row in csv.DictReader(fh):
            with open(base / row["feature_file"], newline="") as ff:
                reader = csv.reader(ff)
                next(reader)  # header
                values = np.array([float(x) for x in next(reader)])
            records.append(
                SpeakerRecord(
                    speaker_id=row["speaker_id"],
                    features=values,
                    pathology=row["pathology"],
                    intelligibility=float(row["intelligibility"]),
                )
            )
    if not records:
        raise CorpusError(f"{manifest_path}: empty feature manifest")
    _feature_matrix(records)  # dimension consistency check
    return records
