"""Cross-validation protocol, grid search, baselines, metrics."""

import numpy as np
import pytest

from plfkit import downstream
from plfkit.downstream import (
    CLASSIFICATION,
    REGRESSION,
    ModelSpace,
    SpeakerRecord,
    default_model_space,
    evaluate,
    fit_predict,
    grid_search,
    make_folds,
    run_cross_validation,
)
from plfkit.errors import CorpusError, ShapeError


def _records(n, rng, dim=6, linear=True, classes=("a", "b")):
    recs = []
    for i in range(n):
        x = rng.normal(0, 1, dim)
        score = 50 + 10 * x[0] + rng.normal(0, 0.5) if linear else rng.uniform(0, 100)
        recs.append(
            SpeakerRecord(
                speaker_id=f"s{i:03d}",
                features=x,
                pathology=classes[i % len(classes)],
                intelligibility=float(np.clip(score, 0, 100)),
            )
        )
    return recs


def test_fold_sizes_122_speakers(rng):
    recs = _records(122, rng)
    plan = make_folds(recs, seed=0)
    sizes = sorted(len(f) for f in plan.folds)
    assert sizes == [24, 24, 24, 25, 25]
    all_ids = [sid for fold in plan.folds for sid in fold]
    assert sorted(all_ids) == sorted(r.speaker_id for r in recs)


def test_five_speakers_gives_singletons(rng):
    plan = make_folds(_records(5, rng), seed=3)
    assert all(len(f) == 1 for f in plan.folds)


def test_folds_deterministic(rng):
    recs = _records(30, rng)
    assert make_folds(recs, seed=9) == make_folds(recs, seed=9)
    assert make_folds(recs, seed=9) != make_folds(recs, seed=10)


def test_too_few_speakers(rng):
    with pytest.raises(CorpusError):
        make_folds(_records(4, rng), seed=0)


def test_stratified_folds_balance_classes(rng):
    recs = _records(40, rng, classes=("a", "b", "c", "d"))
    plan = make_folds(recs, seed=0, stratify=True)
    by_id = {r.speaker_id: r.pathology for r in recs}
    for fold in plan.folds:
        labels = [by_id[sid] for sid in fold]
        assert len(fold) == 8
        for cls in "abcd":
            assert labels.count(cls) == 2


def test_evaluate_hand_cases():
    assert evaluate(np.array([50.0, 50.0]), np.array([40.0, 60.0]), REGRESSION) == pytest.approx(10.0)
    assert evaluate(np.array(["a", "b"]), np.array(["a", "b"]), CLASSIFICATION) == 1.0
    truth = np.array([10.0, 20.0, 30.0])
    assert evaluate(np.full(3, truth.mean()), truth, REGRESSION) == pytest.approx(np.std(truth))
    with pytest.raises(ShapeError):
        evaluate(np.zeros(2), np.zeros(3), REGRESSION)


def test_baseline_predicts_mean_and_majority(rng):
    recs = _records(20, rng)
    pred = fit_predict("baseline", {}, recs[:15], recs[15:], REGRESSION)
    want = np.mean([r.intelligibility for r in recs[:15]])
    np.testing.assert_allclose(pred, want)

    labels = ["dys"] * 8 + ["healthy"] * 4 + ["laryng"] * 3
    for r, lab in zip(recs[:15], labels):
        r.pathology = lab
    pred = fit_predict("baseline", {}, recs[:15], recs[15:], CLASSIFICATION)
    assert set(pred) == {"dys"}


def test_baseline_majority_on_clinical_composition(rng):
    # 122-speaker composition: 26 healthy, 48 dysarthria, 26 hearing,
    # 15 laryngectomy, 6 voice, 1 glossectomy -> majority is dysarthria
    composition = (
        [("healthy", 26), ("dysarthria", 48), ("hearing disorder", 26),
         ("laryngectomy", 15), ("voice disorder", 6), ("glossectomy", 1)]
    )
    recs = []
    i = 0
    for label, count in composition:
        for _ in range(count):
            recs.append(SpeakerRecord(f"s{i:03d}", rng.normal(0, 1, 4), label, 70.0))
            i += 1
    assert len(recs) == 122
    pred = fit_predict("baseline", {}, recs, recs[:5], CLASSIFICATION)
    assert set(pred) == {"dysarthria"}


def test_baseline_accuracy_equals_majority_frequency(rng):
    recs = _records(24, rng, classes=("x", "y", "z"))
    res = run_cross_validation(
        recs, CLASSIFICATION, seed=0, space=ModelSpace(grids=(("baseline", ({},)),))
    )
    by_id = {r.speaker_id: r for r in recs}
    for fold_res, test_ids in zip(res.folds, res.plan.folds):
        train = [r for r in recs if r.speaker_id not in set(test_ids)]
        labels, counts = np.unique([r.pathology for r in train], return_counts=True)
        majority = labels[np.argmax(counts)]
        test_labels = [by_id[sid].pathology for sid in test_ids]
        want = test_labels.count(majority) / len(test_labels)
        assert fold_res.metric == pytest.approx(want)


def test_ridge_shrinks_to_mean_at_huge_alpha(rng):
    recs = _records(30, rng)
    pred = fit_predict("ridge", {"alpha": 1e12}, recs[:25], recs[25:], REGRESSION)
    want = np.mean([r.intelligibility for r in recs[:25]])
    np.testing.assert_allclose(pred, want, atol=1e-3)


def test_unregularized_ridge_rejected(rng):
    recs = _records(10, rng)
    with pytest.raises(ValueError):
        fit_predict("ridge", {"alpha": 0.0}, recs[:8], recs[8:], REGRESSION)


def test_regression_outputs_clamped(rng):
    recs = _records(20, rng)
    for r in recs[:15]:
        r.intelligibility = 99.0
    # extreme extrapolation target
    recs[15].features = recs[15].features + 100.0
    pred = fit_predict("ridge", {"alpha": 0.01}, recs[:15], recs[15:], REGRESSION)
    assert np.all(pred >= 0.0) and np.all(pred <= 100.0)


def test_grid_search_single_point(rng):
    recs = _records(20, rng)
    fam, params, audit = grid_search(
        recs[:15], recs[15:], ModelSpace(grids=(("ridge", ({"alpha": 1.0},)),)), REGRESSION
    )
    assert (fam, params) == ("ridge", {"alpha": 1.0})
    assert len(audit) == 1 and audit[0]["split"] == "val"


def test_grid_search_prefers_linear_on_linear_data(rng):
    recs = _records(60, rng, linear=True)
    fam, _, audit = grid_search(recs[:45], recs[45:], default_model_space(REGRESSION), REGRESSION)
    assert fam == "ridge"
    assert all(a["split"] == "val" for a in audit)
    assert len(audit) == 1 + 4 + 3 + 2  # baseline + ridge grid + tree grid + mlp grid


def test_grid_search_tie_keeps_first(rng):
    recs = _records(20, rng)
    space = ModelSpace(grids=(("ridge", ({"alpha": 1.0}, {"alpha": 1.0})),))
    fam, params, audit = grid_search(recs[:15], recs[15:], space, REGRESSION)
    assert audit[0]["metric"] == audit[1]["metric"]
    assert params == {"alpha": 1.0}


def test_grid_search_overlap_rejected(rng):
    recs = _records(10, rng)
    with pytest.raises(CorpusError):
        grid_search(recs, recs, default_model_space(REGRESSION), REGRESSION)


def test_grid_search_degenerate_val_warns_and_uses_train(rng):
    recs = _records(20, rng, classes=("a", "b"))
    val = [r for r in recs[15:]]
    for r in val:
        r.pathology = "a"
    with pytest.warns(UserWarning, match="single class"):
        _, _, audit = grid_search(recs[:15], val, default_model_space(CLASSIFICATION), CLASSIFICATION)
    assert all(a["split"] == "train" for a in audit)


def test_no_speaker_leakage(rng):
    recs = _records(25, rng)
    res = run_cross_validation(recs, REGRESSION, seed=1)
    seen = set()
    for fold in res.plan.folds:
        for sid in fold:
            assert sid not in seen
            seen.add(sid)
    assert len(seen) == 25


def test_cv_recovers_linear_signal(rng):
    recs = _records(60, rng, linear=True)
    res = run_cross_validation(recs, REGRESSION, seed=0)
    assert res.aggregate < 2.0  # noise sigma is 0.5
    assert res.task == REGRESSION
    assert len(res.folds) == 5


def test_cv_is_deterministic(rng):
    recs = _records(30, rng)
    r1 = run_cross_validation(recs, REGRESSION, seed=5)
    r2 = run_cross_validation(recs, REGRESSION, seed=5)
    assert [f.metric for f in r1.folds] == [f.metric for f in r2.folds]
    assert [f.family for f in r1.folds] == [f.family for f in r2.folds]


def test_results_csv(tmp_path, rng):
    recs = _records(25, rng)
    res = run_cross_validation(recs, REGRESSION, seed=1,
                               space=ModelSpace(grids=(("ridge", ({"alpha": 1.0},)),)))
    path = tmp_path / "results.csv"
    downstream.write_results_csv(path, res)
    lines = path.read_text().splitlines()
    assert lines[0] == "fold,family,params,rmse,n_test"
    assert lines[-1].startswith("aggregate")


def test_feature_dataset_roundtrip(tmp_path, rng):
    rows = [
        (f"s{i}", ["f1", "f2"], rng.normal(0, 1, 2), "healthy", 80.0 + i)
        for i in range(6)
    ]
    manifest = downstream.write_feature_dataset(tmp_path, rows)
    recs = downstream.load_feature_manifest(manifest)
    assert len(recs) == 6
    assert recs[0].speaker_id == "s0"
    assert recs[0].features.shape == (2,)
    assert recs[3].intelligibility == pytest.approx(83.0)


def test_inconsistent_feature_dims_rejected(tmp_path, rng):
    rows = [
        ("s0", ["f1", "f2"], rng.normal(0, 1, 2), "healthy", 80.0),
        ("s1", ["f1"], rng.normal(0, 1, 1), "healthy", 70.0),
    ]
    manifest = downstream.write_feature_dataset(tmp_path, rows)
    with pytest.raises(CorpusError):
        downstream.load_feature_manifest(manifest)
