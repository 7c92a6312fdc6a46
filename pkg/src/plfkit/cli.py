"""Command-line entry point.

Subcommands: synth, train, extract, per, histogram, crossval, analyze,
gradcheck. Every run writes a summary.json into its output directory with
the effective configuration, input hashes and headline metrics, so any run
can be reproduced from its summary alone. Exit codes: 0 success, 1 domain
error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import downstream, features, phonology, synthcorpus
from .errors import PlfkitError
from .plfnet import gradcheck as gradcheck_mod
from .plfnet.model import TrainConfig
from .plfnet.training import (
    TrainUtterance,
    config_to_dict,
    extract_plf,
    load_checkpoint,
    phone_scores_for,
    save_checkpoint,
    train,
    write_training_log,
)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_summary(outdir: Path, command: str, config: dict, inputs: dict, metrics: dict, artifacts: dict):
    summary = {
        "command": command,
        "config": config,
        "inputs": {name: {"path": str(p), "sha256": _sha256(p)} for name, p in inputs.items()},
        "metrics": metrics,
        "artifacts": {name: str(p) for name, p in artifacts.items()},
    }
    path = outdir / "summary.json"
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return path


def _load_spec_arg(args) -> tuple[phonology.ConversionSpec, Path]:
    path = Path(args.spec) if args.spec else phonology.demo_spec_path()
    return phonology.load_spec(path), path


def _parse_pathology(flag: str) -> synthcorpus.SpeakerClass:
    # format: name=Plf1+Plf2:count[:severity]
    try:
        name, rest = flag.split("=", 1)
        parts = rest.split(":")
        plfs = tuple(p for p in parts[0].split("+") if p)
        count = int(parts[1])
        severity = float(parts[2]) if len(parts) > 2 else 1.0
    except (ValueError, IndexError) as e:
        raise PlfkitError(
            f"bad --pathology '{flag}', expected name=Plf1+Plf2:count[:severity]"
        ) from e
    return synthcorpus.SpeakerClass(name=name, count=count, suppressed=plfs, severity=severity)


def cmd_synth(args) -> int:
    spec, spec_path = _load_spec_arg(args)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.kind == "frames":
        classes = [synthcorpus.SpeakerClass("healthy", args.healthy)]
        if args.pathology:
            classes.extend(_parse_pathology(f) for f in args.pathology)
        else:
            classes.extend(
                [
                    synthcorpus.SpeakerClass("nasal_deficit", 4, suppressed=("Nasal",)),
                    synthcorpus.SpeakerClass("alveolar_deficit", 4, suppressed=("Alveolar",)),
                ]
                if {"Nasal", "Alveolar"} <= set(spec.inventory.names)
                else []
            )
        cfg = synthcorpus.SynthConfig(
            utterances_per_speaker=args.utterances_per_speaker,
            phones_per_utterance=args.phones_per_utterance,
            frames_per_phone_mean=args.frames_per_phone,
            frames_per_phone_jitter=args.jitter,
            noise_sigma=args.noise_sigma,
            speaker_classes=tuple(classes),
            seed=args.seed,
        )
        records = synthcorpus.generate(cfg, spec)
        manifest = synthcorpus.write_corpus(records, spec, outdir)
        metrics = {
            "n_utterances": len(records),
            "n_speakers": len({r.speaker_id for r in records}),
            "n_frames": int(sum(r.frames.shape[0] for r in records)),
        }
        config = {
            "kind": "frames", "seed": args.seed, "noise_sigma": args.noise_sigma,
            "utterances_per_speaker": args.utterances_per_speaker,
            "phones_per_utterance": args.phones_per_utterance,
            "frames_per_phone": args.frames_per_phone, "jitter": args.jitter,
            "speaker_classes": [
                {"name": c.name, "count": c.count, "suppressed": list(c.suppressed), "severity": c.severity}
                for c in classes
            ],
        }
    else:
        cfg = synthcorpus.PLFCorpusConfig(
            n_speakers=args.n_speakers,
            frames_per_utterance=args.frames_per_utterance,
            target_plf=args.target_plf,
            score_slope=args.score_slope,
            score_intercept=args.score_intercept,
            score_noise_sigma=args.score_noise,
            seed=args.seed,
        )
        records = synthcorpus.generate_plf_corpus(cfg, spec)
        manifest = synthcorpus.write_plf_corpus(records, spec.inventory.names, outdir)
        scores = [r.intelligibility for r in records]
        metrics = {
            "n_speakers": len(records),
            "score_mean": float(np.mean(scores)),
            "score_std": float(np.std(scores)),
        }
        config = {
            "kind": "plf", "seed": args.seed, "n_speakers": args.n_speakers,
            "frames_per_utterance": args.frames_per_utterance, "target_plf": args.target_plf,
            "score_slope": args.score_slope, "score_intercept": args.score_intercept,
            "score_noise": args.score_noise,
        }
    summary = _write_summary(outdir, "synth", config, {"spec": spec_path}, metrics, {"manifest": manifest})
    print(f"wrote {manifest} ({metrics}) and {summary}")
    return 0


def _train_config_from_args(args) -> TrainConfig:
    return TrainConfig(
        e_param=args.e_param,
        lambda1=args.lambda1,
        lambda2=args.lambda2,
        lambda3=args.lambda3,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        seed=args.seed,
        augment=args.augment,
    ).with_ablations(no_scaling_matrix=args.no_scaling_matrix, no_direct_path=args.no_direct_path)


def cmd_train(args) -> int:
    spec, spec_path = _load_spec_arg(args)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    records = synthcorpus.read_corpus(args.manifest, spec)
    corpus = [TrainUtterance(r.utt_id, r.frames, r.labels) for r in records]
    cfg = _train_config_from_args(args)
    ckpt = train(corpus, spec, cfg)
    ckpt_path = outdir / "plfnet.ckpt"
    save_checkpoint(ckpt_path, ckpt)
    log_path = outdir / "training_log.csv"
    write_training_log(log_path, ckpt.curve)
    final = ckpt.curve[-1] if ckpt.curve else (None, None, None)
    metrics = {
        "epochs_run": len(ckpt.curve),
        "final_loss": final[1],
        "final_frame_accuracy": final[2],
        "enabled_paths": cfg.enabled_paths(),
        "spec_hash": ckpt.spec_hash,
    }
    summary = _write_summary(
        outdir, "train", config_to_dict(cfg),
        {"spec": spec_path, "manifest": Path(args.manifest)},
        metrics, {"checkpoint": ckpt_path, "training_log": log_path},
    )
    print(f"trained {len(corpus)} utterances -> {ckpt_path}; summary {summary}")
    return 0


def cmd_extract(args) -> int:
    outdir = Path(args.outdir)
    (outdir / "plf").mkdir(parents=True, exist_ok=True)
    ckpt = load_checkpoint(args.checkpoint)
    expected = phonology.load_spec(args.spec) if args.spec else None
    records = synthcorpus.read_corpus(args.manifest, ckpt.spec)
    manifest = outdir / "plf_manifest.csv"
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["speaker_id", "plf_file", "pathology", "intelligibility"])
        for rec in records:
            v = extract_plf(rec.frames, ckpt, expected_spec=expected)
            plf_file = f"plf/{rec.utt_id}.csv"
            synthcorpus.write_plf_logits_csv(outdir / plf_file, ckpt.spec.inventory.names, v)
            writer.writerow([rec.speaker_id, plf_file, rec.pathology, f"{rec.intelligibility:.4f}"])
    metrics = {"n_utterances": len(records), "n_features": ckpt.spec.n_features}
    summary = _write_summary(
        outdir, "extract", {"seed": None},
        {"manifest": Path(args.manifest), "checkpoint": Path(args.checkpoint)},
        metrics, {"plf_manifest": manifest},
    )
    print(f"extracted {len(records)} utterances -> {manifest}; summary {summary}")
    return 0


def cmd_per(args) -> int:
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    ckpt = load_checkpoint(args.checkpoint)
    records = synthcorpus.read_corpus(args.manifest, ckpt.spec)
    per_rows = []
    by_speaker: dict[str, list] = {}
    meta: dict[str, tuple] = {}
    for rec in records:
        scores = phone_scores_for(rec.frames, ckpt)
        hyp = features.decode_phones(scores)
        feat = features.per_features(list(rec.phone_seq), hyp)
        per_rows.append((rec.utt_id, feat))
        by_speaker.setdefault(rec.speaker_id, []).append(feat.as_array())
        meta[rec.speaker_id] = (rec.pathology, rec.intelligibility)
    utt_csv = outdir / "per_features.csv"
    features.write_per_features_csv(utt_csv, per_rows)
    dataset_rows = [
        (sid, features.PERFeature.FIELD_NAMES, np.mean(vals, axis=0), meta[sid][0], meta[sid][1])
        for sid, vals in sorted(by_speaker.items())
    ]
    manifest = downstream.write_feature_dataset(outdir, dataset_rows)
    mean_per = float(np.mean([f.per for _, f in per_rows]))
    metrics = {"n_utterances": len(per_rows), "mean_per": mean_per, "feature_dim": 4}
    summary = _write_summary(
        outdir, "per", {"seed": None},
        {"manifest": Path(args.manifest), "checkpoint": Path(args.checkpoint)},
        metrics, {"per_features": utt_csv, "feature_manifest": manifest},
    )
    print(f"mean PER {mean_per:.4f} over {len(per_rows)} utterances; summary {summary}")
    return 0


def _grouped_plf_records(manifest_path):
    """Group logit-corpus rows by speaker, concatenating frames."""
    rows = synthcorpus.read_plf_corpus(manifest_path)
    grouped: dict[str, synthcorpus.PLFRecord] = {}
    for rec in rows:
        if rec.speaker_id in grouped:
            prev = grouped[rec.speaker_id]
            prev.logits = np.concatenate([prev.logits, rec.logits], axis=1)
        else:
            grouped[rec.speaker_id] = rec
    return list(grouped.values())


def cmd_histogram(args) -> int:
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    records = _grouped_plf_records(args.plf_manifest)
    names, _ = synthcorpus.read_plf_logits_csv(
        Path(args.plf_manifest).parent / _first_plf_file(args.plf_manifest)
    )
    hist_rows = []
    dataset_rows = []
    for rec in records:
        feat = features.plf_histogram(rec.logits)
        hist_rows.append((rec.speaker_id, feat))
        dataset_rows.append(
            (rec.speaker_id, features.HistogramFeature.column_names(names), feat.flat(),
             rec.pathology, rec.intelligibility)
        )
    hist_csv = outdir / "histogram_features.csv"
    features.write_histogram_features_csv(hist_csv, names, hist_rows)
    manifest = downstream.write_feature_dataset(outdir, dataset_rows)
    metrics = {"n_speakers": len(records), "feature_dim": len(names) * 7}
    summary = _write_summary(
        outdir, "histogram", {"seed": None},
        {"plf_manifest": Path(args.plf_manifest)},
        metrics, {"histogram_features": hist_csv, "feature_manifest": manifest},
    )
    print(f"histogram features for {len(records)} speakers ({metrics['feature_dim']} dims); summary {summary}")
    return 0


def _first_plf_file(manifest_path) -> str:
    with open(manifest_path, newline="") as fh:
        row = next(csv.DictReader(fh))
    return row["plf_file"]


def cmd_crossval(args) -> int:
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    records = downstream.load_feature_manifest(args.feature_manifest)
    space = downstream.default_model_space(args.task)
    if args.families:
        keep = set(args.families.split(","))
        space = downstream.ModelSpace(grids=tuple(g for g in space.grids if g[0] in keep))
        if not space.grids:
            raise PlfkitError(f"--families {args.families} matches no model family")
    result = downstream.run_cross_validation(
        records, task=args.task, seed=args.seed, stratify=args.stratify, space=space
    )
    results_csv = outdir / f"crossval_{args.task}.csv"
    downstream.write_results_csv(results_csv, result)
    metric_name = "rmse" if args.task == downstream.REGRESSION else "accuracy"
    metrics = {
        "task": args.task,
        metric_name: result.aggregate,
        "per_fold": [f.metric for f in result.folds],
        "chosen_families": [f.family for f in result.folds],
    }
    config = {"seed": args.seed, "task": args.task, "stratify": args.stratify,
              "families": args.families or "all", "k": 5}
    summary = _write_summary(
        outdir, "crossval", config, {"feature_manifest": Path(args.feature_manifest)},
        metrics, {"results": results_csv},
    )
    print(f"{args.task} aggregate {metric_name}: {result.aggregate:.4f}; summary {summary}")
    return 0


def cmd_analyze(args) -> int:
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    records = _grouped_plf_records(args.plf_manifest)
    names, _ = synthcorpus.read_plf_logits_csv(
        Path(args.plf_manifest).parent / _first_plf_file(args.plf_manifest)
    )
    mean_logits = np.vstack([rec.logits.mean(axis=1) for rec in records])
    hists = np.stack([features.plf_histogram(rec.logits).values for rec in records])
    scores = np.array([rec.intelligibility for rec in records])
    report = features.correlation_report(names, mean_logits, hists, scores)
    report_csv = outdir / "correlation_report.csv"
    features.write_correlation_report_csv(report_csv, report)
    best = max(report, key=lambda r: abs(r.best_bin_pcc))
    metrics = {
        "n_speakers": len(records),
        "best_plf": best.plf,
        "best_bin": best.best_bin,
        "best_bin_pcc": best.best_bin_pcc,
    }
    summary = _write_summary(
        outdir, "analyze", {"seed": None}, {"plf_manifest": Path(args.plf_manifest)},
        metrics, {"correlation_report": report_csv},
    )
    print(f"best bin: {best.plf}/{best.best_bin} r={best.best_bin_pcc:.3f}; summary {summary}")
    return 0


def cmd_gradcheck(args) -> int:
    report = gradcheck_mod.check_gradients(n_trials=args.trials, seed=args.seed, eps=args.eps, tol=args.tol)
    print(
        f"gradient check: {report.n_trials} trials, max relative error "
        f"{report.max_rel_error:.3e} (tolerance {report.tol:g}, {report.n_redrawn} redrawn)"
    )
    if args.outdir:
        outdir = Path(args.outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        _write_summary(
            outdir, "gradcheck",
            {"seed": args.seed, "trials": args.trials, "eps": args.eps, "tol": args.tol},
            {},
            {"max_rel_error": report.max_rel_error, "passed": report.passed,
             "n_redrawn": report.n_redrawn},
            {},
        )
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plfkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--spec", help="conversion spec JSON (default: packaged demo spec)")
    p.add_argument("--outdir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kind", choices=["frames", "plf"], default="frames")
    p.add_argument("--healthy", type=int, default=10)
    p.add_argument(
        "--pathology", action="append",
        help="name=Plf1+Plf2:count[:severity]; repeatable. When omitted, demo "
             "nasal/alveolar deficit classes are added if the spec has those features",
    )
    p.add_argument("--utterances-per-speaker", type=int, default=4)
    p.add_argument("--phones-per-utterance", type=int, default=12)
    p.add_argument("--frames-per-phone", type=int, default=8)
    p.add_argument("--jitter", type=int, default=3)
    p.add_argument("--noise-sigma", type=float, default=0.3)
    p.add_argument("--n-speakers", type=int, default=100)
    p.add_argument("--frames-per-utterance", type=int, default=400)
    p.add_argument("--target-plf", default="Alveolar")
    p.add_argument("--score-slope", type=float, default=100.0)
    p.add_argument("--score-intercept", type=float, default=10.0)
    p.add_argument("--score-noise", type=float, default=5.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the feature bottleneck model")
    p.add_argument("--manifest", required=True)
    p.add_argument("--spec", help="conversion spec JSON (default: packaged demo spec)")
    p.add_argument("--outdir", required=True)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--e-param", type=float, default=4.0)
    p.add_argument("--lambda1", type=float, default=1.0)
    p.add_argument("--lambda2", type=float, default=1.0)
    p.add_argument("--lambda3", type=float, default=1.0)
    p.add_argument("--no-scaling-matrix", action="store_true",
                   help="ablation: disable the scaled-matrix path (path 2)")
    p.add_argument("--no-direct-path", action="store_true",
                   help="ablation: disable direct phone classification (path 3)")
    p.add_argument("--augment", action="store_true", help="apply masking augmentation while training")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("extract", help="extract frame-level feature logits")
    p.add_argument("--manifest", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--spec", help="verify the checkpoint matches this spec")
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("per", help="phone-error-rate features per utterance/speaker")
    p.add_argument("--manifest", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_per)

    p = sub.add_parser("histogram", help="histogram features from feature logits")
    p.add_argument("--plf-manifest", required=True)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("crossval", help="five-fold CV with grid search")
    p.add_argument("--feature-manifest", required=True)
    p.add_argument("--task", choices=[downstream.REGRESSION, downstream.CLASSIFICATION], required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stratify", action="store_true")
    p.add_argument("--families", help="comma-separated subset of model families")
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("analyze", help="correlation report of features vs intelligibility")
    p.add_argument("--plf-manifest", required=True)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--eps", type=float, default=1e-4)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--outdir")
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PlfkitError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
