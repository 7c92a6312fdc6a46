"""Synthetic corpora with known ground truth.

Two generators:

* ``generate`` builds frame-level acoustic corpora: each phone is a Gaussian
  cluster in the 24-dim frame space whose first F coordinates carry the sign
  of the phone's expected feature values; "pathological" speaker classes have
  chosen feature cues collapsed toward neutral, and intelligibility follows a
  penalty rule over the suppressed set. Used to exercise training end to end.

* ``generate_plf_corpus`` builds feature-logit corpora directly: each
  speaker's target-feature top-bin mass is controlled exactly, and the
  intelligibility score is a known linear function of that mass plus noise.
  Used to exercise the downstream regression/correlation machinery.

All randomness flows from per-speaker seeds derived from the config seed, so
output is reproducible utterance by utterance.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CorpusError
from .phonology import ConversionSpec

FRAME_DIMS = 24


@dataclass(frozen=True)
class SpeakerClass:
    name: str
    count: int
    suppressed: tuple[str, ...] = ()
    severity: float = 1.0  # 1.0 collapses the cue fully to neutral


@dataclass(frozen=True)
class SynthConfig:
    utterances_per_speaker: int = 4
    phones_per_utterance: int = 12
    frames_per_phone_mean: int = 8
    frames_per_phone_jitter: int = 3
    noise_sigma: float = 0.3
    cue_scale: float = 1.0
    penalty_per_plf: float = 15.0
    score_noise_sigma: float = 2.0
    speaker_classes: tuple[SpeakerClass, ...] = (
        SpeakerClass("healthy", 10),
        SpeakerClass("nasal_deficit", 4, suppressed=("Nasal",)),
        SpeakerClass("alveolar_deficit", 4, suppressed=("Alveolar",)),
    )
    seed: int = 0


@dataclass
class UtteranceRecord:
    utt_id: str
    speaker_id: str
    frames: np.ndarray        # (T, FRAME_DIMS)
    labels: np.ndarray        # (T,) phone indices
    phone_seq: tuple[int, ...]  # collapsed true phone sequence
    pathology: str
    intelligibility: float


def _speaker_cues(spec: ConversionSpec, cfg: SynthConfig, suppressed_idx, severity: float) -> np.ndarray:
    cues = np.zeros((spec.n_phones, FRAME_DIMS))
    cues[:, : spec.n_features] = np.sign(spec.matrix) * cfg.cue_scale
    # suppression: the speaker fails to *produce* the feature, so only the
    # feature-bearing phones lose their cue; phones where the feature is
    # expected absent are unaffected
    for j in suppressed_idx:
        bearing = spec.matrix[:, j] > 0
        cues[bearing, j] *= 1.0 - severity
    return cues


def generate(cfg: SynthConfig, spec: ConversionSpec) -> list[UtteranceRecord]:
    """Frame-level corpus with exact frame-aligned labels."""
    if spec.n_features > FRAME_DIMS:
        raise CorpusError(f"spec has {spec.n_features} features, more than {FRAME_DIMS} frame dims")
    for cls in cfg.speaker_classes:
        for name in cls.suppressed:
            if name not in spec.inventory.names:
                raise CorpusError(f"suppression map names unknown feature '{name}'")
        if not 0.0 <= cls.severity <= 1.0:
            raise CorpusError(f"severity for class '{cls.name}' must be in [0, 1]")
        if cls.count < 0:
            raise CorpusError(f"negative speaker count for class '{cls.name}'")

    n_speakers = sum(cls.count for cls in cfg.speaker_classes)
    streams = iter(np.random.SeedSequence(cfg.seed).spawn(n_speakers))
    records: list[UtteranceRecord] = []
    speaker_no = 0
    for cls in cfg.speaker_classes:
        suppressed_idx = [spec.inventory.index(n) for n in cls.suppressed]
        for _ in range(cls.count):
            rng = np.random.default_rng(next(streams))
            speaker_id = f"spk{speaker_no:03d}_{cls.name}"
            speaker_no += 1
            cues = _speaker_cues(spec, cfg, suppressed_idx, cls.severity)
            penalty = cfg.penalty_per_plf * cls.severity * len(suppressed_idx)
            score = 100.0 - penalty + rng.normal(0.0, cfg.score_noise_sigma)
            score = float(np.clip(score, 0.0, 100.0))
            for u in range(cfg.utterances_per_speaker):
                phones = []
                for _ in range(cfg.phones_per_utterance):
                    p = int(rng.integers(0, spec.n_phones))
                    while phones and p == phones[-1]:
                        p = int(rng.integers(0, spec.n_phones))
                    phones.append(p)
                labels = []
                for p in phones:
                    jitter = int(rng.integers(-cfg.frames_per_phone_jitter, cfg.frames_per_phone_jitter + 1))
                    dur = max(1, cfg.frames_per_phone_mean + jitter)
                    labels.extend([p] * dur)
                labels = np.array(labels, dtype=np.int64)
                frames = cues[labels] + rng.normal(0.0, cfg.noise_sigma, (labels.size, FRAME_DIMS))
                records.append(
                    UtteranceRecord(
                        utt_id=f"{speaker_id}_u{u:02d}",
                        speaker_id=speaker_id,
                        frames=frames,
                        labels=labels,
                        phone_seq=tuple(phones),
                        pathology=cls.name,
                        intelligibility=score,
                    )
                )
    return records


@dataclass(frozen=True)
class PLFCorpusConfig:
    """Config for the logit-space corpus with a known score dependency.

    The score is an exact linear function of two histogram coordinates,
    dominated by the target feature's top-bin mass:

        score = intercept + slope * H0(target) + secondary_slope * L0(secondary) + noise
    """

    n_speakers: int = 200
    frames_per_utterance: int = 400
    target_plf: str = "Alveolar"
    secondary_plf: str = "Voiced"
    score_intercept: float = 5.0
    score_slope: float = 95.0
    secondary_slope: float = 30.0
    score_noise_sigma: float = 5.0
    top_mass_range: tuple[float, float] = (0.05, 0.75)
    low_mass_range: tuple[float, float] = (0.05, 0.40)
    secondary_mass_range: tuple[float, float] = (0.05, 0.55)
    seed: int = 0


@dataclass
class PLFRecord:
    speaker_id: str
    logits: np.ndarray  # (F, T)
    pathology: str
    intelligibility: float


def _controlled_row(rng: np.random.Generator, t: int, top_mass: float, low_mass: float) -> tuple[np.ndarray, float, float]:
    """Logit row with exact top/bottom histogram-bin masses, rest mid-bin."""
    n_top = int(round(top_mass * t))
    n_low = int(round(low_mass * t))
    row = np.zeros(t)
    row[:n_top] = 8.0
    row[n_top : n_top + n_low] = -8.0
    rng.shuffle(row)
    return row, n_top / t, n_low / t


def generate_plf_corpus(cfg: PLFCorpusConfig, spec: ConversionSpec) -> list[PLFRecord]:
    """Logit corpus with an exact linear score <-> histogram dependency.

    The target feature's frames are placed exactly: a per-speaker fraction at
    logit +8 (top histogram bin), an independent fraction at logit -8 (bottom
    bin), the rest at 0 (middle mass); the secondary feature carries an
    independent controlled bottom-bin mass. Remaining feature rows are
    speaker-colored noise. Pathology labels are terciles of the target mass,
    giving a correlated classification target on the same corpus.
    """
    for name in (cfg.target_plf, cfg.secondary_plf):
        if name not in spec.inventory.names:
            raise CorpusError(f"controlled feature '{name}' not in the inventory")
    if cfg.target_plf == cfg.secondary_plf:
        raise CorpusError("target and secondary features must differ")
    if cfg.n_speakers < 5:
        raise CorpusError("plf corpus needs at least 5 speakers")
    f_all = spec.n_features
    target = spec.inventory.index(cfg.target_plf)
    secondary = spec.inventory.index(cfg.secondary_plf)
    t = cfg.frames_per_utterance
    streams = iter(np.random.SeedSequence(cfg.seed).spawn(cfg.n_speakers))
    records: list[PLFRecord] = []
    top_masses = []
    for s in range(cfg.n_speakers):
        rng = np.random.default_rng(next(streams))
        row_t, exact_top, _ = _controlled_row(
            rng, t, rng.uniform(*cfg.top_mass_range), rng.uniform(*cfg.low_mass_range)
        )
        row_s, _, exact_sec = _controlled_row(rng, t, 0.0, rng.uniform(*cfg.secondary_mass_range))
        logits = rng.normal(0.0, 1.5, (f_all, t)) + rng.normal(0.0, 0.5, (f_all, 1))
        logits[target] = row_t
        logits[secondary] = row_s
        top_masses.append(exact_top)
        score = (
            cfg.score_intercept
            + cfg.score_slope * exact_top
            + cfg.secondary_slope * exact_sec
            + rng.normal(0.0, cfg.score_noise_sigma)
        )
        records.append(
            PLFRecord(
                speaker_id=f"spk{s:03d}",
                logits=logits,
                pathology="",
                intelligibility=float(np.clip(score, 0.0, 100.0)),
            )
        )
    terciles = np.quantile(top_masses, [1 / 3, 2 / 3])
    for rec, mass in zip(records, top_masses):
        rec.pathology = "severe" if mass < terciles[0] else ("moderate" if mass < terciles[1] else "mild")
    return records


# ---------------------------------------------------------------------------
# corpus serialization shared with the CLI


def write_corpus(records: list[UtteranceRecord], spec: ConversionSpec, outdir) -> Path:
    """Write frames/labels CSVs plus a manifest; returns the manifest path."""
    outdir = Path(outdir)
    (outdir / "frames").mkdir(parents=True, exist_ok=True)
    (outdir / "labels").mkdir(parents=True, exist_ok=True)
    manifest = outdir / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["utterance_id", "speaker_id", "frames_file", "labels_file", "pathology", "intelligibility"])
        for rec in records:
            frames_file = f"frames/{rec.utt_id}.csv"
            labels_file = f"labels/{rec.utt_id}.csv"
            np.savetxt(outdir / frames_file, rec.frames, delimiter=",", fmt="%.8g")
            with open(outdir / labels_file, "w") as lf:
                lf.write("\n".join(spec.phones[i] for i in rec.labels) + "\n")
            writer.writerow(
                [rec.utt_id, rec.speaker_id, frames_file, labels_file, rec.pathology, f"{rec.intelligibility:.4f}"]
            )
    return manifest


def read_corpus(manifest_path, spec: ConversionSpec) -> list[UtteranceRecord]:
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    phone_index = {p: i for i, p in enumerate(spec.phones)}
    records = []
    with open(manifest_path, newline="") as fh:
        for row in csv.DictReader(fh):
            frames = np.loadtxt(base / row["frames_file"], delimiter=",", ndmin=2)
            symbols = [s for s in (base / row["labels_file"]).read_text().splitlines() if s]
            try:
                labels = np.array([phone_index[s] for s in symbols], dtype=np.int64)
            except KeyError as e:
                raise CorpusError(f"{row['utterance_id']}: unknown phone symbol {e}") from e
            if labels.size != frames.shape[0]:
                raise CorpusError(f"{row['utterance_id']}: {labels.size} labels for {frames.shape[0]} frames")
            seq = [labels[0]]
            for lab in labels[1:]:
                if lab != seq[-1]:
                    seq.append(lab)
            records.append(
                UtteranceRecord(
                    utt_id=row["utterance_id"],
                    speaker_id=row["speaker_id"],
                    frames=frames,
                    labels=labels,
                    phone_seq=tuple(int(x) for x in seq),
                    pathology=row["pathology"],
                    intelligibility=float(row["intelligibility"]),
                )
            )
    if not records:
        raise CorpusError(f"{manifest_path}: empty corpus manifest")
    return records


def write_plf_corpus(records: list[PLFRecord], plf_names, outdir) -> Path:
    """Write per-speaker logit CSVs plus a manifest; returns the manifest path."""
    outdir = Path(outdir)
    (outdir / "plf").mkdir(parents=True, exist_ok=True)
    manifest = outdir / "plf_manifest.csv"
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["speaker_id", "plf_file", "pathology", "intelligibility"])
        for rec in records:
            plf_file = f"plf/{rec.speaker_id}.csv"
            write_plf_logits_csv(outdir / plf_file, plf_names, rec.logits)
            writer.writerow([rec.speaker_id, plf_file, rec.pathology, f"{rec.intelligibility:.4f}"])
    return manifest


def read_plf_corpus(manifest_path) -> list[PLFRecord]:
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    records = []
    with open(manifest_path, newline="") as fh:
        for row in csv.DictReader(fh):
            _, logits = read_plf_logits_csv(base / row["plf_file"])
            records.append(
                PLFRecord(
                    speaker_id=row["speaker_id"],
                    logits=logits,
                    pathology=row["pathology"],
                    intelligibility=float(row["intelligibility"]),
                )
            )
    if not records:
        raise CorpusError(f"{manifest_path}: empty corpus manifest")
    return records


def write_plf_logits_csv(path, plf_names, v) -> None:
    """Trace export: one row per feature (name first), one column per frame."""
    v = np.asarray(v)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for name, row in zip(plf_names, v):
            writer.writerow([name, *[f"{x:.8g}" for x in row]])


def read_plf_logits_csv(path) -> tuple[list[str], np.ndarray]:
    names, rows = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            names.append(row[0])
            rows.append([float(x) for x in row[1:]])
    return names, np.array(rows)
