"""Utterance-level features from frame-level outputs.

Two families: phone-error-rate features (needs a reference transcription;
framewise argmax decoding, duplicate collapse, minimal-cost alignment with a
fixed substitution > deletion > insertion backtrace preference) and the
text-independent histogram feature (per feature row, a 20-bin normalized
histogram of sigmoid(logit) summarized as the three lowest bins, the three
highest bins and the remaining middle mass: L0, L1, L2, M, H2, H1, H0).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import UndefinedCorrelationError, UndefinedRateError
from .kernels import edit_counts
from .plfnet.scoring import sigmoid

N_BINS = 20
BIN_LABELS = ("L0", "L1", "L2", "M", "H2", "H1", "H0")


class AlignmentCounts(NamedTuple):
    insertions: int
    deletions: int
    substitutions: int
    n_reference: int

    @property
    def distance(self) -> int:
        return self.insertions + self.deletions + self.substitutions


@dataclass(frozen=True)
class PERFeature:
    per: float
    ins_rate: float
    del_rate: float
    sub_rate: float

    FIELD_NAMES = ("per", "ins_rate", "del_rate", "sub_rate")

    def as_array(self) -> np.ndarray:
        return np.array([self.per, self.ins_rate, self.del_rate, self.sub_rate])


@dataclass(frozen=True)
class HistogramFeature:
    values: np.ndarray  # (F, 7) in BIN_LABELS order per feature row

    def flat(self) -> np.ndarray:
        return self.values.ravel()

    @staticmethod
    def column_names(plf_names: Sequence[str]) -> list[str]:
        return [f"{plf}_{bin_}" for plf in plf_names for bin_ in BIN_LABELS]


def decode_phones(scores: np.ndarray, drop_index: int | None = None) -> list[int]:
    """Framewise argmax, consecutive duplicates collapsed.

    Ties go to the lowest phone index; drop_index (e.g. a silence phone) is
    removed after collapsing.
    """
    scores = np.asarray(scores)
    if scores.ndim != 2 or scores.shape[1] < 1:
        raise ValueError("scores must be a non-empty (P, T) matrix")
    best = np.argmax(scores, axis=0)  # argmax takes the lowest index on ties
    seq: list[int] = []
    for idx in best:
        if not seq or seq[-1] != idx:
            seq.append(int(idx))
    if drop_index is not None:
        seq = [s for s in seq if s != drop_index]
    return seq


def align(ref: Sequence, hyp: Sequence) -> AlignmentCounts:
    """Minimal-cost alignment counts; symbols may be any hashables."""
    ref = list(ref)
    hyp = list(hyp)
    if not ref:
        raise UndefinedRateError("reference sequence is empty")
    vocab: dict = {}
    for sym in ref + hyp:
        vocab.setdefault(sym, len(vocab))
    ref_ids = np.array([vocab[s] for s in ref], dtype=np.int32)
    hyp_ids = np.array([vocab[s] for s in hyp], dtype=np.int32)
    ins, dels, subs = edit_counts(ref_ids, hyp_ids)
    return AlignmentCounts(int(ins), int(dels), int(subs), len(ref))


def per_features(ref: Sequence, hyp: Sequence) -> PERFeature:
    """Phone error rate and its insertion/deletion/substitution split."""
    counts = align(ref, hyp)
    n = counts.n_reference
    return PERFeature(
        per=counts.distance / n,
        ins_rate=counts.insertions / n,
        del_rate=counts.deletions / n,
        sub_rate=counts.substitutions / n,
    )


def plf_histogram(v: np.ndarray) -> HistogramFeature:
    """Histogram summary of one utterance's feature logits (F, T).

    Logits pass through a sigmoid onto [0, 1], which is split into 20 uniform
    bins (right edge inclusive in the last); counts are normalized by T. The
    middle mass M is computed as one minus the six edge bins so each row's
    7-tuple sums to one exactly.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 2 or v.shape[1] < 1:
        raise ValueError("logits must be a non-empty (F, T) matrix")
    f, t = v.shape
    activ = sigmoid(v)
    idx = np.clip((activ * N_BINS).astype(np.int64), 0, N_BINS - 1)
    out = np.empty((f, 7))
    for row in range(f):
        bins = np.bincount(idx[row], minlength=N_BINS) / t
        low = bins[0], bins[1], bins[2]
        high = bins[N_BINS - 3], bins[N_BINS - 2], bins[N_BINS - 1]
        mid = 1.0 - (low[0] + low[1] + low[2] + high[0] + high[1] + high[2])
        out[row] = (low[0], low[1], low[2], mid, high[0], high[1], high[2])
    return HistogramFeature(values=out)


def pcc(x, y) -> float:
    """Pearson correlation; raises UndefinedCorrelationError on zero variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("pcc needs two equal-length 1-D sequences of length >= 2")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = np.sqrt(xc @ xc)
    sy = np.sqrt(yc @ yc)
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError("zero variance input to correlation")
    return float(np.clip((xc @ yc) / (sx * sy), -1.0, 1.0))


class ReportRow(NamedTuple):
    plf: str
    mean_pcc: float
    best_bin: str
    best_bin_pcc: float


def correlation_report(plf_names: Sequence[str], mean_logits: np.ndarray,
                       histograms: np.ndarray, scores: np.ndarray) -> list[ReportRow]:
    """Per-feature correlation table against utterance scores.

    mean_logits: (N, F) mean frame logit per utterance; histograms: (N, F, 7)
    in BIN_LABELS order; scores: (N,). For each feature: the correlation of
    the mean logit, plus the histogram bin with the largest |correlation|
    (constant bins are skipped; ties resolved in BIN_LABELS order).
    """
    mean_logits = np.asarray(mean_logits, dtype=np.float64)
    histograms = np.asarray(histograms, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64)
    n, f = mean_logits.shape
    if n < 2:
        raise ValueError("correlation report needs at least two utterances")
    rows = []
    for j in range(f):
        mean_r = pcc(mean_logits[:, j], scores)
        best_label, best_r = None, 0.0
        for k, label in enumerate(BIN_LABELS):
            col = histograms[:, j, k]
            if np.ptp(col) == 0.0:
                continue
            r = pcc(col, scores)
            if best_label is None or abs(r) > abs(best_r):
                best_label, best_r = label, r
        if best_label is None:
            raise UndefinedCorrelationError(
                f"every histogram bin of '{plf_names[j]}' is constant across utterances"
            )
        rows.append(ReportRow(plf=plf_names[j], mean_pcc=mean_r, best_bin=best_label, best_bin_pcc=best_r))
    return rows


def write_per_features_csv(path, rows) -> None:
    """rows: iterable of (utterance_id, PERFeature)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["utterance_id", *PERFeature.FIELD_NAMES])
        for utt_id, feat in rows:
            writer.writerow([utt_id, *[f"{v:.10g}" for v in feat.as_array()]])


def write_histogram_features_csv(path, plf_names, rows) -> None:
    """rows: iterable of (utterance_id, HistogramFeature)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["utterance_id", *HistogramFeature.column_names(plf_names)])
        for utt_id, feat in rows:
            writer.writerow([utt_id, *[f"{v:.10g}" for v in feat.flat()]])


def write_correlation_report_csv(path, rows: list[ReportRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["plf", "mean_pcc", "best_bin", "best_bin_pcc"])
        for row in rows:
            writer.writerow([row.plf, f"{row.mean_pcc:.6f}", row.best_bin, f"{row.best_bin_pcc:.6f}"])
