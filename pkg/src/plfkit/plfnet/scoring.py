"""Frame-level feature-to-phone scoring.

Given the bottleneck logits v (one per phonological feature), each phone p
receives a score

    s_p = sum over non-grouped features f of  psi(log P(f|p)) * |W_{p,f}|
        + sum over active groups G of         psi(log P_G(p)) * 1

where P(f|p) is the probability that feature f shows its expected value for
phone p (sigmoid of +v or -v depending on the sign of the conversion entry),
P_G is the weight-normalized mixture of member posteriors for a vowel-position
group, and psi is the compression map psi(x) = (exp(x/E) - 1) * E that
interpolates between multiplicative (large E) and additive, fault-tolerant
(small E) evidence combination.

The conversion entry's sign selects which value is "expected"; its magnitude
is the weight of the term, so zero entries contribute nothing, exactly zero
gradient included. Path 2 swaps in matrix * exp(scaling) for the weights and
applies a per-phone affine calibration a_p * s_p + b_p on top.

Everything here is straight NumPy with hand-derived gradients; the checker in
gradcheck.py validates them against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from ..phonology import GROUP_NAMES, ConversionSpec

LOG_FLOOR = float(np.log(1e-12))


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def log_sigmoid(x):
    """log(sigmoid(x)) without underflow: -softplus(-x)."""
    x = np.asarray(x, dtype=np.float64)
    return -np.logaddexp(0.0, -x)


def compress(x, e: float):
    """psi(x) = (exp(x/E) - 1) * E; psi(0) = 0, infimum -E as x -> -inf."""
    if e <= 0:
        raise ValueError("compression parameter must be positive")
    return np.expm1(np.asarray(x, dtype=np.float64) / e) * e


def compress_deriv(x, e: float):
    return np.exp(np.asarray(x, dtype=np.float64) / e)


def plf_posterior(v, m):
    """Probability that a feature shows its expected value for a phone.

    sigmoid(v) when the conversion entry is nonnegative, sigmoid(-v) when
    negative; symmetric under (v, m) -> (-v, -m).
    """
    v = np.asarray(v, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    sign = np.where(m < 0, -1.0, 1.0)
    return sigmoid(sign * v)


def grouped_posterior(v_members, weights):
    """Convex combination of member posteriors for one vowel-position group.

    weights are the (nonnegative) conversion entries of the group members for
    the phone in question; they must not all be zero.
    """
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w < 0):
        raise ValueError("group weights must be nonnegative")
    total = w.sum()
    if total <= 0:
        raise ValueError("group is inactive (all member weights zero)")
    return float(w @ sigmoid(np.asarray(v_members, dtype=np.float64)) / total)


@dataclass
class ScoreCache:
    v: np.ndarray
    w_mag: np.ndarray
    lpos: np.ndarray
    lneg: np.ndarray
    lpos_live: np.ndarray
    lneg_live: np.ndarray
    ppos: np.ndarray
    pneg: np.ndarray
    sig: np.ndarray
    group_data: list
    base: np.ndarray
    calibrated: bool
    calib_a: np.ndarray | None


class PhoneScorer:
    """Precomputed index structure for one conversion spec and one E."""

    def __init__(self, spec: ConversionSpec, e: float):
        if e <= 0:
            raise ValueError("compression parameter must be positive")
        self.spec = spec
        self.e = float(e)
        inv = spec.inventory
        self.nongrouped = inv.nongrouped_feature_indices()
        self.groups = [
            inv.group_indices(g) for g in GROUP_NAMES if len(inv.groups.get(g, ())) > 0
        ]
        m = spec.matrix
        self.sign_pos = m >= 0  # (P, F); selects sigmoid(v) vs sigmoid(-v)

    def forward(self, v: np.ndarray, scaling_raw: np.ndarray | None = None,
                calibration: tuple[np.ndarray, np.ndarray] | None = None):
        """v: (F, T) logits -> (scores (P, T), cache)."""
        m = self.spec.matrix
        if v.ndim != 2 or v.shape[0] != m.shape[1]:
            raise ShapeError(f"logits {v.shape} do not match {m.shape[1]} features")
        w = m if scaling_raw is None else m * np.exp(scaling_raw)
        w_mag = np.abs(w)

        lpos_raw = log_sigmoid(v)
        lneg_raw = log_sigmoid(-v)
        lpos = np.maximum(lpos_raw, LOG_FLOOR)
        lneg = np.maximum(lneg_raw, LOG_FLOOR)
        ppos = compress(lpos, self.e)
        pneg = compress(lneg, self.e)
        sig = sigmoid(v)

        ng = self.nongrouped
        w_pos = w_mag[:, ng] * self.sign_pos[:, ng]
        w_neg = w_mag[:, ng] * ~self.sign_pos[:, ng]
        base = w_pos @ ppos[ng] + w_neg @ pneg[ng]

        group_data = []
        for g_idx in self.groups:
            wg = w[:, g_idx]  # (P, G) nonnegative by validation
            wsum = wg.sum(axis=1)
            active = wsum > 0
            if not np.any(active):
                group_data.append(None)
                continue
            mix = np.maximum((wg[active] @ sig[g_idx]) / wsum[active, None], 1e-300)
            lg = np.log(mix)
            lg_live = lg > LOG_FLOOR
            lg = np.maximum(lg, LOG_FLOOR)
            psi_g = compress(lg, self.e)
            base[active] += psi_g
            group_data.append(
                {"idx": g_idx, "wg": wg, "wsum": wsum, "active": active,
                 "mix": mix, "lg": lg, "lg_live": lg_live}
            )

        if calibration is not None:
            a, b = calibration
            scores = a[:, None] * base + b[:, None]
        else:
            a = None
            scores = base

        cache = ScoreCache(
            v=v, w_mag=w_mag,
            lpos=lpos, lneg=lneg,
            lpos_live=lpos_raw > LOG_FLOOR, lneg_live=lneg_raw > LOG_FLOOR,
            ppos=ppos, pneg=pneg, sig=sig,
            group_data=group_data, base=base,
            calibrated=calibration is not None, calib_a=a,
        )
        return scores, cache

    def backward(self, cache: ScoreCache, d_scores: np.ndarray):
        """Returns (d_v, d_scaling_raw, d_calib_a, d_calib_b).

        d_scaling_raw is the gradient w.r.t. the raw scaling parameters under
        weights = matrix * exp(raw); it is zero wherever the matrix is zero.
        Calibration gradients are None when the forward pass was uncalibrated.
        """
        e = self.e
        if cache.calibrated:
            d_a = (d_scores * cache.base).sum(axis=1)
            d_b = d_scores.sum(axis=1)
            d_base = d_scores * cache.calib_a[:, None]
        else:
            d_a = d_b = None
            d_base = d_scores

        ng = self.nongrouped
        w_pos = cache.w_mag[:, ng] * self.sign_pos[:, ng]
        w_neg = cache.w_mag[:, ng] * ~self.sign_pos[:, ng]

        d_v = np.zeros_like(cache.v)
        dppos = w_pos.T @ d_base
        dpneg = w_neg.T @ d_base
        sig_ng = cache.sig[ng]
        d_v[ng] += dppos * compress_deriv(cache.lpos[ng], e) * (1.0 - sig_ng) * cache.lpos_live[ng]
        d_v[ng] -= dpneg * compress_deriv(cache.lneg[ng], e) * sig_ng * cache.lneg_live[ng]

        d_wmag = np.zeros_like(cache.w_mag)
        d_wmag[:, ng] = (d_base @ cache.ppos[ng].T) * self.sign_pos[:, ng] \
            + (d_base @ cache.pneg[ng].T) * ~self.sign_pos[:, ng]
        # d w_mag / d raw = w_mag itself (and w = w_mag on group columns)
        d_raw = d_wmag * cache.w_mag

        for data in cache.group_data:
            if data is None:
                continue
            g_idx, active = data["idx"], data["active"]
            d_psi = d_base[active] * compress_deriv(data["lg"], e) * data["lg_live"]
            d_mix = d_psi / data["mix"]
            wsum_a = data["wsum"][active]
            w_norm = data["wg"][active] / wsum_a[:, None]  # (A, G)
            sig_g = cache.sig[g_idx]
            d_sig = w_norm.T @ d_mix  # (G, T)
            d_v[g_idx] += d_sig * sig_g * (1.0 - sig_g)
            d_wg = ((d_mix @ sig_g.T) - (d_mix * data["mix"]).sum(axis=1)[:, None]) / wsum_a[:, None]
            d_raw_g = np.zeros_like(data["wg"])
            d_raw_g[active] = d_wg * data["wg"][active]
            d_raw[:, g_idx] += d_raw_g

        return d_v, d_raw, d_a, d_b


def phone_scores(v, spec: ConversionSpec, e: float, scaling_raw=None, calibration=None):
    """Functional wrapper: logits (F, T) or (F,) -> scores (P, T) or (P,)."""
    v = np.asarray(v, dtype=np.float64)
    single = v.ndim == 1
    if single:
        v = v[:, None]
    scores, _ = PhoneScorer(spec, e).forward(v, scaling_raw, calibration)
    return scores[:, 0] if single else scores
