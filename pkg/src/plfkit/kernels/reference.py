"""Pure NumPy/Python fallbacks for the hot kernels.

Same contracts as the compiled module in ``_native.pyx``; selected at import
time by :mod:`plfkit.kernels` when the extension is unavailable or when
``PLFKIT_PURE=1`` is set.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def edit_counts(ref, hyp):
    """Minimal-cost alignment counts between two id sequences.

    Unit-cost Levenshtein DP; the backtrace breaks ties preferring
    substitution over deletion over insertion, so the (ins, del, sub)
    decomposition is deterministic even when several minimal alignments
    exist. The total ins+del+sub always equals the edit distance.
    """
    ref = list(ref)
    hyp = list(hyp)
    n, m = len(ref), len(hyp)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        ri = ref[i - 1]
        row = d[i]
        prev = d[i - 1]
        for j in range(1, m + 1):
            diag = prev[j - 1] + (0 if ri == hyp[j - 1] else 1)
            up = prev[j] + 1
            left = row[j - 1] + 1
            best = diag
            if up < best:
                best = up
            if left < best:
                best = left
            row[j] = best
    n_ins = n_del = n_sub = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and d[i][j] == d[i - 1][j - 1] + (0 if ref[i - 1] == hyp[j - 1] else 1):
            if ref[i - 1] != hyp[j - 1]:
                n_sub += 1
            i -= 1
            j -= 1
        elif i > 0 and d[i][j] == d[i - 1][j] + 1:
            n_del += 1
            i -= 1
        else:
            n_ins += 1
            j -= 1
    return n_ins, n_del, n_sub


def conv2d_forward(x, w, b, sh, sw):
    """Valid 2D convolution (no flip), im2col formulation.

    x: (Cin, H, W); w: (Cout, Cin, kh, kw); b: (Cout,); strides (sh, sw).
    Returns (Cout, Ho, Wo) with Ho = (H - kh)//sh + 1, Wo = (W - kw)//sw + 1.
    """
    cout, cin, kh, kw = w.shape
    windows = sliding_window_view(x, (kh, kw), axis=(1, 2))[:, ::sh, ::sw]
    # windows: (Cin, Ho, Wo, kh, kw)
    ho, wo = windows.shape[1], windows.shape[2]
    cols = windows.transpose(1, 2, 0, 3, 4).reshape(ho * wo, cin * kh * kw)
    out = cols @ w.reshape(cout, -1).T + b
    return np.ascontiguousarray(out.reshape(ho, wo, cout).transpose(2, 0, 1))


def conv2d_backward(x, w, sh, sw, dout):
    """Gradients of conv2d_forward w.r.t. input, weights and bias.

    dout: (Cout, Ho, Wo). Returns (dx, dw, db) matching x/w/b shapes.
    """
    cout, cin, kh, kw = w.shape
    ho, wo = dout.shape[1], dout.shape[2]
    windows = sliding_window_view(x, (kh, kw), axis=(1, 2))[:, ::sh, ::sw]
    cols = windows.transpose(1, 2, 0, 3, 4).reshape(ho * wo, cin * kh * kw)
    dout_mat = dout.transpose(1, 2, 0).reshape(ho * wo, cout)

    db = dout.sum(axis=(1, 2))
    dw = (dout_mat.T @ cols).reshape(w.shape)
    dcols = (dout_mat @ w.reshape(cout, -1)).reshape(ho, wo, cin, kh, kw)

    dx = np.zeros_like(x)
    # scatter-add one kernel offset at a time; slices never overlap per offset
    for u in range(kh):
        for v in range(kw):
            dx[:, u : u + ho * sh : sh, v : v + wo * sw : sw] += dcols[:, :, :, u, v].transpose(2, 0, 1)
    return dx, dw, db
