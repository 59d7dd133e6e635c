"""Independent straight-loop reference implementations used as test oracles.

Everything here is written against the documented layer conventions with
plain scalar loops and no shared code with the package's vectorized paths.
"""

import math

import numpy as np


def bspline_weight(x: float) -> float:
    ax = abs(x)
    if ax >= 2.0:
        return 0.0
    if ax < 1.0:
        return ((2.0 - ax) ** 3 - 4.0 * (1.0 - ax) ** 3) / 6.0
    return (2.0 - ax) ** 3 / 6.0


def catmullrom_weight(x: float) -> float:
    ax = abs(x)
    if ax >= 2.0:
        return 0.0
    if ax < 1.0:
        return 1.5 * ax**3 - 2.5 * ax**2 + 1.0
    return -0.5 * ax**3 + 2.5 * ax**2 - 4.0 * ax + 2.0


def up_interpolate_oracle(src: np.ndarray, th: int, tw: int, weight_fn=bspline_weight) -> np.ndarray:
    """Scalar resampler: align-centers mapping, clamped 4x4 taps, weights
    normalized per axis to sum to one. Same-size targets are the identity."""
    h, w, d = src.shape
    if (th, tw) == (h, w):
        return src.copy()
    out = np.zeros((th, tw, d))
    for i in range(th):
        si = (i + 0.5) * h / th - 0.5
        bi = math.floor(si)
        fi = si - bi
        rw = [weight_fn(fi + 1.0), weight_fn(fi), weight_fn(1.0 - fi), weight_fn(2.0 - fi)]
        rsum = sum(rw)
        rw = [v / rsum for v in rw]
        ri = [min(max(bi - 1 + t, 0), h - 1) for t in range(4)]
        for j in range(tw):
            sj = (j + 0.5) * w / tw - 0.5
            bj = math.floor(sj)
            fj = sj - bj
            cw = [weight_fn(fj + 1.0), weight_fn(fj), weight_fn(1.0 - fj), weight_fn(2.0 - fj)]
            csum = sum(cw)
            cw = [v / csum for v in cw]
            cj = [min(max(bj - 1 + t, 0), w - 1) for t in range(4)]
            for l in range(d):
                acc = 0.0
                for s in range(4):
                    for t in range(4):
                        acc += rw[s] * cw[t] * src[ri[s], cj[t], l]
                out[i, j, l] = acc
    return out


def conv_oracle(src: np.ndarray, kernels: np.ndarray, bias: float) -> np.ndarray:
    """Six nested loops, zero padding, output size equals input size."""
    h, w, c_in = src.shape
    c_out = kernels.shape[0]
    out = np.zeros((h, w, c_out))
    for i in range(h):
        for j in range(w):
            for l in range(c_out):
                acc = 0.0
                for m in range(3):
                    for n in range(3):
                        ii = i + m - 1
                        jj = j + n - 1
                        if 0 <= ii < h and 0 <= jj < w:
                            for c in range(c_in):
                                acc += src[ii, jj, c] * kernels[l, m, n, c]
                out[i, j, l] = acc + bias
    return out


def attention_oracle(x: np.ndarray, w_q: np.ndarray, w_k: np.ndarray, w_v: np.ndarray) -> np.ndarray:
    """Materialize the attention matrix entry by entry with scalar exp,
    normalize each row, and mix the value rows."""
    L, d = x.shape
    q = x @ w_q
    k = x @ w_k
    v = x @ w_v
    a = np.zeros((L, L))
    for i in range(L):
        for j in range(L):
            a[i, j] = math.exp(float(np.dot(q[i], k[j])))
    out = np.zeros((L, d))
    for i in range(L):
        row_sum = a[i].sum()
        for j in range(L):
            out[i] += (a[i, j] / row_sum) * v[j]
    return out


def taylor_sum_oracle(s: float, g: int) -> float:
    """sum_{t<=g} s^t / t! by direct scalar evaluation."""
    return sum(s**t / math.factorial(t) for t in range(g + 1))
