"""Brute-force reference implementations the fast kernels are checked against.

These are deliberately naive (nested loops, direct summation, full 2-D
convolutions via scipy) so they share no code path with the package.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.signal


def _windowed(plane, window, reducer):
    k = window // 2
    padded = np.pad(plane, k, mode="edge")
    h, w = plane.shape
    out = np.empty((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            out[y, x] = reducer(padded[y : y + window, x : x + window])
    return out


def max_filter_slow(plane, window):
    return _windowed(plane, window, np.max)


def min_filter_slow(plane, window):
    return _windowed(plane, window, np.min)


def box_blur_slow(plane, window):
    return _windowed(plane, window, np.mean)


def laplacian_abs_sum_slow(plane):
    """Direct 5-point stencil with replicated borders, plain float accumulation."""
    padded = np.pad(plane, 1, mode="edge")
    h, w = plane.shape
    total = 0.0
    for y in range(h):
        for x in range(w):
            resp = (
                padded[y, x + 1]
                + padded[y + 2, x + 1]
                + padded[y + 1, x]
                + padded[y + 1, x + 2]
                - 4.0 * padded[y + 1, x + 1]
            )
            total += abs(resp)
    return total


def _axis_coords(n_src, n_dst):
    if n_dst == 1:
        return np.array([(n_src - 1) / 2.0])
    return np.arange(n_dst, dtype=np.float64) * ((n_src - 1) / (n_dst - 1))


def resample_bilinear_slow(plane, out_h, out_w):
    """Per-pixel align-corners bilinear gather."""
    in_h, in_w = plane.shape
    out = np.empty((out_h, out_w), dtype=np.float64)
    for i, fy in enumerate(_axis_coords(in_h, out_h)):
        y0 = min(int(math.floor(fy)), in_h - 1)
        y1 = min(y0 + 1, in_h - 1)
        wy = fy - y0
        for j, fx in enumerate(_axis_coords(in_w, out_w)):
            x0 = min(int(math.floor(fx)), in_w - 1)
            x1 = min(x0 + 1, in_w - 1)
            wx = fx - x0
            tl, tr = plane[y0, x0], plane[y0, x1]
            bl, br = plane[y1, x0], plane[y1, x1]
            top = tl + (tr - tl) * wx
            bot = bl + (br - bl) * wx
            out[i, j] = top + (bot - top) * wy
    return out


def gaussian_valid_slow(plane, taps):
    kernel = np.outer(taps, taps)
    return scipy.signal.correlate2d(plane, kernel, mode="valid")


def downsample2x_slow(plane):
    h, w = plane.shape
    trimmed = plane[: 2 * (h // 2), : 2 * (w // 2)]
    return trimmed.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))


def _gaussian_taps(n, sigma):
    xs = np.arange(n, dtype=np.float64) - (n - 1) / 2.0
    t = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return t / t.sum()


def ms_ssim_slow(x, y):
    """Multi-scale structural similarity on two 0..255-scaled planes.

    Full 2-D correlations via scipy (no separable fast path), block-mean
    pyramid, standard 5-scale exponents with renormalization when the
    image cannot host all five scales.
    """
    c1 = (0.01 * 255.0) ** 2
    c2 = (0.03 * 255.0) ** 2
    weights = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m = min(x.shape)
    win = 11 if m >= 11 else (m if m % 2 == 1 else m - 1)
    kernel = np.outer(_gaussian_taps(win, 1.5), _gaussian_taps(win, 1.5))
    scales = 1
    cur = m
    while scales < len(weights) and cur // 2 >= win:
        cur //= 2
        scales += 1
    exps = np.asarray(weights[:scales])
    if scales < len(weights):
        exps = exps / exps.sum()
    score = 1.0
    for s in range(scales):
        mu_x = scipy.signal.correlate2d(x, kernel, mode="valid")
        mu_y = scipy.signal.correlate2d(y, kernel, mode="valid")
        var_x = scipy.signal.correlate2d(x * x, kernel, mode="valid") - mu_x * mu_x
        var_y = scipy.signal.correlate2d(y * y, kernel, mode="valid") - mu_y * mu_y
        cov = scipy.signal.correlate2d(x * y, kernel, mode="valid") - mu_x * mu_y
        lum = (2.0 * mu_x * mu_y + c1) / (mu_x * mu_x + mu_y * mu_y + c1)
        cs = (2.0 * cov + c2) / (var_x + var_y + c2)
        if s == scales - 1:
            term = float(np.mean(lum * cs))
        else:
            term = float(np.mean(cs))
            x = downsample2x_slow(x)
            y = downsample2x_slow(y)
        score *= max(term, 0.0) ** exps[s]
    return float(score)


def pixel_stats_slow(ref, test):
    """Direct fsum-based pixel statistics on the 8-bit scale."""
    rflat = (np.asarray(ref, dtype=np.float64) * 255.0).ravel()
    tflat = (np.asarray(test, dtype=np.float64) * 255.0).ravel()
    n = rflat.size
    sq = math.fsum((a - b) ** 2 for a, b in zip(rflat, tflat))
    ab = math.fsum(abs(a - b) for a, b in zip(rflat, tflat))
    sig = math.fsum(a * a for a in rflat)
    mse = sq / n
    mae = ab / n
    signal = sig / n
    if mse == 0.0:
        snr = math.inf
    elif signal == 0.0:
        snr = -math.inf
    else:
        snr = 10.0 * math.log10(signal / mse)
    return {"mse": mse, "rmse": math.sqrt(mse), "mae": mae, "snr": snr}
