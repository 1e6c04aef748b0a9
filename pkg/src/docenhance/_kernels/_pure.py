"""NumPy implementations of the low-level raster kernels.

This module is the reference backend: the compiled extension in
``_native.pyx`` mirrors these semantics exactly and the test suite holds
the two implementations together. Shared conventions:

* a plane is a 2-D ``float64`` array (callers normalize dtype/layout),
* neighborhood operations extend the image by replicating edge pixels,
* resampling uses the align-corners convention (corner pixel centers of
  the input and output grids coincide).
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _as_plane(plane):
    arr = np.ascontiguousarray(plane, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("kernel expects a 2-D plane, got shape %r" % (arr.shape,))
    return arr


def _check_window(plane, window):
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd integer, got %d" % window)
    if window > min(plane.shape):
        raise ValueError(
            "window %d exceeds the smaller plane dimension %d"
            % (window, min(plane.shape))
        )


def max_filter(plane, window):
    """Square-window running maximum with replicated edges."""
    plane = _as_plane(plane)
    _check_window(plane, window)
    r = window // 2
    p = np.pad(plane, ((0, 0), (r, r)), mode="edge")
    rows = np.max(sliding_window_view(p, window, axis=1), axis=-1)
    p = np.pad(rows, ((r, r), (0, 0)), mode="edge")
    return np.max(sliding_window_view(p, window, axis=0), axis=-1)


def min_filter(plane, window):
    """Square-window running minimum with replicated edges."""
    plane = _as_plane(plane)
    _check_window(plane, window)
    r = window // 2
    p = np.pad(plane, ((0, 0), (r, r)), mode="edge")
    rows = np.min(sliding_window_view(p, window, axis=1), axis=-1)
    p = np.pad(rows, ((r, r), (0, 0)), mode="edge")
    return np.min(sliding_window_view(p, window, axis=0), axis=-1)


def box_blur(plane, window):
    """Square-window mean with replicated edges (separable two-pass)."""
    plane = _as_plane(plane)
    _check_window(plane, window)
    r = window // 2
    p = np.pad(plane, ((0, 0), (r, r)), mode="edge")
    rows = np.mean(sliding_window_view(p, window, axis=1), axis=-1)
    p = np.pad(rows, ((r, r), (0, 0)), mode="edge")
    return np.mean(sliding_window_view(p, window, axis=0), axis=-1)


def laplacian_abs_sum(plane):
    """Sum of absolute responses of the 4-neighbor Laplacian.

    The kernel is ``[[0, 1, 0], [1, -4, 1], [0, 1, 0]]`` and the plane is
    extended by edge replication, so the response is computed at every
    pixel including borders.
    """
    plane = _as_plane(plane)
    p = np.pad(plane, 1, mode="edge")
    resp = (
        p[:-2, 1:-1]
        + p[2:, 1:-1]
        + p[1:-1, :-2]
        + p[1:-1, 2:]
        - 4.0 * plane
    )
    return float(np.sum(np.abs(resp)))


def _axis_coords(n_src, n_dst):
    """Source sampling positions for align-corners resampling."""
    if n_dst == 1:
        return np.array([0.5 * (n_src - 1)], dtype=np.float64)
    step = (n_src - 1) / (n_dst - 1)
    return np.arange(n_dst, dtype=np.float64) * step


def resample_bilinear(plane, out_h, out_w):
    """Bilinear resampling to ``(out_h, out_w)``, align-corners convention."""
    plane = _as_plane(plane)
    if out_h < 1 or out_w < 1:
        raise ValueError("target size must be positive, got %dx%d" % (out_w, out_h))
    h, w = plane.shape
    ys = _axis_coords(h, out_h)
    xs = _axis_coords(w, out_w)
    y0 = np.minimum(np.floor(ys).astype(np.intp), h - 1)
    x0 = np.minimum(np.floor(xs).astype(np.intp), w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    tl = plane[np.ix_(y0, x0)]
    tr = plane[np.ix_(y0, x1)]
    bl = plane[np.ix_(y1, x0)]
    br = plane[np.ix_(y1, x1)]
    top = tl + (tr - tl) * fx
    bot = bl + (br - bl) * fx
    return top + (bot - top) * fy


def gaussian_valid(plane, taps):
    """Separable windowed correlation, valid region only.

    ``taps`` is a 1-D symmetric tap vector (typically Gaussian); the output
    shape is ``(h - t + 1, w - t + 1)`` for ``t`` taps.
    """
    plane = _as_plane(plane)
    taps = np.ascontiguousarray(taps, dtype=np.float64)
    t = taps.shape[0]
    if t > min(plane.shape):
        raise ValueError(
            "tap count %d exceeds the smaller plane dimension %d"
            % (t, min(plane.shape))
        )
    rows = sliding_window_view(plane, t, axis=1) @ taps
    return sliding_window_view(rows, t, axis=0) @ taps


def downsample2x(plane):
    """2x2 mean downsample; trailing odd row/column is dropped."""
    plane = _as_plane(plane)
    h, w = plane.shape
    h2, w2 = h // 2, w // 2
    if h2 < 1 or w2 < 1:
        raise ValueError("plane %dx%d is too small to downsample" % (w, h))
    p = plane[: 2 * h2, : 2 * w2]
    acc = p[0::2, 0::2] + p[0::2, 1::2]
    acc = acc + p[1::2, 0::2]
    acc = acc + p[1::2, 1::2]
    return acc * 0.25
