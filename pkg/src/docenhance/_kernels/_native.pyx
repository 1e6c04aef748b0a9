# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled raster kernels.

Semantics mirror ``_pure`` exactly: 2-D float64 planes, replicated edges,
align-corners resampling. The rank filters use the block prefix/suffix
trick so cost per pixel is independent of the window size; the box blur
uses running sums.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline Py_ssize_t _clampi(Py_ssize_t i, Py_ssize_t n) nogil:
    if i < 0:
        return 0
    if i >= n:
        return n - 1
    return i


def _as_plane(plane):
    arr = np.ascontiguousarray(plane, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("kernel expects a 2-D plane, got shape %r" % (arr.shape,))
    if not arr.flags.writeable:
        # typed memoryviews need a writable buffer even for read-only use
        arr = arr.copy()
    return arr


def _check_window(plane, window):
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd integer, got %d" % window)
    if window > min(plane.shape):
        raise ValueError(
            "window %d exceeds the smaller plane dimension %d"
            % (window, min(plane.shape))
        )


cdef void _rank_rows(double[:, ::1] src, double[:, ::1] dst, Py_ssize_t window,
                     bint use_max, double[::1] padded, double[::1] fwd,
                     double[::1] bwd) nogil:
    """Horizontal running max/min per row (block prefix/suffix scheme)."""
    cdef Py_ssize_t h = src.shape[0]
    cdef Py_ssize_t w = src.shape[1]
    cdef Py_ssize_t r = window // 2
    cdef Py_ssize_t m = w + 2 * r
    cdef Py_ssize_t y, i, j
    cdef double a, b
    for y in range(h):
        for i in range(m):
            padded[i] = src[y, _clampi(i - r, w)]
        for i in range(m):
            if i % window == 0:
                fwd[i] = padded[i]
            else:
                a = fwd[i - 1]
                b = padded[i]
                if use_max:
                    fwd[i] = a if a > b else b
                else:
                    fwd[i] = a if a < b else b
        for i in range(m - 1, -1, -1):
            if i == m - 1 or (i + 1) % window == 0:
                bwd[i] = padded[i]
            else:
                a = bwd[i + 1]
                b = padded[i]
                if use_max:
                    bwd[i] = a if a > b else b
                else:
                    bwd[i] = a if a < b else b
        for j in range(w):
            a = bwd[j]
            b = fwd[j + 2 * r]
            if use_max:
                dst[y, j] = a if a > b else b
            else:
                dst[y, j] = a if a < b else b


def _rank_filter(plane, Py_ssize_t window, bint use_max):
    plane = _as_plane(plane)
    _check_window(plane, window)
    cdef Py_ssize_t h = plane.shape[0]
    cdef Py_ssize_t w = plane.shape[1]
    cdef Py_ssize_t m = max(h, w) + window
    rows = np.empty((h, w), dtype=np.float64)
    padded = np.empty(m, dtype=np.float64)
    fwd = np.empty(m, dtype=np.float64)
    bwd = np.empty(m, dtype=np.float64)
    cdef double[:, ::1] src = plane
    cdef double[:, ::1] dst = rows
    cdef double[::1] pbuf = padded
    cdef double[::1] fbuf = fwd
    cdef double[::1] bbuf = bwd
    with nogil:
        _rank_rows(src, dst, window, use_max, pbuf, fbuf, bbuf)
    # column pass: run the row kernel on the transpose
    rows_t = np.ascontiguousarray(rows.T)
    out_t = np.empty_like(rows_t)
    src = rows_t
    dst = out_t
    with nogil:
        _rank_rows(src, dst, window, use_max, pbuf, fbuf, bbuf)
    return np.ascontiguousarray(out_t.T)


def max_filter(plane, window):
    """Square-window running maximum with replicated edges."""
    return _rank_filter(plane, window, True)


def min_filter(plane, window):
    """Square-window running minimum with replicated edges."""
    return _rank_filter(plane, window, False)


cdef void _mean_rows(double[:, ::1] src, double[:, ::1] dst,
                     Py_ssize_t window) nogil:
    cdef Py_ssize_t h = src.shape[0]
    cdef Py_ssize_t w = src.shape[1]
    cdef Py_ssize_t r = window // 2
    cdef Py_ssize_t y, x, k
    cdef double s, inv
    inv = 1.0 / window
    for y in range(h):
        s = 0.0
        for k in range(-r, r + 1):
            s += src[y, _clampi(k, w)]
        dst[y, 0] = s * inv
        for x in range(1, w):
            s += src[y, _clampi(x + r, w)] - src[y, _clampi(x - 1 - r, w)]
            dst[y, x] = s * inv


def box_blur(plane, Py_ssize_t window):
    """Square-window mean with replicated edges (separable two-pass)."""
    plane = _as_plane(plane)
    _check_window(plane, window)
    rows = np.empty_like(plane)
    cdef double[:, ::1] src = plane
    cdef double[:, ::1] dst = rows
    with nogil:
        _mean_rows(src, dst, window)
    rows_t = np.ascontiguousarray(rows.T)
    out_t = np.empty_like(rows_t)
    src = rows_t
    dst = out_t
    with nogil:
        _mean_rows(src, dst, window)
    return np.ascontiguousarray(out_t.T)


def laplacian_abs_sum(plane):
    """Sum of absolute responses of the 4-neighbor Laplacian."""
    plane = _as_plane(plane)
    cdef double[:, ::1] p = plane
    cdef Py_ssize_t h = p.shape[0]
    cdef Py_ssize_t w = p.shape[1]
    cdef Py_ssize_t y, x
    cdef double resp, row_sum, total
    total = 0.0
    with nogil:
        for y in range(h):
            row_sum = 0.0
            for x in range(w):
                resp = (
                    p[_clampi(y - 1, h), x]
                    + p[_clampi(y + 1, h), x]
                    + p[y, _clampi(x - 1, w)]
                    + p[y, _clampi(x + 1, w)]
                    - 4.0 * p[y, x]
                )
                row_sum += resp if resp >= 0.0 else -resp
            total += row_sum
    return total


def _axis_coords(n_src, n_dst):
    """Source sampling positions for align-corners resampling."""
    if n_dst == 1:
        return np.array([0.5 * (n_src - 1)], dtype=np.float64)
    step = (n_src - 1) / (n_dst - 1)
    return np.arange(n_dst, dtype=np.float64) * step


def resample_bilinear(plane, Py_ssize_t out_h, Py_ssize_t out_w):
    """Bilinear resampling to ``(out_h, out_w)``, align-corners convention."""
    plane = _as_plane(plane)
    if out_h < 1 or out_w < 1:
        raise ValueError("target size must be positive, got %dx%d" % (out_w, out_h))
    cdef Py_ssize_t h = plane.shape[0]
    cdef Py_ssize_t w = plane.shape[1]
    ys = _axis_coords(h, out_h)
    xs = _axis_coords(w, out_w)
    y0_arr = np.minimum(np.floor(ys).astype(np.intp), h - 1)
    x0_arr = np.minimum(np.floor(xs).astype(np.intp), w - 1)
    y1_arr = np.minimum(y0_arr + 1, h - 1)
    x1_arr = np.minimum(x0_arr + 1, w - 1)
    fy_arr = ys - y0_arr
    fx_arr = xs - x0_arr
    out = np.empty((out_h, out_w), dtype=np.float64)
    cdef double[:, ::1] src = plane
    cdef double[:, ::1] dst = out
    cdef Py_ssize_t[::1] y0 = np.ascontiguousarray(y0_arr)
    cdef Py_ssize_t[::1] y1 = np.ascontiguousarray(y1_arr)
    cdef Py_ssize_t[::1] x0 = np.ascontiguousarray(x0_arr)
    cdef Py_ssize_t[::1] x1 = np.ascontiguousarray(x1_arr)
    cdef double[::1] fy = np.ascontiguousarray(fy_arr)
    cdef double[::1] fx = np.ascontiguousarray(fx_arr)
    cdef Py_ssize_t i, j
    cdef double tl, tr, bl, br, top, bot
    with nogil:
        for i in range(out_h):
            for j in range(out_w):
                tl = src[y0[i], x0[j]]
                tr = src[y0[i], x1[j]]
                bl = src[y1[i], x0[j]]
                br = src[y1[i], x1[j]]
                top = tl + (tr - tl) * fx[j]
                bot = bl + (br - bl) * fx[j]
                dst[i, j] = top + (bot - top) * fy[i]
    return out


def gaussian_valid(plane, taps):
    """Separable windowed correlation, valid region only."""
    plane = _as_plane(plane)
    taps_arr = np.ascontiguousarray(taps, dtype=np.float64)
    if not taps_arr.flags.writeable:
        taps_arr = taps_arr.copy()
    cdef Py_ssize_t t = taps_arr.shape[0]
    if t > min(plane.shape):
        raise ValueError(
            "tap count %d exceeds the smaller plane dimension %d"
            % (t, min(plane.shape))
        )
    cdef Py_ssize_t h = plane.shape[0]
    cdef Py_ssize_t w = plane.shape[1]
    cdef Py_ssize_t hw = w - t + 1
    cdef Py_ssize_t hh = h - t + 1
    rows = np.empty((h, hw), dtype=np.float64)
    out = np.empty((hh, hw), dtype=np.float64)
    cdef double[:, ::1] src = plane
    cdef double[:, ::1] mid = rows
    cdef double[:, ::1] dst = out
    cdef double[::1] tp = taps_arr
    cdef Py_ssize_t y, x, k
    cdef double s
    with nogil:
        for y in range(h):
            for x in range(hw):
                s = 0.0
                for k in range(t):
                    s += src[y, x + k] * tp[k]
                mid[y, x] = s
        for y in range(hh):
            for x in range(hw):
                s = 0.0
                for k in range(t):
                    s += mid[y + k, x] * tp[k]
                dst[y, x] = s
    return out


def downsample2x(plane):
    """2x2 mean downsample; trailing odd row/column is dropped."""
    plane = _as_plane(plane)
    cdef Py_ssize_t h = plane.shape[0]
    cdef Py_ssize_t w = plane.shape[1]
    cdef Py_ssize_t h2 = h // 2
    cdef Py_ssize_t w2 = w // 2
    if h2 < 1 or w2 < 1:
        raise ValueError("plane %dx%d is too small to downsample" % (w, h))
    out = np.empty((h2, w2), dtype=np.float64)
    cdef double[:, ::1] src = plane
    cdef double[:, ::1] dst = out
    cdef Py_ssize_t y, x
    cdef double acc
    with nogil:
        for y in range(h2):
            for x in range(w2):
                acc = src[2 * y, 2 * x] + src[2 * y, 2 * x + 1]
                acc = acc + src[2 * y + 1, 2 * x]
                acc = acc + src[2 * y + 1, 2 * x + 1]
                dst[y, x] = acc * 0.25
    return out
