"""Low-level raster kernels with a compiled fast path.

The hot loops (rank filters, box blur, Laplacian energy, bilinear
resampling, Gaussian windowing, dyadic downsampling) exist twice: a Cython
extension (``_native``) and a pure NumPy fallback (``_pure``) with
identical semantics. The backend is chosen once at import time; set
``DOCENHANCE_KERNELS=native`` or ``=pure`` to force one (``auto`` prefers
the extension and silently falls back).
"""

import os

from . import _pure

_CHOICE = os.environ.get("DOCENHANCE_KERNELS", "auto").strip().lower()
if _CHOICE not in ("auto", "native", "pure"):
    raise RuntimeError(
        "DOCENHANCE_KERNELS must be 'auto', 'native' or 'pure', got %r" % _CHOICE
    )

_impl = None
if _CHOICE in ("auto", "native"):
    try:
        from . import _native as _impl
    except ImportError:
        if _CHOICE == "native":
            raise RuntimeError(
                "DOCENHANCE_KERNELS=native but the compiled extension is not available"
            )
        _impl = None
if _impl is None:
    _impl = _pure

#: Name of the backend actually in use: "native" or "pure".
BACKEND = "pure" if _impl is _pure else "native"

max_filter = _impl.max_filter
min_filter = _impl.min_filter
box_blur = _impl.box_blur
laplacian_abs_sum = _impl.laplacian_abs_sum
resample_bilinear = _impl.resample_bilinear
gaussian_valid = _impl.gaussian_valid
downsample2x = _impl.downsample2x


def available_backends():
    """Map of importable backend name -> module (for tests and benchmarks)."""
    out = {"pure": _pure}
    try:
        from . import _native
    except ImportError:
        pass
    else:
        out["native"] = _native
    return out
