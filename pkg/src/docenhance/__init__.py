"""Document image enhancement, lighting augmentation, and IQA benchmarking.

The package splits into small layers:

* :mod:`docenhance.imaging` - normalized rasters and PNG/PPM I/O,
* :mod:`docenhance.enhance` - classical illumination removal,
* :mod:`docenhance.augment` - lighting transfer for training pairs,
* :mod:`docenhance.iqa` - full-reference metrics and the metric gate,
* :mod:`docenhance.harness` - corpus evaluation and reports,
* :mod:`docenhance.server` - the human review service,
* :mod:`docenhance._kernels` - compiled/NumPy pixel kernels.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .augment import (
    AugmentConfig,
    AugmentedPair,
    Provenance,
    SurfaceBank,
    apply_surface,
    extract_surface,
    laplacian_energy,
    make_augmented_set,
    sample_crops,
)
from .enhance import (
    EPS_L,
    IlluminationSurface,
    ToneParams,
    enhance_document,
    estimate_illumination,
    retinex_divide,
    tone_map,
)
from .imaging import Image, Plane, Region, crop, load_image, resample, save_image, to_luminance
from .iqa import (
    EvalTriple,
    GateReport,
    MetricDescriptor,
    gate_metrics,
    ms_ssim,
    pixel_stats,
    psnr,
    rank_metrics,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentConfig",
    "AugmentedPair",
    "EPS_L",
    "EvalTriple",
    "GateReport",
    "Image",
    "IlluminationSurface",
    "KERNEL_BACKEND",
    "MetricDescriptor",
    "Plane",
    "Provenance",
    "Region",
    "SurfaceBank",
    "ToneParams",
    "apply_surface",
    "crop",
    "enhance_document",
    "estimate_illumination",
    "extract_surface",
    "gate_metrics",
    "laplacian_energy",
    "load_image",
    "make_augmented_set",
    "ms_ssim",
    "pixel_stats",
    "psnr",
    "rank_metrics",
    "resample",
    "retinex_divide",
    "sample_crops",
    "save_image",
    "to_luminance",
    "tone_map",
    "__version__",
]
