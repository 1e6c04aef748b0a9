import sys

from setuptools import Extension, setup


def _extensions():
    """Cythonize the kernel extension; skip it when the toolchain is absent.

    The package works without the compiled backend (a NumPy fallback is
    selected at import time), so a missing Cython/compiler should not make
    the install fail.
    """
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        sys.stderr.write(
            "docenhance: building without the native kernel extension (%s)\n" % exc
        )
        return []
    ext = Extension(
        "docenhance._kernels._native",
        sources=["src/docenhance/_kernels/_native.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=_extensions())
