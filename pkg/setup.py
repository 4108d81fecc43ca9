"""Build script for the compiled simulation kernels.

The package works without the extension (a pure-Python engine is selected
at import time), so failure to cythonize is downgraded to a warning.
"""

import warnings

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext = Extension(
        "alloclab._kernels",
        sources=["src/alloclab/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    ext_modules = cythonize([ext], language_level=3)
except Exception as exc:  # no cython/numpy at build time: ship pure Python
    warnings.warn(f"building without compiled kernels: {exc}")

setup(ext_modules=ext_modules)
