"""Build script for the optional compiled kernels.

The package works without the extension (a pure-numpy fallback is selected at
import time), but the compiled kernels are what make large verification
batches fast. Cython is only needed at build time; if it is missing the
install proceeds as pure Python.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "harmflow._kernels._core",
                ["src/harmflow/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
