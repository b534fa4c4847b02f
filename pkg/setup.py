"""Build script for the optional compiled attention kernel.

The package works without the extension (a numpy fallback is selected at
import time); building it just makes training faster.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "retrank.ranker._band_attn",
                sources=["src/retrank/ranker/_band_attn.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
