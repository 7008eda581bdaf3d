"""Build script for the optional compiled assembly kernels.

The package works without the extension; ``convexlab._kernels`` falls back to
a vectorized numpy implementation when the compiled module is unavailable.
"""
import numpy as np
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
                "convexlab._kernels._assembly_cy",
                ["src/convexlab/_kernels/_assembly_cy.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
