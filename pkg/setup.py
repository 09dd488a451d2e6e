"""Build script. The compiled convolution kernels are optional: if Cython or a
C compiler is unavailable the package installs anyway and falls back to the
pure-numpy kernels at import time."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("TOONFUSE_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "toonfuse._kernels._conv_cy",
                    ["src/toonfuse/_kernels/_conv_cy.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
