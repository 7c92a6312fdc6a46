"""Build script: compiles the optional native kernel extension.

The package works without the extension (pure NumPy/Python fallbacks are
selected at import time); building it just makes the alignment DP and the
convolution kernels faster. If Cython or a C compiler is unavailable the
build degrades gracefully to a pure-Python install.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "plfkit.kernels._native",
                ["src/plfkit/kernels/_native.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
