"""Build script for the optional compiled kernels.

The package works without the extension: `wixup._backend` falls back to the
pure-Python kernels when `wixup._kernels` failed to build or import.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "wixup._kernels",
                ["src/wixup/_kernels.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
