"""Build script for the optional compiled search kernel.

The package is fully functional without the extension (a pure NumPy
kernel is selected at import time), so a failed compile downgrades to
a warning instead of aborting the install.
"""

import sys

from setuptools import setup
from setuptools.errors import CCompilerError, ExecError, PlatformError


def build_extensions():
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    extensions = [
        Extension(
            "sonahunt.index._kernel",
            ["src/sonahunt/index/_kernel.pyx"],
            include_dirs=[numpy.get_include()],
            extra_compile_args=["-O3"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
    ]
    return cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )


try:
    ext_modules = build_extensions()
except ImportError:
    print("sonahunt: Cython/numpy unavailable at build time, "
          "installing with the pure-Python kernel only", file=sys.stderr)
    ext_modules = []

try:
    setup(ext_modules=ext_modules)
except (CCompilerError, ExecError, PlatformError):
    print("sonahunt: compiled kernel build failed, "
          "retrying without it (pure-Python kernel will be used)", file=sys.stderr)
    setup(ext_modules=[])
