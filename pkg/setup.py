"""Build script: compiles the numerical core extension when a toolchain is
available.  The package runs without it (a pure-Python core is selected at
import), so a failed extension build downgrades to a warning instead of
aborting the install.
"""

import warnings

from setuptools import Extension, setup


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        warnings.warn("Cython not available; installing with pure-Python core only")
        return []
    ext = Extension(
        "btgp._core",
        sources=["src/btgp/_core.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions())
