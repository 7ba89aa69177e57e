"""Build script for the optional compiled row-generation kernel.

The package is fully functional without the extension; `lazydf.wisconsin`
falls back to the pure-Python kernel when `lazydf._rowgen` is missing.
Set LAZYDF_SKIP_EXT=1 to skip compiling it.
"""

import os

from setuptools import Extension, setup


def extensions():
    if os.environ.get("LAZYDF_SKIP_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [Extension("lazydf._rowgen", ["src/lazydf/_rowgen.pyx"])],
        language_level=3,
    )


setup(ext_modules=extensions())
