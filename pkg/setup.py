"""Build script for the optional compiled evaluation kernel.

The package is pure Python except for one Cython extension that
accelerates confusion-matrix accumulation. The extension is optional:
if Cython or a C compiler is unavailable the build falls back to the
numpy implementation selected at import time.

Build in place for development:

    python3 setup.py build_ext --inplace
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """build_ext that degrades to the pure-Python fallback on failure."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler / headers
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            "WARNING: compiled confusion kernel not built ({}); "
            "falling back to the numpy implementation".format(exc),
            file=sys.stderr,
        )


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print(
            "WARNING: Cython not available; skipping compiled confusion kernel",
            file=sys.stderr,
        )
        return []
    ext = Extension(
        "pixseg.evaluation._confusion_fast",
        sources=["src/pixseg/evaluation/_confusion_fast.pyx"],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
        },
    )


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
