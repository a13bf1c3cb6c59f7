"""Build script: compiles the optional accelerator extension.

The package works without the extension (a pure-Python backend is selected
at import time), so a failed compile downgrades to a warning instead of
aborting the install. Set SEALEDBID_NO_EXT=1 to skip the build entirely.
"""

import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            "WARNING: building sealedbid._core._speedups failed (%s); "
            "falling back to the pure-Python backend" % exc,
            file=sys.stderr,
        )


ext_modules = []
cmdclass = {}
if not os.environ.get("SEALEDBID_NO_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "sealedbid._core._speedups",
                    ["src/sealedbid/_core/_speedups.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
        cmdclass = {"build_ext": optional_build_ext}
    except ImportError:
        print(
            "WARNING: Cython not available; installing without the compiled backend",
            file=sys.stderr,
        )

setup(ext_modules=ext_modules, cmdclass=cmdclass)
