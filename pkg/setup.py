"""Build script: compiles the optional SMO extension module.

The package works without the extension (a NumPy fallback is selected at
import time), so any compilation failure downgrades to a warning instead of
aborting the install.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing entirely
            warnings.warn(f"skipping compiled SMO core ({exc}); "
                          "pcsvm will use the pure-Python solver")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"failed to build {ext.name} ({exc}); "
                          "pcsvm will use the pure-Python solver")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        warnings.warn("Cython not available; building without the compiled SMO core")
        return []
    return cythonize(
        [Extension("pcsvm._smo", ["src/pcsvm/_smo.pyx"])],
        language_level="3",
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
