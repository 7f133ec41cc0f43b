"""Builds the optional Cython kernels; the package runs without them."""

import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing or failing: keep the pure-Python path
            print(f"warning: compiled kernels not built ({exc}); using pure-Python fallbacks")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: extension {ext.name} not built ({exc})")


def extensions():
    if os.environ.get("HAZARDOPS_NO_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    from setuptools import Extension

    flags = ["-O3", "-fcx-limited-range"]
    mods = [
        Extension("hazardops.structural._newmark", ["src/hazardops/structural/_newmark.pyx"],
                  include_dirs=[np.get_include()], extra_compile_args=["-O3"]),
        Extension("hazardops.autodiff._fftcore", ["src/hazardops/autodiff/_fftcore.pyx"],
                  include_dirs=[np.get_include()], extra_compile_args=flags),
        Extension("hazardops.autodiff._actcore", ["src/hazardops/autodiff/_actcore.pyx"],
                  include_dirs=[np.get_include()], extra_compile_args=["-O3"], libraries=["m"]),
    ]
    return cythonize(mods, compiler_directives={"language_level": "3"}, quiet=True)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
