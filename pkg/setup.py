"""Build the optional compiled core; the package falls back to numpy without it."""

import os
import platform
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler or Cython missing
            print(f"warning: compiled core not built ({exc}); using numpy fallback", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to build {ext.name} ({exc}); using numpy fallback", file=sys.stderr)


def _has_avx2():
    try:
        with open("/proc/cpuinfo") as fh:
            return any(line.startswith("flags") and " avx2" in line and " fma" in line for line in fh)
    except OSError:
        return False


def extensions():
    if os.environ.get("MMRL_NO_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    compile_args = ["-O3"]
    libraries = ["m"]
    # vectorised libm calls (libmvec) need fast-math and an AVX2 target
    if sys.platform.startswith("linux") and platform.machine() == "x86_64" and _has_avx2():
        compile_args += ["-ffast-math", "-mavx2", "-mfma"]
        libraries = ["mvec", "m"]
    ext = Extension(
        "mmrl._core",
        ["src/mmrl/_core.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=compile_args,
        libraries=libraries,
    )
    return cythonize([ext], compiler_directives={"language_level": "3"}, quiet=True)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
