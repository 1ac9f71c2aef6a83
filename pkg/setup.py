import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the Cython core if possible; otherwise fall back to pure Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            self.warn(f"compiled core not built ({exc}); using the pure-Python kernels")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self.warn(f"compiled core not built ({exc}); using the pure-Python kernels")


def extensions():
    if os.environ.get("ANYTIME_CS_PURE") == "1":
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    from setuptools import Extension

    ext = Extension(
        "anytime_cs._core",
        ["src/anytime_cs/_core.pyx"],
        extra_compile_args=["-O3"],
        libraries=["m"] if os.name == "posix" else [],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
