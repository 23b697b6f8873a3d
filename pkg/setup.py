"""Build the optional compiled kernel.

The package works without it (a NumPy fallback is selected at import);
the extension just makes the nearest-neighbour scans faster and
backend-independent of BLAS.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, otherwise install pure-Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, etc.
            print(f"warning: skipping compiled kernels ({exc}); "
                  f"NumPy fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: could not build {ext.name} ({exc}); "
                  f"NumPy fallback will be used")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [
            # -ffp-contract=off: no FMA contraction, so dot products
            # accumulate in strict IEEE order and results are
            # bit-identical across platforms (and to a plain Python loop);
            # OpenMP parallelism is over independent output rows only
            Extension(
                "dmner._kernels._native",
                ["src/dmner/_kernels/_native.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off", "-fopenmp"],
                extra_link_args=["-fopenmp"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
