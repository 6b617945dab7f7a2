"""Build script: compiles the optional interval-walk extension.

The package works without the extension (a pure-Python kernel is selected
at import time), so a failed compile only costs speed.  `pip install -e .
--no-build-isolation` builds it when Cython and a C compiler are present.
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Never let a broken toolchain block installation."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: skipping compiled kernel ({exc})", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: {ext.name} not built ({exc})", file=sys.stderr)


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        ["src/semstego/_kernel_cy.pyx"],
        compiler_directives={"language_level": 3},
    )


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
