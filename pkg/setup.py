"""Build script for the optional compiled simulation kernel.

The package is fully functional without the extension: mjlq._backend falls
back to the pure-Python twin of the kernel if the compiled module is absent.
A failed C build therefore degrades the install instead of breaking it.
"""

import numpy
from setuptools import setup
from setuptools.command.build_ext import build_ext
from setuptools.errors import CCompilerError, ExecError, PlatformError

from Cython.Build import cythonize

ext_modules = cythonize(
    [
        "src/mjlq/_pathsim.pyx",
    ],
    compiler_directives={
        "language_level": "3",
        "boundscheck": False,
        "wraparound": False,
        "cdivision": True,
    },
)

for ext in ext_modules:
    ext.include_dirs.append(numpy.get_include())
    ext.define_macros.append(("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION"))
    ext.extra_compile_args.append("-O3")


class optional_build_ext(build_ext):
    """Let the install continue with the pure-Python kernel if the C build fails."""

    def run(self):
        try:
            super().run()
        except (CCompilerError, ExecError, PlatformError) as exc:
            print(f"WARNING: compiled kernel skipped ({exc}); using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except (CCompilerError, ExecError, PlatformError, ValueError) as exc:
            print(f"WARNING: {ext.name} skipped ({exc}); using pure-Python fallback")


setup(
    ext_modules=ext_modules,
    cmdclass={"build_ext": optional_build_ext},
)
