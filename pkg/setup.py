"""Build script: compiles the dual-number hot kernel.

The package works without the extension (pure-Python fallback); the build
therefore tolerates a missing Cython toolchain.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("amdyn._dualcore", ["src/amdyn/_dualcore.pyx"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
