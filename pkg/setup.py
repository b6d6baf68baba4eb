"""Build script: compiles the optional Cython kernel core.

If Cython or numpy is unavailable at build time the package installs
without the extension and falls back to the pure-Python kernels.
"""
from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension
except ImportError:  # pragma: no cover - build without the compiled core
    pass
else:
    ext_modules = cythonize(
        [
            Extension(
                "nklab._kernels",
                ["src/nklab/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # no fast-math / FMA contraction: results must match the
                # pure-Python kernels bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
