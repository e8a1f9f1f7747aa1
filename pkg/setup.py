"""Build script: compiles the optional fast kernels when Cython is available.

The package is fully functional without the extension; `tigload._kernels`
falls back to the vectorized reference implementation at import time.
Build in place with:  python setup.py build_ext --inplace
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "tigload._kernels._speedups",
                ["src/tigload/_kernels/_speedups.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
