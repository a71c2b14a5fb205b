import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "qrchaos._core._kernels",
                ["src/qrchaos/_core/_kernels.pyx"],
                extra_compile_args=["-O3"],
                include_dirs=[numpy.get_include()],
            )
        ],
        language_level=3,
    )
except Exception:
    # Pure-python fallback backend is selected at import time when the
    # compiled core is unavailable.
    ext_modules = []

setup(ext_modules=ext_modules)
