import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

openmp = [] if os.environ.get("WAKE_RADON_NO_OPENMP") else ["-fopenmp"]

ext = Extension(
    "wake_radon._kernels",
    ["src/wake_radon/_kernels.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O3"] + openmp,
    extra_link_args=openmp,
)

setup(ext_modules=cythonize([ext], language_level=3))
