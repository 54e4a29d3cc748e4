import numpy as np
from Cython.Build import cythonize
from setuptools import setup

setup(
    ext_modules=cythonize(
        ["src/metasir/_kernels/_fast.pyx"],
        language_level="3",
    ),
    include_dirs=[np.get_include()],
)
