import os

import numpy
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("ORTHOSPEC_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:  # fall back to the pure-Python kernel
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [Extension("orthospec._ckernel", ["src/orthospec/_ckernel.pyx"],
                       include_dirs=[numpy.get_include()], language="c++",
                       extra_compile_args=["-O3"],
                       define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")])],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
