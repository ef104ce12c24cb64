import os

import numpy
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("HOLDERLAB_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [Extension("holderlab._kernels", ["src/holderlab/_kernels.pyx"], include_dirs=[numpy.get_include()])],
            compiler_directives={"language_level": 3},
        )

setup(ext_modules=ext_modules)
