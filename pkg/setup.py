"""Build the optional compiled kernel extension.

The package works without the extension (a pure-Python/numpy fallback is
selected at import time); the extension only accelerates the hot loops.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext = Extension(
        "stableweb._backend._ckernels",
        ["src/stableweb/_backend/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize([ext], language_level=3)
except Exception as exc:  # pragma: no cover - build-environment dependent
    sys.stderr.write(f"stableweb: building without compiled kernels ({exc})\n")

setup(ext_modules=ext_modules)
