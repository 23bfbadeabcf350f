"""Build script: compiles the optional Cython kernel module.

The package works without the extension (a numpy fallback is selected at
import time), so any failure here degrades to a pure-Python install.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "nbpack._kernels",
                ["src/nbpack/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # noqa: BLE001 - any build-env gap means fallback
    print(f"nbpack: building without compiled kernels ({exc})")

setup(ext_modules=ext_modules)
