"""Build hook for the optional compiled kernel extension.

The package is fully functional without the extension (a pure-numpy fallback is
selected at import time), so any failure here downgrades to a pure build rather
than aborting the install.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "trialengage._kernels._core",
                ["src/trialengage/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    import sys

    print(f"trialengage: building without compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
