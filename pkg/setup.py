"""Build hook for the optional compiled arrival kernel.

The package works without the extension; chainsim.simcore.kernels falls back
to the pure-Python twin when the import fails.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "chainsim.simcore._arrivals",
                ["src/chainsim/simcore/_arrivals.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level="3",
    )
except ImportError:
    # No Cython or numpy headers at build time: ship pure Python only.
    ext_modules = []

setup(ext_modules=ext_modules)
