"""Build script: compiles the acoustic field kernel when a toolchain is available.

The package works without the extension (a numpy fallback is selected at
import time), so a failed extension build is downgraded to a warning.
"""

import sys

from setuptools import setup


def _extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:
        print(f"sonomat: skipping extension build ({exc})", file=sys.stderr)
        return []
    return cythonize(
        [
            Extension(
                "sonomat.acoustics._fieldcore",
                ["src/sonomat/acoustics/_fieldcore.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        language_level=3,
    )


setup(ext_modules=_extensions())
