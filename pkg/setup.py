"""Optional build of the compiled hot kernels; the package works without them."""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("SNITCHSIM_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("snitchsim._native", ["src/snitchsim/_native.pyx"], libraries=["m"])],
            compiler_directives={"language_level": 3},
            quiet=True,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
