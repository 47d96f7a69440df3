from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # pure-Python fallback is selected at import time
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("buildmst._ckernels", ["src/buildmst/_ckernels.pyx"], optional=True)],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
