from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # the numpy fallback in plastodyn.kernels still works
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("plastodyn._ckernels", ["src/plastodyn/_ckernels.pyx"])],
        language_level="3",
    )

setup(ext_modules=ext_modules)
