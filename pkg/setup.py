import platform

from setuptools import Extension, setup

# hardware popcount on x86-64; elsewhere the builtin picks its own lowering
CFLAGS = ["-O3"]
if platform.machine().lower() in ("x86_64", "amd64"):
    CFLAGS.append("-mpopcnt")

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; kernels fall back to numpy
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "fdrbmf._kernels",
                ["src/fdrbmf/_kernels.pyx"],
                extra_compile_args=CFLAGS,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
