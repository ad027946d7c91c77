from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "qapipe._kernel._simkernel",
        ["src/qapipe/_kernel/_simkernel.pyx"],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "cdivision": True,
        },
    )
)
