from setuptools import Extension, setup
from Cython.Build import cythonize

extensions = [
    Extension(
        "treematch._dpcore",
        ["src/treematch/_dpcore.pyx"],
        extra_compile_args=["-O3", "-funroll-loops"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
