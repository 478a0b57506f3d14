from setuptools import Extension, setup

from Cython.Build import cythonize

# -ffp-contract=off keeps the compiled kernels bit-identical to the NumPy
# fallback (no fused multiply-add contraction).
extensions = [
    Extension(
        "netflux._fvkernels",
        ["src/netflux/_fvkernels.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
