import glob

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

core_sources = sorted(
    s for s in glob.glob("src/*.cpp") if not s.endswith("pybind.cpp")
)

ext = Pybind11Extension(
    "ecgforge._ecgforge",
    ["src/pybind.cpp", *core_sources],
    include_dirs=["include", "vendor"],
    cxx_std=20,
    extra_compile_args=["-O3"],
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
