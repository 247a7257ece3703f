import glob

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

ext = Pybind11Extension(
    "fabrid._fabrid",
    sorted(glob.glob("src/*.cpp")) + ["python/fabrid_py.cpp"],
    include_dirs=["include", "vendor"],
    libraries=["crypto"],
    cxx_std=20,
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
