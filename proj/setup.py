import subprocess
import sys
from pathlib import Path

from setuptools import setup
from setuptools.command.build_ext import build_ext
from setuptools.extension import Extension


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        out_dir = Path(self.get_ext_fullpath(ext.name)).parent.resolve()
        out_dir.mkdir(parents=True, exist_ok=True)
        source_dir = Path(__file__).parent.resolve()
        build_dir = Path(self.build_temp).resolve() / "cmake"
        build_dir.mkdir(parents=True, exist_ok=True)

        configure = [
            "cmake",
            str(source_dir),
            f"-DCMAKE_LIBRARY_OUTPUT_DIRECTORY={out_dir}",
            f"-DPython3_EXECUTABLE={sys.executable}",
            "-DCMAKE_BUILD_TYPE=Release",
            "-DVINFER_BUILD_TESTS=OFF",
            "-DVINFER_BUILD_CLI=OFF",
        ]
        try:
            pybind11_dir = subprocess.run(
                [sys.executable, "-m", "pybind11", "--cmakedir"],
                capture_output=True,
                text=True,
                check=True,
            ).stdout.strip()
            configure.append(f"-Dpybind11_DIR={pybind11_dir}")
        except (OSError, subprocess.CalledProcessError):
            pass
        subprocess.run(configure, cwd=build_dir, check=True)
        subprocess.run(
            ["cmake", "--build", ".", "--target", "_core", "--parallel"],
            cwd=build_dir,
            check=True,
        )


setup(
    packages=["vinfer"],
    package_dir={"": "python"},
    ext_modules=[CMakeExtension("vinfer._core")],
    cmdclass={"build_ext": CMakeBuild},
    zip_safe=False,
)
