import os, sys
from setuptools import setup, find_packages


def setup_package():
    __version__ = "0.1"
    setup(
        name="lqg_mc",
        description="Monte Carlo samplers for mated-CRT maps and LQG surfaces",
        version=__version__,
        license="MIT",
        install_requires=["argparse", "numpy", "scipy", "h5py", "em_util"],
        extras_require={"test": ["pytest"]},
        packages=find_packages(exclude=["tests", "examples"]),
        package_data={"lqg_mc": ["data/csv_schema.json"]},
        entry_points={"console_scripts": ["lqg-mc = lqg_mc.cli:main"]},
    )


if __name__ == "__main__":
    # pip install --editable .
    setup_package()
