#!/usr/bin/env python
# -*- encoding: utf-8 -*-
from __future__ import absolute_import
from __future__ import print_function

import io
from os.path import dirname
from os.path import join

from setuptools import find_packages
from setuptools import setup


def read(*names, **kwargs):
    return io.open(
        join(dirname(__file__), *names), encoding=kwargs.get("encoding", "utf8")
    ).read()


setup(
    name="hrisim",
    version="0.1.0",
    license="MIT",
    description="Channel estimation studies for hybrid reflecting and sensing metasurfaces",
    long_description=read("README.rst"),
    author="hrisim developers",
    packages=find_packages("src"),
    package_dir={"": "src"},
    package_data={"hrisim": ["configs/*.toml"]},
    include_package_data=True,
    zip_safe=False,
    python_requires=">=3.7",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: Unix",
        "Operating System :: POSIX",
        "Operating System :: Microsoft :: Windows",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.7",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: Implementation :: CPython",
        "Topic :: Scientific/Engineering",
    ],
    keywords=["channel estimation", "reconfigurable intelligent surface", "LMMSE", "Monte Carlo"],
    install_requires=[
        "numpy >= 1.17",
        "scipy >= 1.3",
        "pandas >= 0.25",
        "attrs >= 19.3",
        "tqdm >= 4.29",
        "psutil >= 5.4",
        "toml >= 0.9",
        "appdirs >= 1.4",
    ],
    extras_require={
        "dev": [
            "pytest",
            "sphinx",
            "bumpversion",
            "twine",
            "black",
            "mypy",
            "flake8",
        ]
    },
    entry_points={"console_scripts": ["hrisim = hrisim.main:main"]},
)
