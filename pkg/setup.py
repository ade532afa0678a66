# -*- coding: utf-8 -*-
"""
Setup script for rkMPC.

Version: 1.0.1     (October 2026)
"""

from setuptools import setup, find_packages

setup(
    name="rkMPC",
    version="1.0.1",
    packages=find_packages(exclude=["tests", "tests.*", "output", "*.output", "*.output.*"]),
    install_requires=[
        "numpy >= 1.20",
        "scipy >= 1.6",
        "matplotlib >= 3",
        "joblib >= 1",
        "torch >= 1.10",
        "pyyaml >= 5",
    ],
    extras_require={"tests": ["pytest >= 6", "hypothesis >= 6"]},
    entry_points={"console_scripts": ["rkmpc = rkMPC.cli:main"]},
    include_package_data=True,
    zip_safe=False,
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Topic :: Scientific/Engineering",
        "Operating System :: MacOS :: MacOS X",
        "Operating System :: Microsoft :: Windows",
        "Operating System :: POSIX",
        "Programming Language :: Python :: 3",
    ],
)
