"""
rsglinear - Linear-family long-horizon time-series forecasting
Linear, NLinear, DLinear, RLinear, GLinear and the residual RS-GLinear,
with a reproducible benchmark harness.

pip install -e ".[dev]"
"""

from setuptools import setup, find_packages
import os


setup(
    name="rsglinear",
    version="1.0.0",
    description="rsglinear: linear-family long-horizon forecasting with residual GLinear blocks",
    long_description=open("README.md", encoding="utf-8").read() if os.path.exists("README.md") else "",
    long_description_content_type="text/markdown",
    license="MIT",
    keywords=[
        "time-series", "forecasting", "long-horizon", "linear", "dlinear",
        "nlinear", "revin", "gelu", "residual", "benchmark",
    ],
    packages=find_packages(exclude=["tests", "tests.*"]),
    package_data={
        "rsg_registry": ["*.json"],
        "rsglinear": ["config/*.json"],
    },
    include_package_data=True,
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.8",
        "pandas>=1.5",
    ],
    extras_require={
        "dev": ["pytest>=7.0", "pytest-cov"],
    },
    entry_points={
        "console_scripts": [
            "rsglinear=rsglinear.cli:main",
        ],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
)
