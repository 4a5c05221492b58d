from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf8") as fh:
    long_description = fh.read()

setup(
    install_requires=["numpy>=1.20", "scipy>=1.6"],
    extras_require={
        "tests": ["pytest", "pytest-asyncio"],
    },
    name="weakvalue",
    version="0.1.0",
    description="Simulator for weak-value polarization measurements with walk-off crystals and SPAD-array readout.",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests"]),
    keywords="weak value quantum measurement polarization simulation",
    platform="any",
    classifiers=[
        "Programming Language :: Python :: 3.7",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Physics",
    ],
    entry_points={
        "console_scripts": ["weakvalue=weakvalue.cli:main"],
    },
    package_data={
        "weakvalue": ["py.typed"],
    },
    include_package_data=True,
    python_requires=">=3.7",
)
