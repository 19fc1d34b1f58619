import shlex
import subprocess
import sys

from setuptools import find_packages
from setuptools import setup

version = "0.1.0"


if sys.argv[-1] == "release":
    # Release via github-actions.
    commands = [
        f"git tag v{version:s}",
        "git push origin master --tag",
    ]
    for cmd in commands:
        print(f"+ {cmd}")
        subprocess.check_call(shlex.split(cmd))
    sys.exit(0)


setup_requires = []

with open("requirements.txt") as f:
    install_requires = []
    for line in f:
        req = line.split("#")[0].strip()
        if req:
            install_requires.append(req)

setup(
    name="egfcluster",
    version=version,
    description="Path-integral descriptors for clustering and crowd collectiveness",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    license="MIT",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Natural Language :: English",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: Implementation :: CPython",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    packages=find_packages(exclude=["tests", "tests.*"]),
    zip_safe=False,
    python_requires=">=3.8",
    setup_requires=setup_requires,
    install_requires=install_requires,
    extras_require={
        "test": ["pytest", "scikit-learn"],
    },
    entry_points={
        "console_scripts": [
            "egf-tool=egfcluster.apps.egf_tool:main",
        ],
    },
)
