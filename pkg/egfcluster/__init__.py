# flake8: noqa

from importlib.metadata import PackageNotFoundError
from importlib.metadata import version

try:
    __version__ = version("egfcluster")
except PackageNotFoundError:
    __version__ = "0.0.0"
