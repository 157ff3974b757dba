"""Random Euler feature adaptive filters for complex nonlinear system identification."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("random-euler-filters")
except PackageNotFoundError:
    # Package not installed, use a default version
    __version__ = "0.0.0+unknown"

__description__ = (
    "Widely-linear random Euler feature filters, baselines and their mean-square theory"
)
