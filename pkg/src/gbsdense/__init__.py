"""Gaussian boson sampling on time-bin loop interferometers.

The package simulates Gaussian states of optical modes, the lossy
transfer matrices of fiber-loop time-bin interferometers, the exact
photon-detection statistics of such devices, and the dense-subgraph
search experiments that use those statistics as a sampling resource.
"""

from .errors import ConfigError, GuardError

__all__ = ["ConfigError", "GuardError", "__version__"]

__version__ = "0.1.0"
