"""Three-body elastic scattering of 1D bosons in the lowest hyperspherical channel."""

__version__ = "0.1.0"
