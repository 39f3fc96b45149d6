"""Simulation and verification toolkit for two-phase heat conductors.

The medium has conductivity ``sigma_plus`` inside a bounded inclusion and
``sigma_minus`` outside.  The toolkit solves the heat Cauchy problem started
from the indicator of the inclusion, the elliptic transmission problem it
transforms into, and runs geometric moving-plane scans that detect whether
the inclusion is a ball.  Interface traces of the solutions quantify how far
the inclusion is from making its boundary an isothermic surface.
"""

__version__ = "0.1.0"

from .errors import (
    AmbiguousEventWarning,
    ConfigError,
    DegenerateDirection,
    FrameFitError,
    NoConvergence,
    ReflectionLeavesGrid,
    SampleOutsideGrid,
    SamplingFailure,
    SingularMatching,
    SingularOperator,
    StencilCollision,
)

__all__ = [
    "__version__",
    "AmbiguousEventWarning",
    "ConfigError",
    "DegenerateDirection",
    "FrameFitError",
    "NoConvergence",
    "ReflectionLeavesGrid",
    "SampleOutsideGrid",
    "SamplingFailure",
    "SingularMatching",
    "SingularOperator",
    "StencilCollision",
]
