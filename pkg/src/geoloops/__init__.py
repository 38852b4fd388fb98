"""Short homotopies of curves and geodesics between two points on triangulated surfaces."""

__version__ = "0.1.0"
