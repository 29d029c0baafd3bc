"""Simulation library for end-of-horizon load-balancing policies:
balls-into-bins flexing, opaque-selling inventory cycles, and online
parcel-to-truck assignment with routing, plus an experiment harness."""

__version__ = "0.1.0"
