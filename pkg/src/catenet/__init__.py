"""Numerical workbench for minimal surfaces in H2 x R built by gluing
horizontal catenoids along geodesic networks of the hyperbolic plane."""

__version__ = "0.1.0"
