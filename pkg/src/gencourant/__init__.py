"""Transitive Courant algebroids, their torsion-free generalized connections,
generalized Ricci curvature and the supergravity equations of motion, evaluated
pointwise on desk-scale scenes with second-order jets."""

__version__ = "0.1.0"
