"""Differential geometry on coordinate charts and left-invariant frames."""

from .calculus import (
    alt,
    c_wedge,
    christoffel,
    codifferential,
    codifferential_hodge,
    exterior_d,
    gauge_curvature,
    gauge_nabla,
    hodge_star,
    interior,
    levi_civita,
    lie_bracket,
    metricity,
    nabla_covariant,
    nabla_vector,
    ricci,
    riemann,
    riemann_ricci_scalar,
    scalar_curvature,
    skew_connection,
    torsion,
    wedge,
)
from .fields import (
    FieldJets,
    FormField,
    GaugeData,
    GeometryError,
    ManifoldModel,
    MetricField,
    TensorField,
)

__all__ = [
    "FieldJets",
    "FormField",
    "GaugeData",
    "GeometryError",
    "ManifoldModel",
    "MetricField",
    "TensorField",
    "alt",
    "c_wedge",
    "christoffel",
    "codifferential",
    "codifferential_hodge",
    "exterior_d",
    "gauge_curvature",
    "gauge_nabla",
    "hodge_star",
    "interior",
    "levi_civita",
    "lie_bracket",
    "metricity",
    "nabla_covariant",
    "nabla_vector",
    "ricci",
    "riemann",
    "riemann_ricci_scalar",
    "scalar_curvature",
    "skew_connection",
    "torsion",
    "wedge",
]
