"""Manifold models and expression-valued tensor fields.

Two backends share one evaluation path.  A ``chart`` model is a single
global coordinate chart whose frame is ``e_i = d/dx^i``; a ``lie_group``
model uses a left-invariant frame with constant structure constants and
constant field components, so every point looks like the identity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from ..exprs import Expr, Jet, evaluate, jinv, parse
from ..fiber import QuadraticForm
from . import calculus as calc

JACOBI_TOL = 1e-12


class GeometryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ManifoldModel:
    kind: str
    n: int
    coords: tuple = ()
    structure: np.ndarray | None = None
    box: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("chart", "lie_group"):
            raise GeometryError(f"unknown model kind {self.kind!r}")
        if self.n < 1:
            raise GeometryError("dimension must be positive")
        C = np.zeros((self.n,) * 3) if self.structure is None else np.asarray(self.structure, dtype=float)
        if C.shape != (self.n,) * 3:
            raise GeometryError(f"structure constants must have shape {(self.n,) * 3}")
        if self.kind == "chart":
            if len(self.coords) != self.n:
                raise GeometryError(f"chart needs {self.n} coordinate names, got {len(self.coords)}")
            if np.any(C):
                raise GeometryError("a coordinate chart has vanishing frame commutators")
        if not np.allclose(C, -C.swapaxes(0, 1), atol=JACOBI_TOL, rtol=0):
            raise GeometryError("structure constants must be antisymmetric in their lower indices")
        if calc.structure_jacobi_residual(C) > JACOBI_TOL:
            raise GeometryError("structure constants violate the Jacobi identity")
        box = self.box
        if box is None:
            box = tuple((0.0, 2 * np.pi) for _ in range(self.n))
        box = tuple((float(lo), float(hi)) for lo, hi in box)
        if len(box) != self.n:
            raise GeometryError("sampling box has the wrong dimension")
        object.__setattr__(self, "structure", C)
        object.__setattr__(self, "coords", tuple(self.coords))
        object.__setattr__(self, "box", box)

    @property
    def expr_coords(self) -> tuple:
        """Names usable inside field expressions (none for a group model)."""
        return self.coords if self.kind == "chart" else ()

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Sample points; a left-invariant model has a single representative point."""
        if self.kind == "lie_group":
            return np.zeros((1, self.n))
        lo = np.array([b[0] for b in self.box])
        hi = np.array([b[1] for b in self.box])
        return lo + (hi - lo) * rng.random((count, self.n))

    def expr_points(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if self.kind == "chart":
            return points
        return np.zeros(points.shape[:-1] + (0,))


def _parse_component(value, model: ManifoldModel, params: Sequence[str]):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        return parse(value, model.expr_coords, params)
    raise GeometryError(f"field component must be a number or expression, got {value!r}")


@dataclass(frozen=True, eq=False)
class TensorField:
    """Array of scalar fields (numbers or parsed expressions)."""

    components: np.ndarray  # object array

    @classmethod
    def parse(cls, data, shape: tuple, model: ManifoldModel, params: Sequence[str], what: str = "field"):
        arr = np.empty(shape, dtype=object)
        _fill(arr, data, shape, model, params, what, ())
        return cls(arr)

    @classmethod
    def constant(cls, values) -> "TensorField":
        v = np.asarray(values, dtype=float)
        arr = np.empty(v.shape, dtype=object)
        for idx in np.ndindex(v.shape):
            arr[idx] = float(v[idx])
        return cls(arr)

    @property
    def shape(self) -> tuple:
        return self.components.shape

    def jet(self, model: ManifoldModel, points: np.ndarray, params: Mapping[str, float]) -> Jet:
        points = np.asarray(points, dtype=float)
        batch = points.shape[:-1]
        n = model.n
        N = 1 + n + n * n
        c = np.zeros(batch + self.shape + (N,))
        ep = model.expr_points(points)
        for idx in np.ndindex(self.shape):
            comp = self.components[idx]
            if isinstance(comp, Expr):
                c[(Ellipsis,) + idx + (slice(None),)] = evaluate(comp, ep, params, n=n).c
            elif comp:
                c[(Ellipsis,) + idx + (0,)] = comp
        return Jet(c, n, 2)

    @property
    def is_constant(self) -> bool:
        return all(not isinstance(c, Expr) or c.is_constant for c in self.components.flat)


def _fill(arr, data, shape, model, params, what, prefix):
    if len(shape) == 0:
        arr[()] = _parse_component(data, model, params)
        return
    if not isinstance(data, (list, tuple)) or len(data) != shape[0]:
        where = "".join(f"[{i}]" for i in prefix)
        got = len(data) if isinstance(data, (list, tuple)) else "scalar"
        raise GeometryError(f"{what}{where}: expected {shape[0]} entries, got {got}")
    for i, item in enumerate(data):
        if len(shape) == 1:
            arr[prefix + (i,)] = _parse_component(item, model, params)
        else:
            _fill(arr, item, shape[1:], model, params, what, prefix + (i,))


@dataclass(frozen=True, eq=False)
class MetricField:
    field: TensorField

    def __post_init__(self):
        comps = self.field.components
        if comps.ndim != 2 or comps.shape[0] != comps.shape[1]:
            raise GeometryError("metric must be a square matrix of fields")
        for i, j in itertools.combinations(range(comps.shape[0]), 2):
            a, b = comps[i, j], comps[j, i]
            if str(a) != str(b) and not (isinstance(a, float) and isinstance(b, float) and a == b):
                raise GeometryError(f"metric is not symmetric: entries ({i},{j}) and ({j},{i}) differ")

    def jet(self, model, points, params) -> Jet:
        return self.field.jet(model, points, params)

    def signature(self, model, points, params) -> tuple:
        """``(positive, negative)`` counts, checked constant over ``points``."""
        vals = self.jet(model, points, params).val
        sigs = set()
        for idx in np.ndindex(vals.shape[:-2]):
            w = np.linalg.eigvalsh(vals[idx])
            if np.min(np.abs(w)) < 1e-10:
                raise GeometryError(f"metric is singular at point {np.asarray(points)[idx]}")
            sigs.add((int((w > 0).sum()), int((w < 0).sum())))
        if len(sigs) > 1:
            raise GeometryError(f"metric signature changes across points: {sorted(sigs)}")
        return sigs.pop()


@dataclass(frozen=True, eq=False)
class FormField:
    """A k-form given by its strictly increasing components."""

    degree: int
    n: int
    entries: tuple  # ((i1, ..., ik), component)

    @classmethod
    def parse(cls, degree: int, model: ManifoldModel, items, params: Sequence[str], what: str = "form"):
        entries = []
        seen = set()
        for pos, item in enumerate(items or []):
            idx = tuple(int(i) for i in item["idx"])
            if len(idx) != degree:
                raise GeometryError(f"{what} entry {pos}: expected {degree} indices")
            if any(b <= a for a, b in zip(idx, idx[1:])):
                raise GeometryError(f"{what} entry {pos}: indices must be strictly increasing")
            if any(i < 0 or i >= model.n for i in idx):
                raise GeometryError(f"{what} entry {pos}: index out of range")
            if idx in seen:
                raise GeometryError(f"{what} entry {pos}: duplicate component {list(idx)}")
            seen.add(idx)
            entries.append((idx, _parse_component(item["expr"], model, params)))
        return cls(degree, model.n, tuple(entries))

    def jet(self, model, points, params) -> Jet:
        points = np.asarray(points, dtype=float)
        batch = points.shape[:-1]
        n = self.n
        N = 1 + n + n * n
        c = np.zeros(batch + (n,) * self.degree + (N,))
        ep = model.expr_points(points)
        for idx, comp in self.entries:
            if isinstance(comp, Expr):
                val = evaluate(comp, ep, params, n=n).c
            else:
                val = np.zeros(N)
                val[0] = comp
            for p in itertools.permutations(range(self.degree)):
                c[(Ellipsis,) + tuple(idx[q] for q in p) + (slice(None),)] = calc.perm_sign(p) * val
        return Jet(c, n, 2)


@dataclass(frozen=True, eq=False)
class GaugeData:
    """Lie algebra ``g`` with ``[t_a, t_b] = f[a, b, c] t_c``, pairing ``c`` and potential ``A[i, a]``."""

    structure: np.ndarray
    c: QuadraticForm
    A: TensorField
    factors: tuple = ()  # ((name, start, stop), ...)

    def __post_init__(self):
        f = np.asarray(self.structure, dtype=float)
        m = self.c.dim
        if f.shape != (m, m, m):
            raise GeometryError(f"gauge structure constants must have shape {(m, m, m)}")
        if not np.allclose(f, -f.swapaxes(0, 1), atol=1e-12, rtol=0):
            raise GeometryError("gauge structure constants must be antisymmetric")
        if calc.structure_jacobi_residual(f) > JACOBI_TOL:
            raise GeometryError("gauge structure constants violate the Jacobi identity")
        if ad_invariance_residual(f, self.c.matrix) > 1e-12:
            raise GeometryError("pairing c is not ad-invariant")
        if self.A.shape[1:] != (m,):
            raise GeometryError(f"gauge potential must have {m} algebra components per row")
        object.__setattr__(self, "structure", f)

    @property
    def m(self) -> int:
        return self.c.dim

    @classmethod
    def trivial(cls, n: int) -> "GaugeData":
        return cls(np.zeros((0, 0, 0)), QuadraticForm(np.zeros((0, 0))), TensorField.constant(np.zeros((n, 0))))


def ad_invariance_residual(f: np.ndarray, c: np.ndarray) -> float:
    """Max of ``|c([z, w], u) + c(w, [z, u])|`` over basis triples."""
    if f.size == 0:
        return 0.0
    # cad[a, b, d] = c([t_a, t_b], t_d)
    cad = np.einsum("abx,xd->abd", f, c)
    return float(np.max(np.abs(cad + cad.swapaxes(1, 2))))


@dataclass(eq=False)
class FieldJets:
    """All background fields as jets at a batch of points, with derived tensors cached."""

    C: np.ndarray
    fstruct: np.ndarray
    cmat: np.ndarray
    g: Jet
    H: Jet
    A: Jet
    phi: Jet
    points: np.ndarray
    index: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.g.shape[-1]

    @property
    def m(self) -> int:
        return self.cmat.shape[0]

    @property
    def batch(self) -> tuple:
        return self.g.shape[:-2]

    @cached_property
    def ginv(self) -> Jet:
        return jinv(self.g)

    @cached_property
    def Gam(self) -> Jet:
        return calc.christoffel(self.g, self.C, self.ginv)

    @cached_property
    def Riem(self) -> Jet:
        return calc.riemann(self.Gam, self.C)

    @cached_property
    def Ric(self) -> Jet:
        return calc.ricci(self.Riem)

    @cached_property
    def S(self) -> Jet:
        return calc.scalar_curvature(self.Ric, self.ginv)

    @cached_property
    def F(self) -> Jet:
        return calc.gauge_curvature(self.A, self.C, self.fstruct)

    def skew(self, kappa: float) -> Jet:
        key = ("skew", float(kappa))
        if key not in self.extras:
            self.extras[key] = calc.skew_connection(self.Gam, self.ginv, self.H, kappa)
        return self.extras[key]
