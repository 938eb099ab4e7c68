"""The transitive Courant algebroid ``E = T + ad P + T*`` in split form.

Sections are triples of jets ``(x, r, xi)`` with arbitrary leading batch
axes.  The Dorfman bracket is

* ``T``:   ``[x1, x2]``
* ``g``:   ``nabla_{x1} r2 - nabla_{x2} r1 - F(x1, x2) - [r1, r2]``
* ``T*``:  ``L_{x1} xi2 - i_{x2} d xi1 + H(x1, x2, .) + 2 c(nabla r1, r2)
  + 2 c(F(x1, .), r2) - 2 c(F(x2, .), r1)``

where ``nabla`` is the covariant derivative induced by the gauge potential.
The signs of the ``F(x1, x2)`` and ``[r1, r2]`` terms are exposed through
:class:`BracketConvention` so that the axiom checks can pin them.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from .exprs import Jet, jein
from .exprs.jet import random_germ
from .fiber import GeneralizedVector
from .geometry import calculus as calc
from .geometry.fields import FieldJets, FormField, GaugeData, ManifoldModel, MetricField, TensorField


@dataclass(frozen=True)
class BracketConvention:
    sigma_F: int = 1
    sigma_b: int = 1


PINNED = BracketConvention(1, 1)


# ---------- sections ----------

@dataclass(frozen=True, eq=False)
class Section:
    x: Jet
    r: Jet
    xi: Jet

    @property
    def n(self) -> int:
        return self.x.shape[-1]

    @property
    def m(self) -> int:
        return self.r.shape[-1]

    def __add__(self, o: "Section") -> "Section":
        return Section(self.x + o.x, self.r + o.r, self.xi + o.xi)

    def __sub__(self, o: "Section") -> "Section":
        return Section(self.x - o.x, self.r - o.r, self.xi - o.xi)

    def __neg__(self) -> "Section":
        return Section(-self.x, -self.r, -self.xi)

    def __mul__(self, s: float) -> "Section":
        return Section(self.x * s, self.r * s, self.xi * s)

    __rmul__ = __mul__

    def scale(self, f: Jet) -> "Section":
        """Multiply by a scalar function ``f`` (a jet with the batch shape)."""
        return Section(jein("...,...i->...i", f, self.x), jein("...,...i->...i", f, self.r),
                       jein("...,...i->...i", f, self.xi))

    def flat(self) -> Jet:
        return Jet(np.concatenate([self.x.c, self.r.c, self.xi.c], axis=-2), self.x.n,
                   min(self.x.order, self.r.order, self.xi.order))

    def value(self) -> np.ndarray:
        """Flat ``(x, r, xi)`` values at the base points."""
        return self.flat().value()

    def vector(self, index=()) -> GeneralizedVector:
        v = self.value()[index]
        return GeneralizedVector.from_flat(v, self.n, self.m)

    @classmethod
    def from_flat(cls, v: Jet, n: int, m: int) -> "Section":
        return cls(v[..., :n], v[..., n:n + m], v[..., n + m:])

    @classmethod
    def random(cls, rng: np.random.Generator, batch: tuple, n: int, m: int,
               structure: np.ndarray | None = None, scale: float = 1.0) -> "Section":
        """A section with random 2-jet at every batch point."""
        return cls(random_germ(rng, batch + (n,), n, structure, scale),
                   random_germ(rng, batch + (m,), n, structure, scale),
                   random_germ(rng, batch + (n,), n, structure, scale))

    @classmethod
    def constant(cls, u: GeneralizedVector, batch: tuple = ()) -> "Section":
        n = u.n
        f = np.broadcast_to(u.flat(), batch + (u.flat().size,))
        return cls.from_flat(Jet.const(f, n), u.n, u.m)

    @classmethod
    def zero(cls, batch: tuple, n: int, m: int) -> "Section":
        return cls(Jet.zeros(batch + (n,), n), Jet.zeros(batch + (m,), n), Jet.zeros(batch + (n,), n))

    @classmethod
    def cotangent(cls, xi: Jet, m: int) -> "Section":
        """The inclusion of a 1-form into ``E``."""
        z = Jet.zeros(xi.shape, xi.n)
        return cls(z, Jet.zeros(xi.shape[:-1] + (m,), xi.n), xi)


def anchor(s: Section) -> Jet:
    return s.x


def pairing(s1: Section, s2: Section, cmat: np.ndarray) -> Jet:
    """``<s1, s2> = (xi1(x2) + xi2(x1)) / 2 + c(r1, r2)`` as a scalar jet."""
    out = (jein("...i,...i->...", s1.xi, s2.x) + jein("...i,...i->...", s2.xi, s1.x)) * 0.5
    if cmat.size:
        out = out + jein("...a,ab,...b->...", s1.r, cmat, s2.r)
    return out


# ---------- Chern-Simons ----------

def chern_simons(F: np.ndarray, cmat: np.ndarray, fstruct: np.ndarray, args, cubic: float = -1.0) -> np.ndarray:
    """``CS(X, Y, Z)`` for arguments given as ``(x, AX)`` pairs.

    ``CS = -c(AX, [AY, AZ]) + c(F(X,Y), AZ) - c(F(X,Z), AY) + c(F(Y,Z), AX)``;
    ``F[..., i, j, a]`` is the curvature at the point.  ``cubic`` is the
    coefficient of the first term (``+1`` gives the section-level variant
    matching the bracket on ``ad P``, see ``gconn``).
    """
    (x, ax), (y, ay), (z, az) = [(np.asarray(p), np.asarray(q)) for p, q in args]

    def Fv(u, v):
        return np.einsum("...ija,...i,...j->...a", F, u, v)

    def cc(u, v):
        return np.einsum("...a,ab,...b->...", u, cmat, v)

    brk = np.einsum("...a,...b,abc->...c", ay, az, fstruct)
    return cubic * cc(ax, brk) + cc(Fv(x, y), az) - cc(Fv(x, z), ay) + cc(Fv(y, z), ax)


def chern_simons_form(A: Jet, F: Jet, cmat: np.ndarray, fstruct: np.ndarray) -> Jet:
    """The 3-form ``CS(A)`` in the trivialization (``AX = A(x)``)."""
    n = A.shape[-2]
    if cmat.size == 0:
        return Jet.zeros(A.shape[:-2] + (n, n, n), A.n)
    AAA = jein("...iu,uv,...jx,...ky,xyv->...ijk", A, cmat, A, A, fstruct)
    FA = jein("...iju,uv,...kv->...ijk", F, cmat, A)
    return -AAA + FA - FA.swap(-1, -2) + jein("...jki->...ijk", FA)


# ---------- scenes ----------

@dataclass(frozen=True, eq=False)
class Scene:
    """A complete background: model, metric, flux, gauge data and dilaton.

    ``h_cs`` adds ``h_cs * CS(A)`` to the flux, which solves the Bianchi
    identity by construction when the explicit part of ``H`` is closed.
    """

    name: str
    model: ManifoldModel
    g: MetricField
    H: FormField
    gauge: GaugeData
    dilaton: TensorField
    alpha_prime: float = 1.0
    params: Mapping[str, float] = field(default_factory=dict)
    h_cs: float = 0.0
    signature: tuple | None = None
    description: str = ""
    bianchi: str = "unchecked"
    rebuild: Callable[[Mapping[str, float]], "Scene"] | None = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def m(self) -> int:
        return self.gauge.m

    @property
    def rank_vplus(self) -> int:
        return self.n + self.m

    @property
    def cmat(self) -> np.ndarray:
        return self.gauge.c.matrix

    @property
    def C(self) -> np.ndarray:
        return self.model.structure

    def with_params(self, **params) -> "Scene":
        """The scene with some parameters changed.

        Scenes read from a file are rebuilt from their source, so parameters
        inside constants (``c``, structure constants, ``alpha_prime``) follow
        too; otherwise only the field expressions see the new values.
        """
        unknown = set(params) - set(self.params)
        if unknown:
            raise KeyError(f"unknown parameters {sorted(unknown)}")
        merged = {**self.params, **{k: float(v) for k, v in params.items()}}
        if self.rebuild is not None:
            return self.rebuild(merged)
        return replace(self, params=merged)

    def with_dilaton(self, dilaton: TensorField) -> "Scene":
        return replace(self, dilaton=dilaton)

    def fields(self, points: np.ndarray) -> FieldJets:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        p = self.params
        model = self.model
        g = self.g.jet(model, points, p)
        A = self.gauge.A.jet(model, points, p)
        H = self.H.jet(model, points, p)
        fj = FieldJets(self.C, self.gauge.structure, self.cmat, g, H, A,
                       self.dilaton.jet(model, points, p), points)
        if self.h_cs:
            H = H + chern_simons_form(A, fj.F, self.cmat, self.gauge.structure) * self.h_cs
            fj.H = H
        return fj


# ---------- bracket and axioms ----------

def dorfman(fj: FieldJets, s1: Section, s2: Section, conv: BracketConvention = PINNED) -> Section:
    C, f, cm = fj.C, fj.fstruct, fj.cmat
    x1, r1, xi1 = s1.x, s1.r, s1.xi
    x2, r2, xi2 = s2.x, s2.r, s2.xi
    X = calc.lie_bracket(x1, x2, C)

    dxi1 = calc.exterior_d(xi1, 1, C)
    dxi2 = calc.exterior_d(xi2, 1, C)
    ix1xi2 = jein("...i,...i->...", x1, xi2)
    xi = (jein("...i,...ij->...j", x1, dxi2) + calc.frame_derivative(ix1xi2, 0)
          - jein("...i,...ij->...j", x2, dxi1)
          + jein("...i,...j,...ijk->...k", x1, x2, fj.H))

    if fj.m:
        F, A = fj.F, fj.A
        nr1 = calc.gauge_nabla(A, r1, f)
        nr2 = calc.gauge_nabla(A, r2, f)
        r = (jein("...i,...ia->...a", x1, nr2) - jein("...i,...ia->...a", x2, nr1)
             - jein("...i,...j,...ija->...a", x1, x2, F) * float(conv.sigma_F)
             - calc.algebra_bracket(r1, r2, f) * float(conv.sigma_b))
        xi = xi + (jein("...ka,ab,...b->...k", nr1, cm, r2)
                   + jein("...i,...ika,ab,...b->...k", x1, F, cm, r2)
                   - jein("...i,...ika,ab,...b->...k", x2, F, cm, r1)) * 2.0
    else:
        r = Jet.zeros(r1.shape, r1.n).with_order(X.order)
    return Section(X, r, xi)


@dataclass
class AxiomResiduals:
    jacobi: np.ndarray
    invariance: np.ndarray
    leibniz: np.ndarray
    symmetric: np.ndarray
    anchor: np.ndarray

    def as_dict(self) -> dict:
        return {"C1_jacobi": self.jacobi, "C2_invariance": self.invariance, "C3_leibniz": self.leibniz,
                "C4_symmetric": self.symmetric, "anchor": self.anchor}

    def max(self) -> float:
        return float(max(np.max(v) if np.size(v) else 0.0 for v in self.as_dict().values()))


def axiom_residuals(fj: FieldJets, s1: Section, s2: Section, s3: Section, f: Jet,
                    conv: BracketConvention = PINNED) -> AxiomResiduals:
    """Courant-axiom defects, one value per batch point (max over components)."""
    cm = fj.cmat
    br = lambda a, b: dorfman(fj, a, b, conv)  # noqa: E731
    jac = br(s1, br(s2, s3)) - br(br(s1, s2), s3) - br(s2, br(s1, s3))

    d = lambda h: calc.frame_derivative(h, 0)  # noqa: E731
    inv = (jein("...i,...i->...", s1.x, d(pairing(s2, s3, cm)))
           - pairing(br(s1, s2), s3, cm) - pairing(s2, br(s1, s3), cm))

    fs2 = s2.scale(f)
    x1f = jein("...i,...i->...", s1.x, d(f))
    leib = br(s1, fs2) - br(s1, s2).scale(f) - s2.scale(x1f)

    sym = br(s1, s1) - Section.cotangent(d(pairing(s1, s1, cm)), fj.m)

    anc = br(s1, s2).x - calc.lie_bracket(s1.x, s2.x, fj.C)
    return AxiomResiduals(_sec_norm(jac), np.abs(inv.value()), _sec_norm(leib), _sec_norm(sym),
                          _vec_norm(anc))


def _sec_norm(s: Section) -> np.ndarray:
    return _vec_norm(s.flat())


def _vec_norm(v: Jet) -> np.ndarray:
    a = np.abs(v.value())
    return a.max(axis=-1) if a.shape[-1] else np.zeros(a.shape[:-1])


def symmetric_part_residual(fj: FieldJets, s1: Section, s2: Section,
                            conv: BracketConvention = PINNED) -> np.ndarray:
    """``[s1, s2] + [s2, s1] - iota d(2 <s1, s2>)``."""
    p = pairing(s1, s2, fj.cmat) * 2.0
    res = dorfman(fj, s1, s2, conv) + dorfman(fj, s2, s1, conv) - Section.cotangent(
        calc.frame_derivative(p, 0), fj.m)
    return _sec_norm(res)


def cff(fj: FieldJets) -> Jet:
    """The 4-form ``c(F ^ F)``."""
    n = fj.n
    if fj.m == 0:
        return Jet.zeros(fj.batch + (n,) * 4, fj.g.n)
    return calc.c_wedge(fj.F, 2, fj.F, 2, fj.cmat)


def bianchi_residual(fj: FieldJets) -> Jet:
    """Components of ``dH - c(F ^ F)``."""
    return calc.exterior_d(fj.H, 3, fj.C) - cff(fj)
