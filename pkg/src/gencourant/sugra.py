"""Supergravity residuals and their identification with generalized Ricci flatness.

Classical blocks (pointwise values):

* ``einstein  = Ric + 2 nabla d phi - (1/4) H o H - F o F``
* ``bfield    = d^*(e^{-2 phi} H)``
* ``gauge     = d_A^*(e^{-2 phi} F) + e^{-2 phi} K`` with
  ``K(Y) = -(1/2) sum_j F(e_j, g^{-1} H(e_j, Y, .))``
* ``bianchi   = dH - c(F ^ F)``
* ``dilaton_scalar = S + 4 Delta phi - 4 |d phi|^2 - (1/2)|H|^2 (+ |F|_c^2)``,
  diagnostic only.

The ``F o F`` and ``c(F ^ F)`` terms use the pairing ``c`` of the scene as
given; for a product algebra ``k + so`` with ``c = alpha'(tr_k - tr)`` they
carry the two trace terms with their relative sign.

With the Weyl 1-form ``vphi = -6/(rk V+ - 1) d phi`` the generalized Ricci
tensor of ``D^phi`` is

    GRic(Y, Z) = einstein(Y, Z) - (1/2) e^{2 phi} bfield(Y, Z)
    GRic(Y, t) = c(e^{2 phi} gauge(Y), t)

at every point, on or off shell; :func:`equivalence_report` measures both
sides independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gcurv
from .algebroid import Scene, bianchi_residual
from .exprs import Jet, jein
from .exprs.jet import jexp
from .geometry import calculus as calc
from .geometry.fields import FieldJets

TYPE_II_COEFFICIENT = -2.0 / 3.0


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class DilatonPolicy:
    """How the dilaton selects the Weyl 1-form ``vphi = coefficient * d phi``.

    ``typeII``: ``-2/3`` (exact identification at ``rk V+ = 10``);
    ``heterotic``: ``-6/(rk V+ - 1)``; ``explicit``: the given coefficient.
    """

    kind: str = "heterotic"
    value: float | None = None

    def __post_init__(self):
        if self.kind not in ("typeII", "heterotic", "explicit"):
            raise PolicyError(f"unknown dilaton policy {self.kind!r}")
        if self.kind == "explicit" and self.value is None:
            raise PolicyError("explicit policy needs a coefficient")

    def coefficient(self, rank: int) -> float:
        if self.kind == "typeII":
            return TYPE_II_COEFFICIENT
        if self.kind == "heterotic":
            if rank <= 1:
                raise PolicyError("heterotic policy needs rk V+ > 1")
            return -6.0 / (rank - 1)
        return float(self.value)

    def vphi(self, fj: FieldJets, phi: Jet | None = None) -> Jet:
        phi = fj.phi if phi is None else phi
        return calc.frame_derivative(phi, 0) * self.coefficient(fj.n + fj.m)


@dataclass
class EOMResiduals:
    einstein: np.ndarray
    bfield: np.ndarray
    bianchi: np.ndarray
    gauge: np.ndarray | None = None
    dilaton_scalar: np.ndarray | None = None
    gauge_factors: dict = field(default_factory=dict)

    def blocks(self) -> dict:
        out = {"einstein": self.einstein, "bfield": self.bfield, "bianchi": self.bianchi}
        if self.gauge is not None:
            out["gauge"] = self.gauge
        for name, v in self.gauge_factors.items():
            out[f"gauge[{name}]"] = v
        if self.dilaton_scalar is not None:
            out["dilaton_scalar"] = self.dilaton_scalar
        return out

    def max_abs(self, include_diagnostic: bool = False) -> dict:
        return {k: float(np.max(np.abs(v), initial=0.0)) for k, v in self.blocks().items()
                if include_diagnostic or k != "dilaton_scalar"}


def _weights(fj: FieldJets, phi: Jet):
    return jexp(phi * -2.0)


def hessian_dilaton(fj: FieldJets, phi: Jet) -> Jet:
    """``(nabla^g d phi)[i, j]``."""
    return calc.nabla_covariant(fj.Gam, calc.frame_derivative(phi, 0), 1)


def bfield_block(fj: FieldJets, phi: Jet) -> Jet:
    w = _weights(fj, phi)
    return calc.codifferential(jein("...,...ijk->...ijk", w, fj.H), 3, fj.Gam, fj.ginv)


def gauge_block(fj: FieldJets, phi: Jet) -> Jet:
    """``d_A^*(e^{-2 phi} F) + e^{-2 phi} K`` with the algebra index last."""
    w = _weights(fj, phi)
    wF = jein("...,...ija->...ija", w, fj.F)
    DF = calc.gauge_nabla_form(fj.Gam, fj.A, wF, 2, fj.fstruct)
    return -jein("...ik,...ikja->...ja", fj.ginv, DF) + jein("...,...ja->...ja", w, gcurv.f_h_contraction(fj))


def f_norm_sq(fj: FieldJets) -> Jet:
    """``|F|_c^2 = (1/2) g^{ik} g^{jl} c(F_ij, F_kl)``."""
    gi = fj.ginv
    return jein("...ik,...jl,...iju,uv,...klv->...", gi, gi, fj.F, fj.cmat, fj.F) * 0.5


def _common(fj: FieldJets, phi: Jet):
    einstein = fj.Ric + hessian_dilaton(fj, phi) * 2.0 - gcurv.h_circ_h(fj) * 0.25
    scalar = gcurv.gs(fj, phi)
    return einstein, scalar


def typeII_residuals(fj: FieldJets, phi: Jet | None = None) -> EOMResiduals:
    """Type II blocks; requires a scene without gauge sector."""
    if fj.m:
        raise PolicyError("type II residuals need a scene without gauge sector")
    phi = fj.phi if phi is None else phi
    einstein, scalar = _common(fj, phi)
    return EOMResiduals(
        einstein=einstein.value(),
        bfield=bfield_block(fj, phi).value(),
        bianchi=calc.exterior_d(fj.H, 3, fj.C).value(),
        dilaton_scalar=np.asarray(scalar),
    )


def heterotic_residuals(fj: FieldJets, phi: Jet | None = None, factors: tuple = ()) -> EOMResiduals:
    """Heterotic blocks; ``factors`` is ``((name, start, stop), ...)`` for per-factor gauge blocks."""
    phi = fj.phi if phi is None else phi
    einstein, scalar = _common(fj, phi)
    einstein = einstein - gcurv.f_circ_f(fj)
    gauge = None
    per = {}
    if fj.m:
        gauge = gauge_block(fj, phi).value()
        scalar = scalar + f_norm_sq(fj).value()
        for name, a, b in factors:
            per[name] = gauge[..., a:b]
    return EOMResiduals(
        einstein=einstein.value(),
        bfield=bfield_block(fj, phi).value(),
        bianchi=bianchi_residual(fj).value(),
        gauge=gauge,
        dilaton_scalar=np.asarray(scalar),
        gauge_factors=per,
    )


def gric_for_policy(fj: FieldJets, policy: DilatonPolicy, route: str = "formula") -> np.ndarray:
    """``GRic[i, J]`` of ``D^phi`` for the policy's Weyl 1-form.

    ``route="trace"`` needs fields with a trailing singleton batch axis.
    """
    vphi = policy.vphi(fj)
    if route == "formula":
        return gcurv.gric_formula(fj, vphi)
    if route == "trace":
        return gcurv.gric_matrix_def(gcurv.connection_for(vphi), fj)
    raise ValueError(f"unknown route {route!r}")


def eom_assembly(fj: FieldJets, eom: EOMResiduals, phi: Jet | None = None) -> np.ndarray:
    """Classical side in the ``GRic[i, J]`` layout."""
    phi = fj.phi if phi is None else phi
    e2 = np.exp(2.0 * phi.value())[..., None, None]
    blocks = [eom.einstein - 0.5 * e2 * eom.bfield]
    if fj.m:
        blocks.append(np.einsum("...ja,ab->...jb", e2 * eom.gauge, fj.cmat))
    return np.concatenate(blocks, axis=-1)


@dataclass
class EquivalenceReport:
    policy: str
    coefficient: float
    gric_max: float
    gric_symmetric_max: float
    gric_skew_max: float
    eom_max: dict
    cross_difference: float
    gs_max: float | None = None
    conventions: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "policy": self.policy, "coefficient": self.coefficient,
            "gric_max": self.gric_max, "gric_symmetric_max": self.gric_symmetric_max,
            "gric_skew_max": self.gric_skew_max, "eom_max": self.eom_max,
            "cross_difference": self.cross_difference, "gs_max": self.gs_max,
            "conventions": self.conventions,
        }


CONVENTIONS = {
    "pairing": "<X+r+xi, X+r+xi> = xi(X) + c(r, r)",
    "bianchi": "dH = c(F^F)",
    "circle_F": "(F o F)(Y,Z) = g^kl c(F(Y,e_k), F(Z,e_l)); c carries the relative sign of tr_k and tr",
    "K": "K(Y) = -(1/2) sum_j F(e_j, g^-1 H(e_j, Y, .))",
    "codifferential": "d*b = -g^ab (nabla_a b)_b...",
}


def equivalence_report(fj: FieldJets, policy: DilatonPolicy, route: str = "formula",
                       factors: tuple = ()) -> EquivalenceReport:
    """Compare ``GRic`` of ``D^phi`` with the classical assembly at the points of ``fj``."""
    n, m = fj.n, fj.m
    gric = gric_for_policy(fj, policy, route)
    if route == "trace":
        gric = gric[..., None, :, :]
    if m == 0 and policy.kind == "typeII":
        eom = typeII_residuals(fj)
    else:
        eom = heterotic_residuals(fj, factors=factors)
    classical = eom_assembly(fj, eom)
    gric = np.broadcast_to(gric, classical.shape)
    tt = gric[..., :n]
    report = EquivalenceReport(
        policy=policy.kind,
        coefficient=policy.coefficient(n + m),
        gric_max=float(np.abs(gric).max()),
        gric_symmetric_max=float(np.abs(tt + np.swapaxes(tt, -1, -2)).max() / 2),
        gric_skew_max=float(np.abs(tt - np.swapaxes(tt, -1, -2)).max() / 2),
        eom_max=eom.max_abs(),
        cross_difference=float(np.abs(gric - classical).max()),
        conventions=dict(CONVENTIONS),
    )
    if policy.kind == "typeII":
        report.gs_max = float(np.abs(gcurv.gs(fj)).max())
    return report


def scene_fields_with_dilaton(scene: Scene, points: np.ndarray, phi: Jet | None = None) -> FieldJets:
    """Fields at ``points``; ``phi`` (a jet) replaces the scene's dilaton when given."""
    fj = scene.fields(points)
    if phi is not None:
        fj.phi = phi
    return fj
