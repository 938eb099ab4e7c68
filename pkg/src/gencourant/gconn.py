"""Admissible generalized metrics and torsion-free generalized connections.

Everything is expressed in the splitting ``E = T + g + T*`` adapted to
``V+ = {X + gX + r}``.  In this splitting

* ``G(x, r, xi) = (g^{-1} xi, r, g x)``;
* ``P+ (x, r, xi) = ((x + g^{-1} xi)/2, r, (g x + xi)/2)``;
* ``P- (x, r, xi) = ((x - g^{-1} xi)/2, 0, (xi - g x)/2)``.

``D'`` is the Levi-Civita connection on ``T`` and ``T*`` together with the
gauge connection on ``g``.  The canonical connection is

    D0 = D' + (1/3) P+ chi0(e+) s+ + (1/3) P- chi0(e-) s-
            + P+ chi0(e-) s+ + P- chi0(e+) s-

and ``D^phi`` replaces ``chi0`` by ``chi0 + chi^phi``.  A second, independent
route evaluates the same connections from the closed formulas in terms of the
skew-torsion connections ``nabla^g + kappa g^{-1} H`` (``kappa = +-1/2, +-1/6``).

Sign of the ``ad P`` block.  The Dorfman bracket of two algebra sections is
``-[r, t]`` (forced by the Courant axioms together with ``dH = c(F^F)``), so the
cubic term of the Chern-Simons form seen by sections is ``+c(r1, [r2, r3])``.
For ``D0`` to be torsion free the algebra block of ``chi0`` is therefore
``r, t -> -[r, t]``; every other block is as in the matrix below.  With that,
``<chi0_{e1} e2, e3> = (H/2 - CS_sec)(e1, e2, e3)`` and
``T_{D' + chi} = -H/2 + CS_sec + sum chi``, where ``CS_sec`` is
``chern_simons(..., cubic=+1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .algebroid import PINNED, BracketConvention, Section, dorfman, pairing
from .exprs import Jet, jein
from .fiber import GeneralizedVector, QuadraticForm, gram_matrix
from .geometry import calculus as calc
from .geometry.fields import FieldJets


ALGEBRA_SIGN = -1.0
SECTION_CS_CUBIC = 1.0


# ---------- admissible metric ----------

@dataclass(frozen=True, eq=False)
class AdmissibleMetric:
    """Pointwise data of ``V+`` at one base point (plain arrays)."""

    g: np.ndarray
    c: QuadraticForm

    @property
    def n(self) -> int:
        return self.g.shape[0]

    @property
    def m(self) -> int:
        return self.c.dim

    @property
    def G(self) -> np.ndarray:
        n, m = self.n, self.m
        G = np.zeros((2 * n + m, 2 * n + m))
        G[:n, n + m:] = np.linalg.inv(self.g)
        G[n:n + m, n:n + m] = np.eye(m)
        G[n + m:, :n] = self.g
        return G

    @property
    def plus(self) -> np.ndarray:
        return 0.5 * (np.eye(self.G.shape[0]) + self.G)

    @property
    def minus(self) -> np.ndarray:
        return 0.5 * (np.eye(self.G.shape[0]) - self.G)

    def project(self, u: GeneralizedVector, sign: int = 1) -> GeneralizedVector:
        P = self.plus if sign > 0 else self.minus
        return GeneralizedVector.from_flat(P @ u.flat(), self.n, self.m)

    def vplus_basis(self) -> np.ndarray:
        """Rows ``e_i + g e_i`` then ``t_a``: a basis of ``V+``."""
        n, m = self.n, self.m
        B = np.zeros((n + m, 2 * n + m))
        B[:n, :n] = np.eye(n)
        B[:n, n + m:] = self.g
        B[n:, n:n + m] = np.eye(m)
        return B

    def checks(self) -> dict:
        """Residuals of ``G^2 = 1``, self-adjointness, and ``V+`` transversality."""
        G = self.G
        P = gram_matrix(self.n, self.c)
        Bp = self.vplus_basis()
        Tstar = np.zeros((self.n, 2 * self.n + self.m))
        Tstar[:, self.n + self.m:] = np.eye(self.n)
        rank = np.linalg.matrix_rank(np.vstack([Bp, Tstar]))
        return {
            "G_squared": float(np.max(np.abs(G @ G - np.eye(G.shape[0])))),
            "G_selfadjoint": float(np.max(np.abs(P @ G - (P @ G).T))),
            "vplus_rank": int(np.linalg.matrix_rank(Bp)),
            "transverse_to_cotangent": bool(rank == Bp.shape[0] + self.n),
        }


def build_admissible(fj: FieldJets, index=0) -> AdmissibleMetric:
    g = fj.g.val[index] if fj.g.val.ndim > 2 else fj.g.val
    return AdmissibleMetric(np.array(g), QuadraticForm(fj.cmat))


# ---------- jet-level projections ----------

def _vec(M: Jet, v: Jet) -> Jet:
    return jein("...ij,...j->...i", M, v)


def lift_plus(fj: FieldJets, X: Jet, r: Jet) -> Section:
    """``X + gX + r`` as a section of ``V+``."""
    return Section(X, r, _vec(fj.g, X))


def lift_minus(fj: FieldJets, Y: Jet) -> Section:
    """``Y - gY`` as a section of ``V-``."""
    return Section(Y, Jet.zeros(Y.shape[:-1] + (fj.m,), Y.n).with_order(Y.order), -_vec(fj.g, Y))


def plus_parts(fj: FieldJets, s: Section):
    """``(X, r)`` with ``P+ s = X + gX + r``."""
    return (s.x + _vec(fj.ginv, s.xi)) * 0.5, s.r


def minus_part(fj: FieldJets, s: Section) -> Jet:
    """``Y`` with ``P- s = Y - gY``."""
    return (s.x - _vec(fj.ginv, s.xi)) * 0.5


def proj_plus(fj: FieldJets, s: Section) -> Section:
    X, r = plus_parts(fj, s)
    return lift_plus(fj, X, r)


def proj_minus(fj: FieldJets, s: Section) -> Section:
    return lift_minus(fj, minus_part(fj, s))


def apply_G(fj: FieldJets, s: Section) -> Section:
    return Section(_vec(fj.ginv, s.xi), s.r, _vec(fj.g, s.x))


# ---------- chi terms ----------

def chi0(fj: FieldJets, e: Section, s: Section) -> Section:
    """``chi0_e s`` for ``e = (X, r, xi)``, ``s = (Y, t, eta)``.

    ``(0, -F(X, Y) + ALGEBRA_SIGN [r, t], H(X, Y, .) - 2 c(F(Y, .), r) + 2 c(F(X, .), t))``.
    """
    X, r = e.x, e.r
    Y, t = s.x, s.r
    xi = jein("...i,...j,...ijk->...k", X, Y, fj.H)
    zero_x = Jet.zeros(X.shape, X.n).with_order(min(X.order, Y.order))
    if fj.m == 0:
        return Section(zero_x, Jet.zeros(r.shape, X.n), xi)
    F, cm, f = fj.F, fj.cmat, fj.fstruct
    rr = -jein("...i,...j,...ija->...a", X, Y, F) + calc.algebra_bracket(r, t, f) * ALGEBRA_SIGN
    xi = xi + (jein("...i,...ika,ab,...b->...k", X, F, cm, t)
               - jein("...i,...ika,ab,...b->...k", Y, F, cm, r)) * 2.0
    return Section(zero_x, rr, xi)


def weyl_chi(vphi: Jet, cm: np.ndarray, e: Section, s: Section) -> Section:
    """``chi^phi_e s = phi(pi s) e - <e, s> (0, 0, 2 phi)``."""
    ps = jein("...i,...i->...", vphi, s.x)
    es = pairing(e, s, cm)
    out = e.scale(ps)
    return Section(out.x, out.r, out.xi - jein("...,...i->...i", es, vphi) * 2.0)


# ---------- connections ----------

def nabla_along(Gam: Jet, X: Jet, V: Jet) -> Jet:
    """``nabla_X V`` for the connection with coefficients ``Gam``."""
    return jein("...i,...ik->...k", X, calc.nabla_vector(Gam, V))


def nabla_form_along(Gam: Jet, X: Jet, xi: Jet) -> Jet:
    return jein("...i,...ik->...k", X, calc.nabla_covariant(Gam, xi, 1))


def gauge_along(fj: FieldJets, X: Jet, r: Jet) -> Jet:
    if fj.m == 0:
        return Jet.zeros(r.shape, r.n).with_order(min(X.order, r.order - 1))
    return jein("...i,...ia->...a", X, calc.gauge_nabla(fj.A, r, fj.fstruct))


def d_prime(fj: FieldJets, e: Section, s: Section) -> Section:
    X = e.x
    return Section(nabla_along(fj.Gam, X, s.x), gauge_along(fj, X, s.r), nabla_form_along(fj.Gam, X, s.xi))


ChiFn = Callable[[FieldJets, Section, Section], Section]


def _projected_sum(fj: FieldJets, chi: ChiFn, e: Section, s: Section) -> Section:
    ep, em = proj_plus(fj, e), proj_minus(fj, e)
    sp, sm = proj_plus(fj, s), proj_minus(fj, s)
    return (proj_plus(fj, chi(fj, ep, sp)) * (1.0 / 3.0) + proj_minus(fj, chi(fj, em, sm)) * (1.0 / 3.0)
            + proj_plus(fj, chi(fj, em, sp)) + proj_minus(fj, chi(fj, ep, sm)))


@dataclass(frozen=True, eq=False)
class GenConnection:
    """``D_e s`` as a jet operator.  ``tag`` is one of ``prime``, ``D0``, ``Dphi``, ``custom``."""

    tag: str
    chi: ChiFn | None = None
    vphi: Jet | None = None
    projected: bool = True

    def __call__(self, fj: FieldJets, e: Section, s: Section) -> Section:
        out = d_prime(fj, e, s)
        if self.chi is None:
            return out
        if self.projected:
            return out + _projected_sum(fj, self.chi, e, s)
        return out + self.chi(fj, e, s)


D_PRIME = GenConnection("prime")
D_ZERO = GenConnection("D0", chi0)


def d_phi(vphi: Jet) -> GenConnection:
    """The torsion-free family member ``D^phi`` for a 1-form ``vphi``."""
    def chi(fj, e, s):
        return chi0(fj, e, s) + weyl_chi(vphi, fj.cmat, e, s)
    return GenConnection("Dphi", chi, vphi)


def d0_apply(fj: FieldJets, e: Section, s: Section) -> Section:
    return D_ZERO(fj, e, s)


def dphi_apply(fj: FieldJets, vphi: Jet | None, e: Section, s: Section) -> Section:
    if vphi is None:
        return D_ZERO(fj, e, s)
    return d_phi(vphi)(fj, e, s)


# ---------- explicit (closed-form) route ----------

def _cF(fj: FieldJets, X: Jet, t: Jet) -> Jet:
    """The 1-form ``c(F(X, .), t)``."""
    return jein("...i,...ika,ab,...b->...k", X, fj.F, fj.cmat, t)


def _up(fj: FieldJets, xi: Jet) -> Jet:
    return _vec(fj.ginv, xi)


def explicit_connection(fj: FieldJets, e: Section, s: Section, vphi: Jet | None = None) -> Section:
    """``D^phi_e s`` from the closed formulas (``vphi = None`` gives ``D0``).

    V+ outputs, with ``e+ = X + gX + r``, ``e- = Y - gY``, ``s+ = Z + gZ + t``::

        D_{e-} s+ = 2P+(nabla+_Y Z + g^{-1} c(F(Y,.), t)) + nabla_Y t - F(Y, Z)
        D_{e+} s+ = 2P+(nabla^{1/3}_X Z + (1/3) g^{-1} c(F(X,.), t) - (1/3) g^{-1} c(F(Z,.), r))
                    + nabla_X t - (1/3) F(X, Z) + (1/3) ALGEBRA_SIGN [r, t]
                    + (1/3) P+(phi(Z) e+ - 2 (g(X, Z) + c(r, t)) phi)

    V- outputs, with ``s- = W - gW``::

        D_{e+} s- = 2P-(nabla-_X W + g^{-1} c(F(W,.), r))
        D_{e-} s- = 2P-(nabla^{-1/3}_Y W + (1/3)(phi(W) Y - g(Y, W) g^{-1} phi))
    """
    X, r = plus_parts(fj, e)
    Y = minus_part(fj, e)
    Z, t = plus_parts(fj, s)
    W = minus_part(fj, s)
    third = 1.0 / 3.0
    gp, g13 = fj.skew(0.5), fj.skew(1.0 / 6.0)
    gm, gm13 = fj.skew(-0.5), fj.skew(-1.0 / 6.0)

    V1 = nabla_along(gp, Y, Z)
    V2 = nabla_along(g13, X, Z)
    W1 = nabla_along(gm, X, W)
    W2 = nabla_along(gm13, Y, W)
    rr = gauge_along(fj, Y, t) + gauge_along(fj, X, t)
    if fj.m:
        f = fj.fstruct
        V1 = V1 + _up(fj, _cF(fj, Y, t))
        V2 = V2 + (_up(fj, _cF(fj, X, t)) - _up(fj, _cF(fj, Z, r))) * third
        W1 = W1 + _up(fj, _cF(fj, W, r))
        rr = (rr - jein("...i,...j,...ija->...a", Y, Z, fj.F)
              - jein("...i,...j,...ija->...a", X, Z, fj.F) * third
              + calc.algebra_bracket(r, t, f) * (ALGEBRA_SIGN * third))
    if vphi is not None:
        pZ = jein("...i,...i->...", vphi, Z)
        pW = jein("...i,...i->...", vphi, W)
        gXZ = jein("...i,...ij,...j->...", X, fj.g, Z)
        if fj.m:
            gXZ = gXZ + jein("...a,ab,...b->...", r, fj.cmat, t)
        gYW = jein("...i,...ij,...j->...", Y, fj.g, W)
        up = _up(fj, vphi)
        V2 = V2 + (jein("...,...i->...i", pZ, X) - jein("...,...i->...i", gXZ, up)) * third
        rr = rr + jein("...,...a->...a", pZ, r) * third
        W2 = W2 + (jein("...,...i->...i", pW, Y) - jein("...,...i->...i", gYW, up)) * third
    Vp = V1 + V2
    Vm = W1 + W2
    return Section(Vp + Vm, rr, _vec(fj.g, Vp) - _vec(fj.g, Vm))


# ---------- torsion and compatibility ----------

def gen_torsion(D: GenConnection, fj: FieldJets, e1: Section, e2: Section, e3: Section,
                conv: BracketConvention = PINNED) -> np.ndarray:
    """``<D_{e1} e2 - D_{e2} e1 - [e1, e2], e3> + <D_{e3} e1, e2>`` with the Dorfman bracket."""
    cm = fj.cmat
    v = D(fj, e1, e2) - D(fj, e2, e1) - dorfman(fj, e1, e2, conv)
    return (pairing(v, e3, cm) + pairing(D(fj, e3, e1), e2, cm)).value()


def torsion_formula(fj: FieldJets, chi: ChiFn | None, e1: Section, e2: Section, e3: Section) -> np.ndarray:
    """``-1/2 H + CS_sec + sum chi`` evaluated on the three arguments (for ``D' + chi``)."""
    from .algebroid import chern_simons
    val = lambda j: j.value()  # noqa: E731
    H = fj.H.value()
    x1, x2, x3 = val(e1.x), val(e2.x), val(e3.x)
    out = -0.5 * np.einsum("...ijk,...i,...j,...k->...", H, x1, x2, x3)
    if fj.m:
        F = fj.F.value()
        out = out + chern_simons(F, fj.cmat, fj.fstruct,
                                 [(x1, val(e1.r)), (x2, val(e2.r)), (x3, val(e3.r))],
                                 cubic=SECTION_CS_CUBIC)
    if chi is not None:
        cm = fj.cmat
        out = out + (pairing(chi(fj, e1, e2), e3, cm) - pairing(chi(fj, e2, e1), e3, cm)
                     + pairing(chi(fj, e3, e1), e2, cm)).value()
    return out


def sigma(chi: ChiFn, fj: FieldJets, e1: Section, e2: Section, e3: Section) -> np.ndarray:
    cm = fj.cmat
    return (pairing(chi(fj, e1, e2), e3, cm) - pairing(chi(fj, e2, e1), e3, cm)
            + pairing(chi(fj, e3, e1), e2, cm)).value()


def compat_residual(D: GenConnection, fj: FieldJets, e: Section, s: Section) -> np.ndarray:
    """``max |P-/+ D_e (P+/- s)|`` per batch point."""
    a = proj_minus(fj, D(fj, e, proj_plus(fj, s)))
    b = proj_plus(fj, D(fj, e, proj_minus(fj, s)))
    va, vb = np.abs(a.value()), np.abs(b.value())
    return np.maximum(va.max(axis=-1), vb.max(axis=-1))


def pairing_compat_residual(D: GenConnection, fj: FieldJets, e: Section, s1: Section, s2: Section) -> np.ndarray:
    """``pi(e)<s1, s2> - <D_e s1, s2> - <s1, D_e s2>``."""
    cm = fj.cmat
    p = calc.frame_derivative(pairing(s1, s2, cm), 0)
    lhs = jein("...i,...i->...", e.x, p)
    return np.abs((lhs - pairing(D(fj, e, s1), s2, cm) - pairing(s1, D(fj, e, s2), cm)).value())


def leibniz_residual(D: GenConnection, fj: FieldJets, e: Section, s: Section, f: Jet) -> np.ndarray:
    """``D_e(f s) - f D_e s - (pi(e) f) s``."""
    ef = jein("...i,...i->...", e.x, calc.frame_derivative(f, 0))
    res = D(fj, e, s.scale(f)) - D(fj, e, s).scale(f) - s.scale(ef)
    return np.abs(res.value()).max(axis=-1)


# ---------- Bismut connections ----------

def bismut_from_d0(fj: FieldJets, Y: Jet, Z: Jet, D: GenConnection = D_ZERO) -> dict:
    """Tangent parts of the four blocks of ``D0`` between ``V+`` and ``V-``.

    Keys are ``kappa`` with ``nabla^kappa = nabla^g + kappa g^{-1} H``:
    ``+1/2`` from ``D_{Y-}Z+``, ``+1/6`` from ``D_{Y+}Z+``, ``-1/2`` from
    ``D_{Y+}Z-`` and ``-1/6`` from ``D_{Y-}Z-``.
    """
    zr = Jet.zeros(Y.shape[:-1] + (fj.m,), Y.n).with_order(2)
    yp, ym = lift_plus(fj, Y, zr), lift_minus(fj, Y)
    zp, zm = lift_plus(fj, Z, zr), lift_minus(fj, Z)
    return {
        0.5: D(fj, ym, zp).x,
        1.0 / 6.0: D(fj, yp, zp).x,
        -0.5: D(fj, yp, zm).x,
        -1.0 / 6.0: D(fj, ym, zm).x,
    }


# ---------- (b, a)-transforms ----------

def ba_section(T: np.ndarray, s: Section) -> Section:
    """Apply a constant matrix on ``T + g + T*`` to a section."""
    n, m = s.n, s.m
    flat = jein("uv,...v->...u", T, s.flat())
    return Section.from_flat(flat, n, m)


def adapted_splitting(basis: np.ndarray, n: int, c: QuadraticForm):
    """Recover ``(g, b, a)`` from a basis (rows) of ``V+ = e^{(b,a)} {X + gX + r}``.

    Uses only the subspace itself: ``V+ ∩ ker pi`` gives ``a`` through its
    cotangent part, and the element over ``X`` orthogonal to it gives ``aX``
    and ``gX + b(X, .) - c(aX, a .)``.
    """
    m = c.dim
    P = gram_matrix(n, c)
    # kernel of the anchor inside V+
    coeff_null = _null_space(basis[:, :n].T)
    K = coeff_null.T @ basis  # rows (0, r, -2 c(a ., r))
    a = np.zeros((n, m))
    if m:
        # K rows: algebra part r_k, cotangent part -2 a c r_k
        R, Xi = K[:, n:n + m], K[:, n + m:]
        a = -0.5 * np.linalg.lstsq(R @ c.matrix, Xi, rcond=None)[0].T
    # element over e_i: any lift, then remove the K component by orthogonality
    lifts = np.linalg.lstsq(basis[:, :n].T, np.eye(n), rcond=None)[0].T @ basis
    if m:
        KK = K @ P @ K.T
        lifts = lifts - (lifts @ P @ K.T) @ np.linalg.solve(KK, K)
    M = lifts[:, n + m:] + a @ c.matrix @ a.T
    g = 0.5 * (M + M.T)
    b = 0.5 * (M - M.T)
    return g, b, a


def _null_space(M: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    u, s, vt = np.linalg.svd(M)
    rank = int((s > tol * max(1.0, s.max(initial=0.0))).sum())
    return vt[rank:].T


def transported_fields(fj: FieldJets, b: np.ndarray, a: np.ndarray) -> FieldJets:
    """Background fields in the splitting moved by a constant ``(b, a)``.

    ``A' = A + a`` and ``H' = H - db - d(c(a ^ A)) + CS(A') - CS(A)``.
    """
    from .algebroid import chern_simons_form
    A = fj.A
    aj = Jet.const(np.broadcast_to(a, A.shape), A.n)
    Ap = A + aj
    new = FieldJets(fj.C, fj.fstruct, fj.cmat, fj.g, fj.H, Ap, fj.phi, fj.points)
    bj = Jet.const(np.broadcast_to(b, fj.g.shape), A.n)
    H = fj.H - calc.exterior_d(bj, 2, fj.C)
    if fj.m:
        H = (H - calc.exterior_d(calc.c_wedge(aj, 1, A, 1, fj.cmat), 2, fj.C)
             + chern_simons_form(Ap, new.F, fj.cmat, fj.fstruct)
             - chern_simons_form(A, fj.F, fj.cmat, fj.fstruct))
    new.H = H
    return new


def conjugated(D: GenConnection, fj: FieldJets, T: np.ndarray) -> Callable:
    """``e, s -> T D_{T^-1 e}(T^-1 s)`` as an operator on the moved splitting."""
    Ti = np.linalg.inv(T)

    def op(fj_other, e, s):
        return ba_section(T, D(fj, ba_section(Ti, e), ba_section(Ti, s)))
    return op
