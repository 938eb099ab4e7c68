"""Generalized curvature, generalized Ricci tensor and generalized scalar.

Two independent routes are provided throughout:

* definitional: ``GR(e1, e2) = D_{e1} D_{e2} - D_{e2} D_{e1} - D_{[[e1, e2]]}``
  evaluated on jet sections, and ``GRic`` as the trace of
  ``e1+ -> GR(e1+, e2-) e3+`` over a basis of ``V+``;
* closed form: the curvature written through ``R^{1/3}``, ``nabla F``,
  ``nabla H`` and ``nabla phi`` (pointwise algebra), and ``GRic`` through
  ``Ric+``, ``F o F``, ``d_A^* F`` and the ``F``-``H`` contraction.

Sign of ``ad P`` terms: as in :mod:`gencourant.gconn`, algebra brackets
``[u, v]`` coming from ``chi0`` carry ``ALGEBRA_SIGN``.  The coefficient of
``[F(X, Y), t]`` is ``1 + ALGEBRA_SIGN / 3``: the ``1`` is the curvature of the
gauge connection and the ``1/3`` comes from ``chi0``.
"""

from __future__ import annotations

import numpy as np

from .algebroid import Section, dorfman
from .exprs import Jet, jein
from .exprs.jet import stack
from .gconn import ALGEBRA_SIGN, D_ZERO, GenConnection, d_phi, lift_minus, lift_plus, nabla_along
from .geometry import calculus as calc
from .geometry.fields import FieldJets


def courant(fj: FieldJets, s1: Section, s2: Section) -> Section:
    """Skew-symmetrized bracket ``[[s1, s2]]``."""
    return (dorfman(fj, s1, s2) - dorfman(fj, s2, s1)) * 0.5


def connection_for(vphi: Jet | None) -> GenConnection:
    return D_ZERO if vphi is None else d_phi(vphi)


# ---------- definitional route ----------

def gr_def(D: GenConnection, fj: FieldJets, e1: Section, e2: Section, e3: Section) -> np.ndarray:
    """``GR(e1, e2) e3`` as a flat value array ``(..., 2n + m)``."""
    out = (D(fj, e1, D(fj, e2, e3)) - D(fj, e2, D(fj, e1, e3))
           - D(fj, courant(fj, e1, e2), e3))
    return out.value()


def _const_like(v: np.ndarray, like: Jet) -> Jet:
    return Jet.const(np.broadcast_to(v, like.shape[:-1] + v.shape[-1:]), like.n)


def gric_def(D: GenConnection, fj: FieldJets, Y: Jet, Z: Jet, t: Jet) -> np.ndarray:
    """``GRic(Y - gY, Z + gZ + t)``: trace of ``e1+ -> GR(e1+, e2-) e3+`` over ``V+``.

    The trace pairs the basis ``e_i + g e_i`` (dual coordinate: tangent
    component) and ``t_a`` (dual coordinate: algebra component).
    """
    n, m = fj.n, fj.m
    e2 = lift_minus(fj, Y)
    e3 = lift_plus(fj, Z, t)
    zero_r = Jet.zeros(Y.shape[:-1] + (m,), Y.n).with_order(2)
    zero_x = Jet.zeros(Y.shape, Y.n).with_order(2)
    total = 0.0
    for i in range(n):
        e1 = lift_plus(fj, _const_like(np.eye(n)[i], Y), zero_r)
        total = total + gr_def(D, fj, e1, e2, e3)[..., i]
    for a in range(m):
        e1 = lift_plus(fj, zero_x, _const_like(np.eye(m)[a], zero_r))
        total = total + gr_def(D, fj, e1, e2, e3)[..., n + a]
    return np.asarray(total)


def gric_matrix_def(D: GenConnection, fj: FieldJets) -> np.ndarray:
    """``GRic[i, J]`` with ``Y = e_i`` and ``(Z, t)`` running over ``e_j`` then ``t_a``.

    ``fj`` must carry a trailing singleton batch axis (fields built from
    points of shape ``(P, 1, n)``); the pairs are batched along it.
    """
    n, m = fj.n, fj.m
    N = n + m
    batch = fj.batch[:-1] + (n * N,)
    Ybasis = np.repeat(np.eye(n), N, axis=0)
    ZT = np.tile(np.eye(N), (n, 1))
    Y = Jet.const(np.broadcast_to(Ybasis, batch + (n,)), fj.g.n)
    Z = Jet.const(np.broadcast_to(ZT[:, :n], batch + (n,)), fj.g.n)
    t = Jet.const(np.broadcast_to(ZT[:, n:], batch + (m,)), fj.g.n)
    return gric_def(D, fj, Y, Z, t).reshape(fj.batch[:-1] + (n, N))


# ---------- R^{1/3} ----------

def r13_def(fj: FieldJets, X: Jet, Y: Jet, Z: Jet) -> np.ndarray:
    """Hybrid curvature of ``nabla^{1/3}`` and ``nabla^+`` from its definition."""
    g13, gp = fj.skew(1.0 / 6.0), fj.skew(0.5)
    avg = (g13 + gp) * 0.5
    half_diff = (g13 - gp) * 0.5
    XY = calc.lie_bracket(X, Y, fj.C)
    W = (nabla_along(g13, X, Y) + nabla_along(gp, Y, X)
         - jein("...kl,...i,...j,...ijl->...k", fj.ginv, X, Y, fj.H) * (2.0 / 3.0))
    out = (nabla_along(g13, X, nabla_along(gp, Y, Z)) - nabla_along(gp, Y, nabla_along(g13, X, Z))
           - nabla_along(avg, XY, Z) + jein("...i,...kij,...j->...k", W, half_diff, Z))
    return out.value()


def _vals(fj: FieldJets) -> dict:
    """Pointwise tensors used by the closed-form route (cached on ``fj``)."""
    key = "gcurv_vals"
    if key in fj.extras:
        return fj.extras[key]
    v = {
        "g": fj.g.value(), "gi": fj.ginv.value(), "H": fj.H.value(),
        "R": fj.Riem.value(),
        "DH": calc.nabla_covariant(fj.Gam, fj.H, 3).value(),
    }
    if fj.m:
        v["F"] = fj.F.value()
        v["DF"] = calc.gauge_nabla_form(fj.Gam, fj.A, fj.F, 2, fj.fstruct).value()
    fj.extras[key] = v
    return v


def r13_closed(fj: FieldJets, X, Y, Z) -> np.ndarray:
    """``R^g(X,Y)Z + g^{-1}(H and nabla H terms)`` from pointwise values."""
    v = _vals(fj)
    gi, H, DH = v["gi"], v["H"], v["DH"]
    ein = np.einsum

    def Hv(U, V):
        return ein("...ijk,...i,...j->...k", H, U, V)

    def up(w):
        return ein("...kl,...l->...k", gi, w)

    w = (0.5 * ein("...xijk,...x,...i,...j->...k", DH, X, Y, Z)
         - ein("...xijk,...x,...i,...j->...k", DH, Y, X, Z) / 6.0
         + Hv(X, up(Hv(Y, Z))) / 12.0 - Hv(Y, up(Hv(X, Z))) / 12.0
         - Hv(Z, up(Hv(X, Y))) / 6.0)
    return ein("...lkij,...k,...i,...j->...l", v["R"], Z, X, Y) + up(w)


# ---------- closed-form curvature ----------

def gr_closed(fj: FieldJets, vphi: Jet | None, X, r, Y, Z, t) -> np.ndarray:
    """``GR(e1+, e2-) e3+`` for ``D^phi`` from the closed formula.

    ``e1+ = X + gX + r``, ``e2- = Y - gY``, ``e3+ = Z + gZ + t``; all
    arguments are pointwise values.  Returns a flat ``(..., 2n + m)`` array.
    """
    v = _vals(fj)
    g, gi, H = v["g"], v["gi"], v["H"]
    n, m = fj.n, fj.m
    ein = np.einsum
    third = 1.0 / 3.0
    X, Y, Z = (np.asarray(u, dtype=float) for u in (X, Y, Z))
    batch = np.broadcast_shapes(X.shape[:-1], g.shape[:-2])

    def Hv(U, V):
        return ein("...ijk,...i,...j->...k", H, U, V)

    def up(w):
        return ein("...kl,...l->...k", gi, w)

    gXZ = ein("...ij,...i,...j->...", g, X, Z)
    if vphi is not None:
        ph = vphi.value()
        Dph = calc.nabla_covariant(fj.Gam, vphi, 1).value()
        # (nabla^+_Y phi)(W) = (nabla^g_Y phi)(W) - 1/2 phi(g^{-1} H(Y, W, .))
        npY = ein("...xi,...x->...i", Dph, Y) - 0.5 * ein("...l,...kl,...xik,...x->...i", ph, gi, H, Y)
    else:
        ph = np.zeros(batch + (n,))
        npY = np.zeros(batch + (n,))

    V = r13_closed(fj, X, Y, Z)
    om = np.zeros(batch + (n,))
    alg = np.zeros(batch + (m,))
    crt = gXZ
    s1 = -third * ein("...i,...i->...", npY, Z)
    if m:
        r = np.asarray(r, dtype=float)
        t = np.asarray(t, dtype=float)
        F, DF, cm, f = v["F"], v["DF"], fj.cmat, fj.fstruct
        S = ALGEBRA_SIGN

        def Fv(U, W):
            return ein("...ija,...i,...j->...a", F, U, W)

        def cF(U, s):
            return ein("...ika,ab,...b,...i->...k", F, cm, s, U)

        def cc(a_, b_):
            return ein("...a,ab,...b->...", a_, cm, b_)

        def brk(a_, b_):
            return ein("...a,...b,abc->...c", a_, b_, f)

        def nF(kappa, U):
            """``(nabla^kappa_U F)[i, j, a]`` with gauge-covariant algebra index."""
            out = ein("...xija,...x->...ija", DF, U)
            hU = ein("...kl,...xil,...x->...ik", gi, H, U)  # g^{-1} H(U, e_i, .)
            out = out - kappa * ein("...ik,...kja->...ija", hU, F) - kappa * ein("...jk,...ika->...ija", hU, F)
            return out

        def i_c(T, U, s):
            """1-form ``c(T(U, .), s)``."""
            return ein("...ija,...i,ab,...b->...j", T, U, cm, s)

        crt = gXZ + cc(r, t)
        om = (i_c(nF(1.0 / 6.0, X), Y, t)
              + third * i_c(nF(0.5, Y), Z, r)
              - third * i_c(nF(0.5, Y), X, t)
              + third * Hv(Z, up(cF(Y, r)))
              + 2 * third * cF(up(Hv(X, Y)), t)
              - third * cF(up(cF(Y, t)), r)
              - 2 * third * cF(up(cF(Y, r)), t)
              - third * cF(X, Fv(Y, Z)) - third * cF(Z, Fv(X, Y)) + third * cF(Y, Fv(X, Z))
              # c(r, [t, F(Y, e_k)])
              - third * S * ein("...a,ab,...c,...kd,cdb->...k", r, cm, t, ein("...ika,...i->...ka", F, Y), f))
        s1 = s1 + third * cc(Fv(Y, up(ph)), t)
        DFY = ein("...xija,...x->...ija", DF, Y)
        DFX = ein("...xija,...x->...ija", DF, X)
        alg = ((1.0 + third * S) * brk(Fv(X, Y), t) + third * S * brk(Fv(Y, Z), r)
               + third * ein("...ija,...i,...j->...a", DFY, X, Z)
               - ein("...ija,...i,...j->...a", DFX, Y, Z)
               - Fv(X, up(Hv(Y, Z))) / 6.0 + Fv(Y, up(Hv(X, Z))) / 6.0 + third * Fv(Z, up(Hv(X, Y)))
               - third * Fv(X, up(cF(Y, t))) - third * Fv(Y, up(cF(Z, r)))
               + third * Fv(Y, up(cF(X, t))) - 2 * third * Fv(Z, up(cF(Y, r)))
               - third * crt[..., None] * Fv(Y, up(ph)))
    else:
        r = np.zeros(batch + (0,))
    om = om + third * crt[..., None] * npY
    V = V + up(om)
    x_out = V + s1[..., None] * X
    r_out = alg + s1[..., None] * r
    xi_out = ein("...ij,...j->...i", g, V) + s1[..., None] * ein("...ij,...j->...i", g, X)
    return np.concatenate([np.broadcast_to(x_out, batch + (n,)), np.broadcast_to(r_out, batch + (m,)),
                           np.broadcast_to(xi_out, batch + (n,))], axis=-1)


# ---------- generalized Ricci tensor ----------

def h_circ_h(fj: FieldJets) -> Jet:
    """``(H o H)(Y, Z) = g^{ab} g^{cd} H(e_a, Y, e_c) H(e_b, Z, e_d)``."""
    return jein("...ab,...cd,...aic,...bjd->...ij", fj.ginv, fj.ginv, fj.H, fj.H)


def f_circ_f(fj: FieldJets) -> Jet:
    """``(F o F)(Y, Z) = g^{kl} c(F(Y, e_k), F(Z, e_l))``."""
    n = fj.n
    if not fj.m:
        return Jet.zeros(fj.batch + (n, n), fj.g.n)
    return jein("...kl,...ika,ab,...jlb->...ij", fj.ginv, fj.F, fj.cmat, fj.F)


def d_star_H(fj: FieldJets) -> Jet:
    return calc.codifferential(fj.H, 3, fj.Gam, fj.ginv)


def ricci_plus(fj: FieldJets) -> Jet:
    """``Ric^+ = Ric - (1/4) H o H - (1/2) d^* H``."""
    return fj.Ric - h_circ_h(fj) * 0.25 - d_star_H(fj) * 0.5


def ricci_plus_direct(fj: FieldJets) -> Jet:
    """Ricci tensor ``Ric^+[j, k] = Riem^+[i, k, i, j]`` of ``nabla^g + g^{-1}H/2`` (oracle)."""
    return calc.ricci(calc.riemann(fj.skew(0.5), fj.C))


def d_A_star_F(fj: FieldJets) -> Jet:
    """``(d_A^* F)[j, a] = -g^{ik} (nabla_i F)[k, j, a]``."""
    DF = calc.gauge_nabla_form(fj.Gam, fj.A, fj.F, 2, fj.fstruct)
    return -jein("...ik,...ikja->...ja", fj.ginv, DF)


def f_h_contraction(fj: FieldJets) -> Jet:
    """``K(Y) = -(1/2) g^{ab} g^{dc} F(e_a, e_d) H(e_b, Y, e_c)`` (algebra-valued 1-form)."""
    return jein("...ab,...dc,...adu,...byc->...yu",
                fj.ginv, fj.ginv, fj.F, fj.H) * -0.5


def star_F_star_H(fj: FieldJets, index: int = 0) -> Jet:
    """``(-1)^{ind + n - 1} *(F ^ *H)`` through Hodge stars (oracle for :func:`f_h_contraction`).

    With the shuffle wedge and ``alpha ^ *alpha = |alpha|^2 vol`` one has
    ``i_Y *(F ^ *H) = -(-1)^{ind + n - 1} (1/2) sum_j F(e_j, g^{-1} H(e_j, Y, .))``,
    so the returned form equals ``K``.
    """
    n, m = fj.n, fj.m
    sH = calc.hodge_star(fj.H, 3, fj.g, ginv=fj.ginv)
    comps = []
    for a in range(m):
        Fa = jein("...iju,u->...ij", fj.F, np.eye(m)[a])
        w = calc.wedge(Fa, 2, sH, n - 3)
        comps.append(calc.hodge_star(w, n - 1, fj.g, ginv=fj.ginv))
    out = stack(comps, axis=-1)
    return out * float((-1) ** (index + n - 1))


def nabla_plus_form(fj: FieldJets, vphi: Jet) -> Jet:
    """``(nabla^+ phi)[Y, W] = (nabla^+_Y phi)(W)``."""
    return calc.nabla_covariant(fj.skew(0.5), vphi, 1)


def gric_formula(fj: FieldJets, vphi: Jet | None) -> np.ndarray:
    """Closed-form ``GRic[i, J]`` (same layout as :func:`gric_matrix_def`)::

        (Ric^+ - F o F - (rk - 1)/3 nabla^+ phi)(Y, Z)
            + c(d_A^* F + K - (rk - 1)/3 F(g^{-1} phi, .), t)(Y)
    """
    n, m = fj.n, fj.m
    k = (n + m - 1) / 3.0
    tt = ricci_plus(fj) - f_circ_f(fj)
    if vphi is not None:
        tt = tt - nabla_plus_form(fj, vphi) * k
    blocks = [tt.value()]
    if m:
        vec = d_A_star_F(fj) + f_h_contraction(fj)
        if vphi is not None:
            vec = vec - jein("...kl,...l,...kja->...ja", fj.ginv, vphi, fj.F) * k
        blocks.append(np.einsum("...ja,ab->...jb", vec.value(), fj.cmat))
    return np.concatenate(blocks, axis=-1)


def gric_formula_pair(fj: FieldJets, vphi: Jet | None, Y, Z, t) -> np.ndarray:
    """``GRic(Y - gY, Z + gZ + t)`` from :func:`gric_formula`."""
    M = gric_formula(fj, vphi)
    zt = np.concatenate([np.asarray(Z), np.asarray(t)], axis=-1)
    return np.einsum("...iJ,...i,...J->...", M, Y, zt)


# ---------- generalized scalar ----------

def h_norm_sq(fj: FieldJets) -> Jet:
    """``|H|^2 = (1/6) H_{ijk} H^{ijk}``."""
    gi = fj.ginv
    return jein("...ad,...be,...cf,...abc,...def->...", gi, gi, gi, fj.H, fj.H) * (1.0 / 6.0)


def laplacian(fj: FieldJets, f: Jet) -> Jet:
    """``Delta f = g^{ij} (nabla d f)_{ij}``."""
    df = calc.frame_derivative(f, 0)
    return jein("...ij,...ij->...", fj.ginv, calc.nabla_covariant(fj.Gam, df, 1))


def grad_norm_sq(fj: FieldJets, f: Jet) -> Jet:
    df = calc.frame_derivative(f, 0)
    return jein("...ij,...i,...j->...", fj.ginv, df, df)


def gs(fj: FieldJets, phi: Jet | None = None) -> np.ndarray:
    """``GS = S + 4 Delta phi - 4 |d phi|^2 - (1/2)|H|^2``."""
    phi = fj.phi if phi is None else phi
    out = fj.S - h_norm_sq(fj) * 0.5
    out = out.value() + (laplacian(fj, phi) * 4.0 - grad_norm_sq(fj, phi) * 4.0).value()
    return out
