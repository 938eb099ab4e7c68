"""Jet-level tensor calculus in a global frame ``e_1, ..., e_n``.

Every tensor is a ``Jet`` whose tensor axes are trailing: any leading axes
are batch axes (sample points, random draws) and broadcast freely.  The
frame satisfies ``[e_i, e_j] = C^k_ij e_k`` with constant structure
constants ``C[i, j, k]``; a coordinate chart is the case ``C = 0``.

Index layouts used throughout:

* vector ``V[k]``, 1-form ``xi[i]``, k-form ``w[i1, ..., ik]`` (fully
  antisymmetric, ``w[i1..ik] = w(e_i1, ..., e_ik)``);
* Lie-algebra valued forms carry the algebra index last, e.g. ``A[i, a]``,
  ``F[i, j, a]``;
* connection coefficients ``Gam[k, i, j]`` with ``nabla_{e_i} e_j = Gam^k_ij e_k``;
* curvature ``Riem[l, k, i, j] = (R(e_i, e_j) e_k)^l``.

Wedge products use the shuffle convention (no ``1/k!``), so
``(a ^ b)(X, Y) = a(X) b(Y) - a(Y) b(X)``.
"""

from __future__ import annotations

import itertools
import math
import string

import numpy as np

from ..exprs.jet import Jet, jdet, jein, jinv, jsqrt

_L = string.ascii_lowercase


def frame_derivative(T: Jet, rank: int) -> Jet:
    """``D[i, rest] = e_i T[rest]`` for a tensor with ``rank`` tensor axes."""
    return T.d().moveaxis(-1, -(rank + 1))


def perm_sign(p) -> int:
    p = list(p)
    s = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            s = -s
    return s


def alt(T: Jet, k: int, trailing: int = 0) -> Jet:
    """Antisymmetrize ``k`` form axes, ``Alt = (1/k!) sum sign(p) p``.

    The form axes sit just before ``trailing`` value axes.
    """
    nd = T.c.ndim
    first = nd - 1 - trailing - k
    out = np.zeros_like(T.c)
    for p in itertools.permutations(range(k)):
        axes = list(range(nd))
        for s, q in enumerate(p):
            axes[first + s] = first + q
        out += perm_sign(p) * T.c.transpose(axes)
    return Jet(out / math.factorial(k), T.n, T.order)


def wedge(a: Jet, p: int, b: Jet, q: int) -> Jet:
    """Wedge product of scalar forms of degrees ``p`` and ``q``."""
    la, lb = _L[:p], _L[p:p + q]
    outer = jein(f"...{la},...{lb}->...{la}{lb}", a, b)
    return alt(outer, p + q) * float(math.comb(p + q, p))


def c_wedge(F1: Jet, p: int, F2: Jet, q: int, c: np.ndarray) -> Jet:
    """``c(F1 ^ F2)`` for algebra-valued forms (algebra index last)."""
    la, lb = _L[:p], _L[p:p + q]
    outer = jein(f"...{la}y,yz,...{lb}z->...{la}{lb}", F1, c, F2)
    return alt(outer, p + q) * float(math.comb(p + q, p))


def interior(X: Jet, w: Jet, rank: int) -> Jet:
    """Contract a vector into the first slot of a tensor with ``rank`` axes."""
    rest = _L[1:rank]
    return jein(f"...a,...a{rest}->...{rest}", X, w)


def lie_bracket(X: Jet, Y: Jet, C: np.ndarray) -> Jet:
    dX, dY = X.d(), Y.d()
    return (jein("...i,...ki->...k", X, dY) - jein("...i,...ki->...k", Y, dX)
            + jein("...i,...j,ijk->...k", X, Y, C))


def exterior_d(w: Jet, k: int, C: np.ndarray, A: Jet | None = None,
               fstruct: np.ndarray | None = None, valued: bool = False) -> Jet:
    """Exterior derivative of a k-form (covariant ``d_A`` when ``A`` is given).

    ``valued`` marks a trailing Lie-algebra axis.  For frames with
    structure constants the bracket terms ``w([e_s, e_t], ...)`` are included.
    """
    v = 1 if valued else 0
    T = k + 1 + v  # tensor rank of the result
    P = frame_derivative(w, k + v)  # [i0, rest, (a)]
    if A is not None:
        if not valued:
            raise ValueError("covariant exterior derivative needs an algebra-valued form")
        rest = "jklm"[:k]
        P = P + jein(f"...iu,...{rest}v,uvw->...i{rest}w", A, w, fstruct)
    out = None
    for s in range(k + 1):
        term = P.moveaxis(-T, -T + s) if s else P
        term = term * float((-1) ** s)
        out = term if out is None else out + term
    if k >= 1 and np.any(C):
        rest = _L[3:3 + k - 1] + ("y" if valued else "")
        Q = jein(f"stm,...m{rest}->...st{rest}", C, w)
        for s in range(k + 1):
            for t in range(s + 1, k + 1):
                term = Q.moveaxis([-T, -T + 1], [-T + s, -T + t])
                out = out + term * float((-1) ** (s + t))
    return out


def christoffel(g: Jet, C: np.ndarray, ginv: Jet | None = None) -> Jet:
    """Levi-Civita coefficients ``Gam[k, i, j]`` from the Koszul formula."""
    if ginv is None:
        ginv = jinv(g)
    D = g.d()  # D[a, b, c] = e_c g_ab
    low = (jein("...jli->...lij", D) + jein("...ilj->...lij", D) - jein("...ijl->...lij", D))
    if np.any(C):
        low = low + (jein("ijm,...ml->...lij", C, g) - jein("ilm,...mj->...lij", C, g)
                     - jein("jlm,...mi->...lij", C, g))
    return jein("...kl,...lij->...kij", ginv, low) * 0.5


def riemann(Gam: Jet, C: np.ndarray) -> Jet:
    """Curvature of the connection with coefficients ``Gam``."""
    dG = Gam.d()  # dG[l, j, k, i] = e_i Gam^l_jk
    R = (jein("...ljki->...lkij", dG) - jein("...likj->...lkij", dG)
         + jein("...lim,...mjk->...lkij", Gam, Gam) - jein("...ljm,...mik->...lkij", Gam, Gam))
    if np.any(C):
        R = R - jein("ijm,...lmk->...lkij", C, Gam)
    return R


def ricci(R: Jet) -> Jet:
    """``Ric(Y, Z) = tr(X -> R(X, Y) Z)``."""
    return jein("...ikij->...jk", R)


def scalar_curvature(Ric: Jet, ginv: Jet) -> Jet:
    return jein("...jk,...jk->...", ginv, Ric)


def riemann_ricci_scalar(g: Jet, C: np.ndarray):
    """``(Riem, Ric, S)`` of the Levi-Civita connection of ``g``."""
    ginv = jinv(g)
    R = riemann(christoffel(g, C, ginv), C)
    Ric = ricci(R)
    return R, Ric, scalar_curvature(Ric, ginv)


def nabla_vector(Gam: Jet, V: Jet) -> Jet:
    """``(nabla V)[i, k] = (nabla_{e_i} V)^k``."""
    return frame_derivative(V, 1) + jein("...kij,...j->...ik", Gam, V)


def nabla_covariant(Gam: Jet, T: Jet, rank: int, trailing: int = 0) -> Jet:
    """``(nabla T)[i, j1..jp, (a)]`` for a covariant tensor with ``rank`` slots.

    ``trailing`` value axes (e.g. a Lie-algebra index) are left untouched.
    """
    out = frame_derivative(T, rank + trailing)
    idx = _L[1:rank + 1]
    tail = "yz"[:trailing]
    for s in range(rank):
        src = idx[:s] + "x" + idx[s + 1:]
        out = out - jein(f"...x{_L[0]}{idx[s]},...{src}{tail}->...{_L[0]}{idx}{tail}", Gam, T)
    return out


def hodge_star(w: Jet, k: int, g: Jet, orientation: int = 1, ginv: Jet | None = None) -> Jet:
    """``(*w)_J = (1/k!) w^I vol_IJ`` with ``vol = orientation sqrt|det g| e^1 ^ ... ^ e^n``."""
    n = g.shape[-1]
    if ginv is None:
        ginv = jinv(g)
    det = jdet(g)
    sign = np.sign(det.val)
    vol = jsqrt(det * sign) * float(orientation)
    eps = levi_civita(n)
    up = w
    for s in range(k):
        idx = _L[:k]
        up = jein(f"...x{idx[s]},...{idx[:s]}x{idx[s + 1:]}->...{idx}", ginv, up)
    I, J = _L[:k], _L[k:n]
    out = jein(f"...{I},{I}{J},...->...{J}", up, eps, vol)
    return out * (1.0 / math.factorial(k))


def levi_civita(n: int) -> np.ndarray:
    eps = np.zeros((n,) * n)
    for p in itertools.permutations(range(n)):
        eps[p] = perm_sign(p)
    return eps


def codifferential(w: Jet, k: int, Gam: Jet, ginv: Jet) -> Jet:
    """``d* w = -sum_j eps_j i_{e_j} nabla_{e_j} w`` written as a dual-basis trace."""
    rest = _L[2:k + 1]
    return -jein(f"...ab,...ab{rest}->...{rest}", ginv, nabla_covariant(Gam, w, k))


def codifferential_hodge(w: Jet, k: int, g: Jet, C: np.ndarray, index: int = 0) -> Jet:
    """``d* = (-1)^(n(k+1)+1+ind) * d *``; test oracle for :func:`codifferential`."""
    n = g.shape[-1]
    s = hodge_star(w, k, g)
    ds = exterior_d(s, n - k, C)
    return hodge_star(ds, n - k + 1, g) * float((-1) ** (n * (k + 1) + 1 + index))


def algebra_bracket(u: Jet, v: Jet, fstruct: np.ndarray) -> Jet:
    """``[u, v]^c = f_ab^c u^a v^b`` for algebra vectors with matching batch axes."""
    return jein("...a,...b,abc->...c", u, v, fstruct)


def gauge_curvature(A: Jet, C: np.ndarray, fstruct: np.ndarray) -> Jet:
    """``F = dA + [A ^ A]/2``, i.e. ``F_ij = e_i A_j - e_j A_i - C^m_ij A_m + [A_i, A_j]``."""
    F = exterior_d(A, 1, C, valued=True)
    if np.any(fstruct):
        F = F + jein("...ib,...jc,bca->...ija", A, A, fstruct)
    return F


def gauge_nabla(A: Jet, r: Jet, fstruct: np.ndarray) -> Jet:
    """``(nabla^A r)[i, a] = e_i r^a + [A_i, r]^a``."""
    out = frame_derivative(r, 1)
    if np.any(fstruct):
        out = out + jein("...ib,...c,bca->...ia", A, r, fstruct)
    return out


def gauge_nabla_form(Gam: Jet, A: Jet, w: Jet, k: int, fstruct: np.ndarray) -> Jet:
    """``(nabla w)[i, j1..jk, a]`` for an algebra-valued k-form (Levi-Civita plus ``[A_i, .]``)."""
    out = nabla_covariant(Gam, w, k, trailing=1)
    if np.any(fstruct):
        idx = _L[1:k + 1]
        out = out + jein(f"...{_L[0]}y,...{idx}z,yzw->...{_L[0]}{idx}w", A, w, fstruct)
    return out


def skew_connection(Gam: Jet, ginv: Jet, H: Jet, kappa: float) -> Jet:
    """Coefficients of ``nabla^g + kappa g^{-1} H``: ``nabla_Y Z = nabla^g_Y Z + kappa g^{-1}H(Y, Z, .)``."""
    return Gam + jein("...kl,...ijl->...kij", ginv, H) * float(kappa)


def torsion(Gam: Jet, C: np.ndarray) -> Jet:
    """``T[k, i, j] = (nabla_i e_j - nabla_j e_i - [e_i, e_j])^k``."""
    T = Gam - Gam.swap(-1, -2)
    if np.any(C):
        T = T - Jet.const(np.einsum("ijk->kij", C), Gam.n)
    return T


def metricity(Gam: Jet, g: Jet) -> Jet:
    """``(nabla g)[i, j, l]``; vanishes for metric connections."""
    return (frame_derivative(g, 2) - jein("...kij,...kl->...ijl", Gam, g)
            - jein("...kil,...jk->...ijl", Gam, g))


def structure_jacobi_residual(C: np.ndarray) -> float:
    """Max violation of ``[[e_i, e_j], e_k] + cyclic = 0``."""
    J = (np.einsum("ijm,mkl->ijkl", C, C) + np.einsum("jkm,mil->ijkl", C, C)
         + np.einsum("kim,mjl->ijkl", C, C))
    return float(np.max(np.abs(J))) if J.size else 0.0
