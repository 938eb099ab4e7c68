"""Second-order jets of tensor-valued fields at a single base point.

A ``Jet`` stores, for every tensor component, the value, the first frame
derivatives ``e_i f`` and the second frame derivatives ``e_i e_j f`` at the
base point.  The frame need not be holonomic: on a Lie group the second
derivatives satisfy ``e_i e_j f - e_j e_i f = C^k_ij e_k f`` and are not
symmetric.  Products follow the Leibniz rule exactly up to order two, so the
jet of any polynomial/analytic combination of fields is exact.

Differentiating a jet loses one order of validity; ``Jet.order`` tracks how
many derivatives are still trustworthy and evaluation of an invalid slot
raises instead of returning silent zeros.
"""

from __future__ import annotations

import string
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

ArrayLike = Union[np.ndarray, float, int]


def jet_size(n: int) -> int:
    return 1 + n + n * n


def _dim_from_size(N: int) -> int:
    n = int(round((-1 + np.sqrt(1 + 4 * (N - 1))) / 2))
    if jet_size(n) != N:
        raise ValueError(f"{N} is not a valid jet width")
    return n


@lru_cache(maxsize=None)
def product_tensor(n: int) -> np.ndarray:
    """Structure tensor ``M[I, J, K]`` of the truncated jet product."""
    N = jet_size(n)
    M = np.zeros((N, N, N))
    M[0, 0, 0] = 1.0
    for i in range(n):
        M[1 + i, 0, 1 + i] = 1.0
        M[0, 1 + i, 1 + i] = 1.0
    for i in range(n):
        for j in range(n):
            ij = 1 + n + i * n + j
            M[ij, 0, ij] = 1.0
            M[0, ij, ij] = 1.0
            M[1 + i, 1 + j, ij] += 1.0
            M[1 + j, 1 + i, ij] += 1.0
    return M


class JetOrderError(ValueError):
    """Raised when a derivative slot is read beyond its validity order."""


class Jet:
    """Tensor-valued 2-jet; ``c`` has shape ``tensor_shape + (1 + n + n*n,)``."""

    __slots__ = ("c", "n", "order")
    __array_priority__ = 100

    def __init__(self, c: np.ndarray, n: int, order: int = 2):
        self.c = np.asarray(c, dtype=float)
        self.n = n
        self.order = order
        if self.c.shape[-1] != jet_size(n):
            raise ValueError("jet axis has wrong width")

    # ---------- construction ----------
    @classmethod
    def const(cls, value: ArrayLike, n: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (jet_size(n),))
        c[..., 0] = value
        return cls(c, n, 2)

    @classmethod
    def zeros(cls, shape: Sequence[int], n: int) -> "Jet":
        return cls(np.zeros(tuple(shape) + (jet_size(n),)), n, 2)

    @classmethod
    def from_parts(cls, val, grad=None, hess=None, *, n: int, order: int = 2) -> "Jet":
        val = np.asarray(val, dtype=float)
        c = np.zeros(val.shape + (jet_size(n),))
        c[..., 0] = val
        if grad is not None:
            c[..., 1:1 + n] = grad
        if hess is not None:
            c[..., 1 + n:] = np.asarray(hess, dtype=float).reshape(val.shape + (n * n,))
        return cls(c, n, order)

    @classmethod
    def coordinate(cls, point: Sequence[float], index: int) -> "Jet":
        """Jet of the coordinate function ``x^index`` in a holonomic chart."""
        n = len(point)
        grad = np.zeros(n)
        grad[index] = 1.0
        return cls.from_parts(point[index], grad, None, n=n)

    # ---------- views ----------
    @property
    def shape(self) -> tuple:
        return self.c.shape[:-1]

    @property
    def ndim(self) -> int:
        return self.c.ndim - 1

    @property
    def val(self) -> np.ndarray:
        return self.c[..., 0]

    @property
    def grad(self) -> np.ndarray:
        if self.order < 1:
            raise JetOrderError("first derivatives not available")
        return self.c[..., 1:1 + self.n]

    @property
    def hess(self) -> np.ndarray:
        if self.order < 2:
            raise JetOrderError("second derivatives not available")
        return self.c[..., 1 + self.n:].reshape(self.shape + (self.n, self.n))

    def value(self) -> np.ndarray:
        if self.order < 0:
            raise JetOrderError("value of an over-differentiated jet")
        return self.c[..., 0]

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, n={self.n}, order={self.order})"

    # ---------- tensor-axis manipulation ----------
    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        if Ellipsis not in idx:
            idx = idx + (Ellipsis,)
        return Jet(self.c[idx + (slice(None),)], self.n, self.order)

    def transpose(self, *axes: int) -> "Jet":
        axes = tuple(axes) + (self.ndim,)
        return Jet(self.c.transpose(axes), self.n, self.order)

    def swap(self, a: int, b: int) -> "Jet":
        """Swap two tensor axes (negative indices count from the last tensor axis)."""
        a = a - 1 if a < 0 else a
        b = b - 1 if b < 0 else b
        return Jet(np.swapaxes(self.c, a, b), self.n, self.order)

    def moveaxis(self, source, destination) -> "Jet":
        """``numpy.moveaxis`` over tensor axes; use negative (from the right) indices."""
        src = np.atleast_1d(source)
        dst = np.atleast_1d(destination)
        if np.any(src >= 0) or np.any(dst >= 0):
            raise ValueError("tensor axes must be given as negative indices")
        return Jet(np.moveaxis(self.c, tuple(src - 1), tuple(dst - 1)), self.n, self.order)

    def sum(self, axis) -> "Jet":
        if isinstance(axis, int):
            axis = (axis,)
        axis = tuple(a % self.ndim for a in axis)
        return Jet(self.c.sum(axis=axis), self.n, self.order)

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return Jet(self.c.reshape(tuple(shape) + (self.c.shape[-1],)), self.n, self.order)

    def with_order(self, order: int) -> "Jet":
        return Jet(self.c, self.n, min(order, self.order))

    def copy(self) -> "Jet":
        return Jet(self.c.copy(), self.n, self.order)

    # ---------- arithmetic ----------
    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.n != self.n:
                raise ValueError("jets over different dimensions")
            return other
        return Jet.const(other, self.n)

    def __add__(self, other) -> "Jet":
        o = self._lift(other)
        return Jet(self.c + o.c, self.n, min(self.order, o.order))

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        o = self._lift(other)
        return Jet(self.c - o.c, self.n, min(self.order, o.order))

    def __rsub__(self, other) -> "Jet":
        return self._lift(other) - self

    def __neg__(self) -> "Jet":
        return Jet(-self.c, self.n, self.order)

    def __mul__(self, other) -> "Jet":
        if not isinstance(other, Jet):
            o = np.asarray(other, dtype=float)
            return Jet(self.c * o[..., None], self.n, self.order)
        n = self.n
        a, b = self.c, other.c
        a0, b0 = a[..., 0], b[..., 0]
        a1, b1 = a[..., 1:1 + n], b[..., 1:1 + n]
        shape = np.broadcast_shapes(a0.shape, b0.shape)
        a2 = a[..., 1 + n:].reshape(a0.shape + (n, n))
        b2 = b[..., 1 + n:].reshape(b0.shape + (n, n))
        out = np.empty(shape + (jet_size(n),))
        out[..., 0] = a0 * b0
        out[..., 1:1 + n] = a1 * b0[..., None] + a0[..., None] * b1
        h = (a2 * b0[..., None, None] + b2 * a0[..., None, None]
             + a1[..., :, None] * b1[..., None, :] + b1[..., :, None] * a1[..., None, :])
        out[..., 1 + n:] = h.reshape(shape + (n * n,))
        return Jet(out, n, min(self.order, other.order))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return self * reciprocal(other)
        return Jet(self.c / np.asarray(other, dtype=float)[..., None], self.n, self.order)

    def __rtruediv__(self, other) -> "Jet":
        return self._lift(other) * reciprocal(self)

    # ---------- differentiation ----------
    def d(self) -> "Jet":
        """Frame derivatives: result[..., k] is the jet of ``e_k f``."""
        n = self.n
        out = np.zeros(self.shape + (n, jet_size(n)))
        out[..., :, 0] = self.c[..., 1:1 + n]
        hess = self.c[..., 1 + n:].reshape(self.shape + (n, n))
        out[..., :, 1:1 + n] = np.swapaxes(hess, -1, -2)
        return Jet(out, n, self.order - 1)


def asjet(x, n: int) -> Jet:
    return x if isinstance(x, Jet) else Jet.const(x, n)


def stack(jets: Sequence[Jet], axis: int = 0) -> Jet:
    jets = list(jets)
    n = jets[0].n
    ndim = jets[0].ndim
    if axis < 0:
        axis += ndim + 1
    c = np.stack([j.c for j in jets], axis=axis)
    return Jet(c, n, min(j.order for j in jets))


def _split(c: np.ndarray, n: int):
    v = c[..., 0]
    g = c[..., 1:1 + n]
    h = c[..., 1 + n:].reshape(v.shape + (n, n))
    return v, g, h


def _join(v, g, h, n: int) -> np.ndarray:
    out = np.empty(v.shape + (jet_size(n),))
    out[..., 0] = v
    out[..., 1:1 + n] = g
    out[..., 1 + n:] = h.reshape(v.shape + (n * n,))
    return out


def _jet_product(sa: str, a: np.ndarray, sb: str, b: np.ndarray, so: str, n: int) -> np.ndarray:
    """Truncated Leibniz product of two jet arrays contracted as ``sa, sb -> so``."""
    a0, a1, a2 = _split(a, n)
    b0, b1, b2 = _split(b, n)
    e = np.einsum
    v = e(f"{sa},{sb}->{so}", a0, b0)
    g = e(f"{sa}K,{sb}->{so}K", a1, b0) + e(f"{sa},{sb}K->{so}K", a0, b1)
    cross = e(f"{sa}K,{sb}L->{so}KL", a1, b1)
    h = (e(f"{sa}KL,{sb}->{so}KL", a2, b0) + e(f"{sa},{sb}KL->{so}KL", a0, b2)
         + cross + np.swapaxes(cross, -1, -2))
    return _join(v, g, h, n)


@lru_cache(maxsize=4096)
def _schedule(spec: str, is_jet: tuple):
    """Pairwise contraction plan: constants folded into the first jet, then jets one by one.

    The jet order is chosen greedily to keep intermediate tensors narrow.
    """
    lhs, rhs = spec.replace(" ", "").split("->")
    terms = lhs.split(",")
    if len(terms) != len(is_jet):
        raise ValueError("operand count does not match einsum spec")
    jets = [i for i, j in enumerate(is_jet) if j]
    consts = [i for i, j in enumerate(is_jet) if not j]

    def letters(t):
        return [ch for ch in t.replace("...", "")]

    def keep(used, remaining):
        need = set(letters(rhs))
        for r in remaining:
            need |= set(letters(terms[r]))
        seen = []
        for t in used:
            for ch in letters(terms[t]):
                if ch in need and ch not in seen:
                    seen.append(ch)
        return "..." + "".join(seen)

    def plan(order):
        first, rest = order[0], list(order[1:])
        fold_in = [first] + consts
        cur = keep(fold_in, rest) if rest else rhs
        fold_spec = ",".join(terms[i] + ("J" if i == first else "") for i in fold_in) + "->" + cur + "J"
        steps = []
        used = fold_in
        width = len(cur)
        for k, j in enumerate(rest):
            used = used + [j]
            out = rhs if k == len(rest) - 1 else keep(used, rest[k + 1:])
            steps.append((cur, j, terms[j], out))
            width = max(width, len(out))
            cur = out
        return width, fold_in, fold_spec, steps

    # greedy order from every starting jet; keep the plan with the narrowest intermediate
    best = None
    for start in jets:
        order = [start]
        left = [j for j in jets if j != start]
        while left:
            nxt = min(left, key=lambda j: len(keep([order[0]] + consts + order[1:] + [j],
                                                   [r for r in left if r != j])))
            order.append(nxt)
            left.remove(nxt)
        cand = plan(order)
        if best is None or cand[0] < best[0]:
            best = cand
    _, fold_in, fold_spec, steps = best
    return fold_in, fold_spec, steps


def jein(spec: str, *ops) -> Jet | np.ndarray:
    """``numpy.einsum`` over tensor axes with jet products on the jet axis.

    Operands may mix ``Jet`` and plain arrays (constants).  The result is a
    ``Jet`` whose order is the minimum over jet operands.  Tensor indices in
    ``spec`` must be lowercase letters.
    """
    is_jet = tuple(isinstance(o, Jet) for o in ops)
    if not any(is_jet):
        return np.einsum(spec, *ops)
    jets = [o for o in ops if isinstance(o, Jet)]
    n = jets[0].n
    fold_in, fold_spec, steps = _schedule(spec, is_jet)
    arrays = [ops[i].c if is_jet[i] else np.asarray(ops[i], dtype=float) for i in fold_in]
    cur = np.einsum(fold_spec, *arrays)
    for sa, j, sb, so in steps:
        cur = _jet_product(sa, cur, sb, ops[j].c, so, n)
    return Jet(cur, n, min(j.order for j in jets))


def japply(a: Jet, f0: np.ndarray, f1: np.ndarray, f2: np.ndarray) -> Jet:
    """Chain rule for an elementwise scalar function with derivatives f', f''."""
    n = a.n
    a0 = a.c[..., 0]
    a1 = a.c[..., 1:1 + n]
    a2 = a.c[..., 1 + n:].reshape(a0.shape + (n, n))
    out = np.empty_like(a.c)
    out[..., 0] = f0
    out[..., 1:1 + n] = f1[..., None] * a1
    h = f2[..., None, None] * a1[..., :, None] * a1[..., None, :] + f1[..., None, None] * a2
    out[..., 1 + n:] = h.reshape(a0.shape + (n * n,))
    return Jet(out, n, a.order)


def reciprocal(a: Jet) -> Jet:
    x = a.c[..., 0]
    if np.any(x == 0.0):
        raise ZeroDivisionError("reciprocal of a jet with zero value")
    return japply(a, 1.0 / x, -1.0 / x**2, 2.0 / x**3)


def jexp(a: Jet) -> Jet:
    e = np.exp(a.c[..., 0])
    return japply(a, e, e, e)


def jlog(a: Jet) -> Jet:
    x = a.c[..., 0]
    return japply(a, np.log(x), 1.0 / x, -1.0 / x**2)


def jsqrt(a: Jet) -> Jet:
    x = a.c[..., 0]
    s = np.sqrt(x)
    return japply(a, s, 0.5 / s, -0.25 / (s * x))


def jsin(a: Jet) -> Jet:
    x = a.c[..., 0]
    return japply(a, np.sin(x), np.cos(x), -np.sin(x))


def jcos(a: Jet) -> Jet:
    x = a.c[..., 0]
    return japply(a, np.cos(x), -np.sin(x), -np.cos(x))


def jpow(a: Jet, k: int) -> Jet:
    x = a.c[..., 0]
    if k >= 0:
        f1 = k * x ** (k - 1) if k >= 1 else np.zeros_like(x)
        f2 = k * (k - 1) * x ** (k - 2) if k >= 2 else np.zeros_like(x)
        return japply(a, x**k, f1, f2)
    if np.any(x == 0.0):
        raise ZeroDivisionError("negative power of a jet with zero value")
    return japply(a, x**k, k * x ** (k - 1), k * (k - 1) * x ** (k - 2))


def jinv(g: Jet) -> Jet:
    """Matrix inverse over the last two tensor axes."""
    n = g.n
    g0 = g.c[..., 0]
    gi = np.linalg.inv(g0)
    g1 = np.moveaxis(g.c[..., 1:1 + n], -1, -3)  # (..., k, a, b)
    out = np.zeros_like(g.c)
    out[..., 0] = gi
    gi_b = gi[..., None, :, :]
    d1 = -gi_b @ g1 @ gi_b  # (..., k, a, b)
    out[..., 1:1 + n] = np.moveaxis(d1, -3, -1)
    if g.order >= 2:
        g2 = g.c[..., 1 + n:].reshape(g0.shape + (n, n))
        g2 = np.moveaxis(g2, (-2, -1), (-4, -3))  # (..., k, l, a, b)
        gk = (gi_b @ g1)[..., :, None, :, :]
        gl = (gi_b @ g1)[..., None, :, :, :]
        gi_bb = gi[..., None, None, :, :]
        h = gk @ gl @ gi_bb + gl @ gk @ gi_bb - gi_bb @ g2 @ gi_bb
        h = np.moveaxis(h, (-4, -3), (-2, -1))  # (..., a, b, k, l)
        out[..., 1 + n:] = h.reshape(g0.shape + (n * n,))
    return Jet(out, n, g.order)


def jdet(g: Jet) -> Jet:
    """Determinant over the last two tensor axes."""
    n = g.n
    g0 = g.c[..., 0]
    det = np.linalg.det(g0)
    gi = np.linalg.inv(g0)
    g1 = g.c[..., 1:1 + n]
    tr1 = np.einsum("...ab,...bak->...k", gi, g1)
    out = np.zeros(det.shape + (jet_size(n),))
    out[..., 0] = det
    out[..., 1:1 + n] = det[..., None] * tr1
    if g.order >= 2:
        g2 = g.c[..., 1 + n:].reshape(g0.shape + (n, n))
        tr2 = np.einsum("...ab,...bakl->...kl", gi, g2)
        trp = np.einsum("...ab,...bck,...cd,...dal->...kl", gi, g1, gi, g1)
        h = det[..., None, None] * (tr1[..., :, None] * tr1[..., None, :] + tr2 - trp)
        out[..., 1 + n:] = h.reshape(det.shape + (n * n,))
    return Jet(out, n, g.order)


def deriv_along(f: Jet, v: Jet | np.ndarray) -> Jet:
    """Directional derivative ``V(f) = V^k e_k f`` for a vector of jets ``v``."""
    df = f.d()
    letters = string.ascii_lowercase[: f.ndim]
    return jein(f"{letters}k,k->{letters}", df, v)


def random_germ(rng: np.random.Generator, shape, n: int, structure=None, scale: float = 1.0) -> Jet:
    """A random 2-jet consistent with the frame commutators ``structure[i, j, k] = C^k_ij``."""
    shape = tuple(shape)
    val = rng.normal(size=shape) * scale
    grad = rng.normal(size=shape + (n,)) * scale
    sym = rng.normal(size=shape + (n, n)) * scale
    hess = 0.5 * (sym + np.swapaxes(sym, -1, -2))
    if structure is not None:
        hess = hess + 0.5 * np.einsum("ijk,...k->...ij", structure, grad)
    return Jet.from_parts(val, grad, hess, n=n)
