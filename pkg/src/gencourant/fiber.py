"""Pointwise linear algebra on ``W = V + g + V*``.

Vectors are split as ``x + r + xi`` (tangent, Lie-algebra and cotangent
blocks).  The pairing is ``<u, v> = (xi_u(x_v) + xi_v(x_u)) / 2 + c(r_u, r_v)``
so that ``<u, u> = xi(x) + c(r, r)``.  Quadratic forms are stored as explicit
Gram matrices and may be indefinite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DET_FLOOR = 1e-10


class FiberDimensionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if m.size == 0:
            m = np.zeros((0, 0))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise FiberDimensionError("quadratic form must be a square matrix")
        if not np.allclose(m, m.T, atol=1e-13, rtol=0):
            raise ValueError("quadratic form must be symmetric")
        if m.shape[0] and abs(np.linalg.det(m)) < DET_FLOOR:
            raise ValueError("quadratic form is degenerate")
        object.__setattr__(self, "matrix", 0.5 * (m + m.T))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix) if self.dim else self.matrix

    def __call__(self, u, v) -> float:
        return float(np.asarray(u) @ self.matrix @ np.asarray(v))

    def signature(self) -> tuple:
        """Numbers of positive and negative eigenvalues."""
        w = np.linalg.eigvalsh(self.matrix) if self.dim else np.zeros(0)
        return int((w > 0).sum()), int((w < 0).sum())

    @classmethod
    def identity(cls, dim: int) -> "QuadraticForm":
        return cls(np.eye(dim))


@dataclass(frozen=True, eq=False)
class GeneralizedVector:
    x: np.ndarray
    r: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        for name in ("x", "r", "xi"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        if self.x.shape != self.xi.shape:
            raise FiberDimensionError("tangent and cotangent blocks differ in size")

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def m(self) -> int:
        return self.r.size

    def __add__(self, other: "GeneralizedVector") -> "GeneralizedVector":
        _check_same(self, other)
        return GeneralizedVector(self.x + other.x, self.r + other.r, self.xi + other.xi)

    def __sub__(self, other: "GeneralizedVector") -> "GeneralizedVector":
        _check_same(self, other)
        return GeneralizedVector(self.x - other.x, self.r - other.r, self.xi - other.xi)

    def __mul__(self, s: float) -> "GeneralizedVector":
        return GeneralizedVector(s * self.x, s * self.r, s * self.xi)

    __rmul__ = __mul__

    def __neg__(self) -> "GeneralizedVector":
        return self * -1.0

    def flat(self) -> np.ndarray:
        return np.concatenate([self.x, self.r, self.xi])

    @classmethod
    def from_flat(cls, v, n: int, m: int) -> "GeneralizedVector":
        v = np.asarray(v, dtype=float)
        return cls(v[:n], v[n:n + m], v[n + m:])

    @classmethod
    def zero(cls, n: int, m: int) -> "GeneralizedVector":
        return cls(np.zeros(n), np.zeros(m), np.zeros(n))


def _check_same(u: GeneralizedVector, v: GeneralizedVector, c: QuadraticForm | None = None):
    if u.n != v.n or u.m != v.m:
        raise FiberDimensionError(f"block sizes ({u.n},{u.m}) and ({v.n},{v.m}) differ")
    if c is not None and c.dim != u.m:
        raise FiberDimensionError(f"pairing on g has dimension {c.dim}, vectors have {u.m}")


def pairing(u: GeneralizedVector, v: GeneralizedVector, c: QuadraticForm) -> float:
    _check_same(u, v, c)
    return 0.5 * (u.xi @ v.x + v.xi @ u.x) + float(u.r @ c.matrix @ v.r)


def gram_matrix(n: int, c: QuadraticForm) -> np.ndarray:
    """Gram matrix of the pairing in the flat ``(x, r, xi)`` coordinates."""
    m = c.dim
    P = np.zeros((2 * n + m, 2 * n + m))
    P[:n, n + m:] = 0.5 * np.eye(n)
    P[n + m:, :n] = 0.5 * np.eye(n)
    P[n:n + m, n:n + m] = c.matrix
    return P


def c_wedge(a1: np.ndarray, a2: np.ndarray, c: QuadraticForm) -> np.ndarray:
    """The 2-form ``(x, y) -> c(a1 x, a2 y) - c(a1 y, a2 x)``; ``a`` arrays are n x m."""
    B = np.asarray(a1) @ c.matrix @ np.asarray(a2).T
    return B - B.T


@dataclass(frozen=True, eq=False)
class BATransform:
    """The orthogonal map generated by a 2-form ``b`` and a g-valued 1-form ``a``.

    ``a[i, k]`` is the k-th component of ``a(e_i)``; ``b`` is skew.
    """

    b: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.b, dtype=float))
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 2 or a.shape[0] != b.shape[0]:
            raise FiberDimensionError("a must be an n x m array matching b")
        if not np.allclose(b, -b.T, atol=1e-13, rtol=0):
            raise ValueError("b must be skew-symmetric")
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a", a)

    @property
    def n(self) -> int:
        return self.b.shape[0]

    @property
    def m(self) -> int:
        return self.a.shape[1]

    def inverse(self) -> "BATransform":
        return BATransform(-self.b, -self.a)

    def matrix(self, c: QuadraticForm) -> np.ndarray:
        n, m = self.n, self.m
        if c.dim != m:
            raise FiberDimensionError("pairing dimension does not match a")
        cm = c.matrix
        T = np.eye(2 * n + m)
        T[n:n + m, :n] = self.a.T
        aa = self.a @ cm @ self.a.T
        T[n + m:, :n] = self.b.T - aa
        T[n + m:, n:n + m] = -2.0 * self.a @ cm
        return T


def ba_apply(t: BATransform, u: GeneralizedVector, c: QuadraticForm) -> GeneralizedVector:
    """``(x, r + a x, xi + b(x, .) - c(a x, a .) - 2 c(a ., r))``."""
    if t.n != u.n or t.m != u.m or c.dim != u.m:
        raise FiberDimensionError("transform and vector dimensions differ")
    cm = c.matrix
    ax = u.x @ t.a
    xi = u.xi + u.x @ t.b - t.a @ (cm @ ax) - 2.0 * t.a @ (cm @ u.r)
    return GeneralizedVector(u.x, u.r + ax, xi)


def ba_compose(t1: BATransform, t2: BATransform, c: QuadraticForm) -> BATransform:
    """Group law ``(b, a)(b', a') = (b + b' + c(a ^ a'), a + a')``."""
    if (t1.n, t1.m) != (t2.n, t2.m) or c.dim != t1.m:
        raise FiberDimensionError("transform dimensions differ")
    return BATransform(t1.b + t2.b + c_wedge(t1.a, t2.a, c), t1.a + t2.a)


@dataclass(frozen=True, eq=False)
class SoWElement:
    """Element of so(W) in block form.

    Blocks: ``f`` (V->V), ``b`` (skew, V->V*), ``a`` (n x m, V->g),
    ``beta`` (skew bivector, V*->V), ``e`` (c-skew, g->g), ``alpha``
    (n x m, V*->g).  The remaining blocks are fixed by skewness.
    """

    f: np.ndarray
    b: np.ndarray
    a: np.ndarray
    beta: np.ndarray
    e: np.ndarray
    alpha: np.ndarray
    c: QuadraticForm

    def __post_init__(self):
        n = np.asarray(self.f).shape[0]
        m = self.c.dim
        shapes = {"f": (n, n), "b": (n, n), "a": (n, m), "beta": (n, n), "e": (m, m), "alpha": (n, m)}
        for name, shape in shapes.items():
            arr = np.asarray(getattr(self, name), dtype=float).reshape(shape)
            object.__setattr__(self, name, arr)
        if not np.allclose(self.b, -self.b.T, atol=1e-12):
            raise ValueError("b block must be skew")
        if not np.allclose(self.beta, -self.beta.T, atol=1e-12):
            raise ValueError("beta block must be skew")
        ce = self.c.matrix @ self.e
        if not np.allclose(ce, -ce.T, atol=1e-12):
            raise ValueError("e block is not c-skew")

    @classmethod
    def zero(cls, n: int, c: QuadraticForm) -> "SoWElement":
        m = c.dim
        z = np.zeros
        return cls(z((n, n)), z((n, n)), z((n, m)), z((n, n)), z((m, m)), z((n, m)), c)

    def matrix(self) -> np.ndarray:
        n, m = self.f.shape[0], self.c.dim
        cm = self.c.matrix
        L = np.zeros((2 * n + m, 2 * n + m))
        X, R, XI = slice(0, n), slice(n, n + m), slice(n + m, 2 * n + m)
        L[X, X] = self.f
        L[X, R] = -2.0 * self.alpha @ cm
        L[X, XI] = self.beta.T
        L[R, X] = self.a.T
        L[R, R] = self.e
        L[R, XI] = self.alpha.T
        L[XI, X] = self.b.T
        L[XI, R] = -2.0 * self.a @ cm
        L[XI, XI] = -self.f.T
        return L


def so_action(L: SoWElement, u: GeneralizedVector, c: QuadraticForm) -> GeneralizedVector:
    if c.dim != u.m or L.f.shape[0] != u.n or L.c.dim != c.dim:
        raise FiberDimensionError("element and vector dimensions differ")
    return GeneralizedVector.from_flat(L.matrix() @ u.flat(), u.n, u.m)
