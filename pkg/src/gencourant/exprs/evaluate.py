"""Jet evaluation of parsed expressions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .jet import Jet, jcos, jexp, jlog, jpow, jsin, jsqrt, reciprocal
from .parser import BinOp, Call, Coord, Expr, ExprDomainError, ExprError, Neg, Node, Num, Param, Pow


@dataclass(frozen=True)
class Jet2:
    """Value plus first and second directional derivatives."""

    value: float
    d1: np.ndarray
    d2: np.ndarray


def evaluate(
    e: Expr,
    point: Sequence[float] | np.ndarray,
    params: Mapping[str, float] | None = None,
    n: int | None = None,
) -> Jet:
    """Evaluate ``e`` as a 2-jet in the coordinate directions.

    ``point`` may carry leading batch axes (shape ``(..., len(coords))``);
    the result then has the same batch shape.  ``n`` overrides the jet
    dimension, which lets coordinate-free expressions be evaluated as
    constants over an ``n``-dimensional frame.
    """
    point = np.asarray(point, dtype=float)
    k = len(e.coords)
    if point.ndim == 0 or point.shape[-1] != k:
        raise ExprError(f"point has dimension {point.shape[-1] if point.ndim else 0}, expected {k}")
    n = k if n is None else n
    if n < k:
        raise ExprError("jet dimension smaller than the number of coordinates")
    params = dict(params or {})
    missing = [p for p in e.params if p not in params]
    if missing:
        raise ExprError(f"no value for parameters {missing}")
    batch = point.shape[:-1]
    coords = []
    for i in range(k):
        grad = np.zeros(n)
        grad[i] = 1.0
        coords.append(Jet.from_parts(point[..., i], np.broadcast_to(grad, batch + (n,)), None, n=n))
    out = _eval(e, e.root, coords, params, n, point)
    return Jet(np.broadcast_to(out.c, batch + (out.c.shape[-1],)).copy(), n, 2)


def _domain(e: Expr, node: Node, message: str, bad: np.ndarray, point: np.ndarray):
    bad = np.broadcast_to(bad, point.shape[:-1])
    where = tuple(np.argwhere(bad)[0]) if bad.ndim else ()
    at = point[where] if point.ndim > 1 else point
    raise ExprDomainError(f"{message} at point {np.array2string(np.asarray(at), precision=6)}", e.text(node))


def _eval(e: Expr, node: Node, coords, params, n, point) -> Jet:
    if isinstance(node, Num):
        return Jet.const(node.value, n)
    if isinstance(node, Coord):
        return coords[node.index]
    if isinstance(node, Param):
        return Jet.const(float(params[node.name]), n)
    if isinstance(node, Neg):
        return -_eval(e, node.arg, coords, params, n, point)
    if isinstance(node, BinOp):
        a = _eval(e, node.left, coords, params, n, point)
        b = _eval(e, node.right, coords, params, n, point)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if np.any(b.val == 0.0):
            _domain(e, node, "division by zero", b.val == 0.0, point)
        return a * reciprocal(b)
    if isinstance(node, Pow):
        a = _eval(e, node.base, coords, params, n, point)
        if node.exponent < 0 and np.any(a.val == 0.0):
            _domain(e, node, "negative power of zero", a.val == 0.0, point)
        return jpow(a, node.exponent)
    if isinstance(node, Call):
        a = _eval(e, node.arg, coords, params, n, point)
        x = a.val
        if node.func == "sin":
            return jsin(a)
        if node.func == "cos":
            return jcos(a)
        if node.func == "exp":
            return jexp(a)
        if node.func == "log":
            if np.any(x <= 0.0):
                _domain(e, node, "log of non-positive value", x <= 0.0, point)
            return jlog(a)
        if node.func == "sqrt":
            if np.any(x <= 0.0):
                _domain(e, node, "sqrt of non-positive value", x <= 0.0, point)
            return jsqrt(a)
    raise ExprError(f"cannot evaluate node {node!r}")


def eval_jet(
    e: Expr,
    point: Sequence[float],
    directions: Sequence[Sequence[float]],
    params: Mapping[str, float] | None = None,
) -> Jet2:
    """Value, first and second derivatives of ``e`` along ``directions``."""
    j = evaluate(e, point, params)
    V = np.asarray(directions, dtype=float).reshape(-1, len(e.coords))
    d1 = V @ j.grad
    d2 = V @ j.hess @ V.T
    return Jet2(float(j.val), d1, 0.5 * (d2 + d2.T))
