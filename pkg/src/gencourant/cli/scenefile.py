"""JSON scene files.

Schema (keys not listed are rejected)::

    name, description            strings
    model                        "chart" | "lie_group"
    dim                          n
    coords                       n names (chart only; optional for groups)
    box                          n pairs [lo, hi] (chart sampling box, default [0, 2pi))
    frame_structure_constants    sparse [{idx: [i, j, k], expr}] with i < j: [e_i, e_j] = expr e_k
    signature                    [positive, negative] (optional, checked when given)
    metric                       n x n matrix of numbers or expressions
    H                            sparse [{idx: [i, j, k], expr}] with i < j < k
    H_chern_simons               number h: the flux gets an extra h * CS(A)
    dilaton                      expression (default 0)
    gauge                        {dim, structure_constants (sparse, [t_a, t_b] = expr t_c),
                                  c (m x m numbers), A (n x m), factors [{name, start, stop}]}
    alpha_prime                  number
    params                       {name: value}

Expressions use the field DSL over the coordinates and parameters;
structure constants and ``c`` are evaluated once, with the parameters, at load.
"""

from __future__ import annotations

import copy

import json
from dataclasses import replace
from pathlib import Path
from typing import Mapping

import numpy as np

from ..algebroid import Scene, bianchi_residual
from ..exprs import ExprError, evaluate, parse
from ..fiber import QuadraticForm
from ..geometry.fields import FormField, GaugeData, GeometryError, ManifoldModel, MetricField, TensorField

ALLOWED_KEYS = {
    "name", "description", "model", "dim", "coords", "box", "frame_structure_constants", "signature",
    "metric", "H", "H_chern_simons", "dilaton", "gauge", "alpha_prime", "params",
}
GAUGE_KEYS = {"dim", "structure_constants", "c", "A", "factors"}
FIXTURE_DIR = Path(__file__).resolve().parent / "fixtures"


class SceneError(ValueError):
    """Scene file could not be loaded; the message names the offending key."""


def _number(value, params: Mapping[str, float], what: str) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        try:
            e = parse(value, (), tuple(params))
            return float(evaluate(e, np.zeros(0), params, n=0).val)
        except ExprError as err:
            raise SceneError(f"{what}: {err}") from err
    raise SceneError(f"{what}: expected a number or constant expression, got {value!r}")


def _structure(items, dim: int, params, what: str) -> np.ndarray:
    C = np.zeros((dim, dim, dim))
    for pos, item in enumerate(items or []):
        try:
            i, j, k = (int(v) for v in item["idx"])
        except (KeyError, TypeError, ValueError) as err:
            raise SceneError(f"{what}[{pos}]: needs idx [i, j, k] and expr") from err
        if not (0 <= i < j < dim and 0 <= k < dim):
            raise SceneError(f"{what}[{pos}]: indices must satisfy 0 <= i < j < {dim}")
        v = _number(item.get("expr"), params, f"{what}[{pos}]")
        C[i, j, k] += v
        C[j, i, k] -= v
    return C


def scene_from_dict(data: Mapping, params: Mapping[str, float] | None = None, name: str | None = None) -> Scene:
    if not isinstance(data, Mapping):
        raise SceneError("scene file must contain a JSON object")
    unknown = set(data) - ALLOWED_KEYS
    if unknown:
        raise SceneError(f"unknown keys {sorted(unknown)}")
    p = {k: float(v) for k, v in dict(data.get("params", {})).items()}
    for k, v in dict(params or {}).items():
        if k not in p:
            raise SceneError(f"unknown parameter {k!r}; scene declares {sorted(p)}")
        p[k] = float(v)
    pnames = tuple(p)
    try:
        kind = data.get("model", "chart")
        n = int(data["dim"])
        coords = tuple(data.get("coords", ())) if kind == "chart" else tuple(data.get("coords", ()))
        if kind == "lie_group" and not coords:
            coords = tuple(f"e{i + 1}" for i in range(n))
        C = _structure(data.get("frame_structure_constants"), n, p, "frame_structure_constants")
        model = ManifoldModel(kind, n, coords, C, data.get("box"))
        if "metric" not in data:
            raise SceneError("missing key 'metric'")
        g = MetricField(TensorField.parse(data["metric"], (n, n), model, pnames, "metric"))
        H = FormField.parse(3, model, data.get("H", []), pnames, "H")
        dil = TensorField.parse(data.get("dilaton", 0.0), (), model, pnames, "dilaton")
        gauge = _gauge(data.get("gauge"), model, p)
        signature = tuple(data["signature"]) if "signature" in data else None
        scene = Scene(
            name=name or str(data.get("name", "scene")),
            model=model, g=g, H=H, gauge=gauge, dilaton=dil,
            alpha_prime=_number(data.get("alpha_prime", 1.0), p, "alpha_prime"),
            params=p,
            h_cs=_number(data.get("H_chern_simons", 0.0), p, "H_chern_simons"),
            signature=signature,
            description=str(data.get("description", "")),
        )
    except (GeometryError, ExprError) as err:
        raise SceneError(str(err)) from err
    except KeyError as err:
        raise SceneError(f"missing key {err}") from err
    _probe(scene)
    source = copy.deepcopy(dict(data))
    return replace(scene, bianchi=bianchi_status(scene),
                   rebuild=lambda q: scene_from_dict(source, q, scene.name))


def _gauge(data, model: ManifoldModel, p) -> GaugeData:
    n = model.n
    if not data:
        return GaugeData.trivial(n)
    unknown = set(data) - GAUGE_KEYS
    if unknown:
        raise SceneError(f"gauge: unknown keys {sorted(unknown)}")
    m = int(data["dim"])
    f = _structure(data.get("structure_constants"), m, p, "gauge.structure_constants")
    cdata = data.get("c")
    if not isinstance(cdata, list) or len(cdata) != m or any(not isinstance(r, list) or len(r) != m for r in cdata):
        raise SceneError(f"gauge.c must be a {m} x {m} matrix")
    cmat = np.array([[_number(v, p, f"gauge.c[{i}][{j}]") for j, v in enumerate(row)]
                     for i, row in enumerate(cdata)])
    try:
        c = QuadraticForm(cmat)
    except ValueError as err:
        raise SceneError(f"gauge.c: {err}") from err
    A = TensorField.parse(data.get("A", [[0.0] * m for _ in range(n)]), (n, m), model, tuple(p), "gauge.A")
    factors = []
    for pos, fac in enumerate(data.get("factors", [])):
        start, stop = int(fac["start"]), int(fac["stop"])
        if not 0 <= start < stop <= m:
            raise SceneError(f"gauge.factors[{pos}]: bad range")
        factors.append((str(fac["name"]), start, stop))
    return GaugeData(f, c, A, tuple(factors))


def _probe(scene: Scene, count: int = 5, seed: int = 12345):
    """Check nondegeneracy and signature of g at a few probe points."""
    pts = scene.model.sample(np.random.default_rng(seed), count)
    try:
        sig = scene.g.signature(scene.model, pts, scene.params)
    except (GeometryError, ExprError) as err:
        raise SceneError(f"metric: {err}") from err
    if scene.signature is not None and tuple(scene.signature) != sig:
        raise SceneError(f"metric has signature {sig}, scene declares {tuple(scene.signature)}")


def bianchi_status(scene: Scene, count: int = 5, seed: int = 12345, tol: float = 1e-9) -> str:
    """``"exact"`` when ``dH = c(F ^ F)`` holds at a few probe points, else ``"violated"``."""
    pts = scene.model.sample(np.random.default_rng(seed), count)
    try:
        res = float(np.max(np.abs(bianchi_residual(scene.fields(pts)).value()), initial=0.0))
    except (GeometryError, ExprError) as err:
        raise SceneError(f"fields: {err}") from err
    return "exact" if res <= tol else "violated"


def load_scene(path, params: Mapping[str, float] | None = None) -> Scene:
    path = Path(path)
    if not path.exists() and (FIXTURE_DIR / path.name).exists() and path.parent == Path("fixtures"):
        path = FIXTURE_DIR / path.name
    try:
        text = path.read_text()
    except OSError as err:
        raise SceneError(f"cannot read {path}: {err}") from err
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise SceneError(f"{path}: invalid JSON at line {err.lineno} column {err.colno}: {err.msg}") from err
    return scene_from_dict(data, params, name=data.get("name", path.stem) if isinstance(data, dict) else None)


def fixture_path(name: str) -> Path:
    p = FIXTURE_DIR / (name if name.endswith(".json") else name + ".json")
    if not p.exists():
        raise SceneError(f"no bundled fixture {name!r}")
    return p


def list_fixtures() -> list:
    return sorted(p.stem for p in FIXTURE_DIR.glob("*.json"))


def load_fixture(name: str, params: Mapping[str, float] | None = None) -> Scene:
    return load_scene(fixture_path(name), params)
