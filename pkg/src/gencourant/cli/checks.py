"""Command dispatch and residual reports.

Every command samples points from the scene (a single representative point
for a left-invariant model), draws ``samples`` random inputs per point from a
seeded generator, and reduces each residual block to one number per point.
The gated blocks decide pass/fail against ``tol``; diagnostic blocks are
reported only.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import gconn, gcurv, sugra
from ..algebroid import PINNED, Scene, Section, axiom_residuals, bianchi_residual
from ..exprs import ExprError
from ..exprs.jet import random_germ
from ..geometry.fields import FieldJets, GeometryError


class CheckError(ValueError):
    """The command cannot run on this scene (usage error)."""


class EvaluationError(RuntimeError):
    """Fields or residuals could not be evaluated; the message names the point."""


CONVENTIONS = {
    "bracket": "Dorfman bracket, ad P part nabla_X t - nabla_Y r - F(X,Y) - [r,t]",
    "pairing": "<X+r+xi, X+r+xi> = xi(X) + c(r,r)",
    "curvature_F": "F = dA + [A,A], [t_a,t_b] = f_ab^c t_c",
    "riemann": "Riem[l,k,i,j] = (R(e_i,e_j) e_k)^l, Ric_jk = Riem[i,k,i,j]",
    "torsion": "T(e1,e2,e3) = <D_e1 e2 - D_e2 e1 - [e1,e2], e3> + <D_e3 e1, e2>, Dorfman bracket",
    "chi0_algebra_block": "r, t -> -[r,t]",
    "generalized_curvature": "GR(e1,e2) = D_e1 D_e2 - D_e2 D_e1 - D_[[e1,e2]], skew Courant bracket",
    "gric_layout": "GRic[i,J] = GRic(e_i - g e_i, Z + gZ + t) with J running over e_j then t_a",
    "weyl_term": "chi^phi_e s = vphi(pi s) e - <e,s> vphi",
    "dilaton_policy": "heterotic: vphi = -6/(rk V+ - 1) dphi; typeII: vphi = -(2/3) dphi",
    "c_normalization": "c taken verbatim from the scene file",
    **{f"sugra_{k}": v for k, v in sugra.CONVENTIONS.items()},
}


@dataclass
class Block:
    name: str
    values: np.ndarray
    gated: bool = True


@dataclass
class Context:
    scene: Scene
    rng: np.random.Generator
    points: np.ndarray
    samples: int
    policy: sugra.DilatonPolicy

    @property
    def batch(self) -> tuple:
        return (len(self.points), self.samples)

    def fields(self) -> FieldJets:
        """Fields with a trailing singleton batch axis, broadcasting against the samples."""
        return self.scene.fields(self.points[:, None, :])

    def germ(self, shape: tuple = (), scale: float = 1.0):
        sc = self.scene
        return random_germ(self.rng, self.batch + shape, sc.n, sc.C, scale)

    def section(self) -> Section:
        sc = self.scene
        return Section.random(self.rng, self.batch, sc.n, sc.m, sc.C)


def _per_point(a, npts: int) -> np.ndarray:
    a = np.abs(np.asarray(a, dtype=float))
    a = np.broadcast_to(a, (npts,) + a.shape[1:]) if a.ndim else np.full(npts, float(a))
    return a.reshape(npts, -1).max(axis=1, initial=0.0)


# ---------- commands ----------

def _axioms(ctx: Context) -> list:
    fj = ctx.fields()
    s1, s2, s3 = ctx.section(), ctx.section(), ctx.section()
    res = axiom_residuals(fj, s1, s2, s3, ctx.germ(), PINNED)
    return [Block(k, v) for k, v in res.as_dict().items()]


def _bianchi(ctx: Context) -> list:
    return [Block("dH - c(F^F)", bianchi_residual(ctx.fields()).value())]


def _torsion(ctx: Context) -> list:
    fj = ctx.fields()
    ss = [ctx.section() for _ in range(3)]
    Dphi = gconn.d_phi(ctx.germ((ctx.scene.n,)))
    return [
        Block("T_D0", gconn.gen_torsion(gconn.D_ZERO, fj, *ss)),
        Block("T_Dphi", gconn.gen_torsion(Dphi, fj, *ss)),
        Block("T_Dprime - formula",
              gconn.gen_torsion(gconn.D_PRIME, fj, *ss) - gconn.torsion_formula(fj, None, *ss)),
    ]


def _compat(ctx: Context) -> list:
    fj = ctx.fields()
    e, s1, s2 = ctx.section(), ctx.section(), ctx.section()
    Dphi = gconn.d_phi(ctx.germ((ctx.scene.n,)))
    return [
        Block("metric_D0", gconn.compat_residual(gconn.D_ZERO, fj, e, s1)),
        Block("metric_Dphi", gconn.compat_residual(Dphi, fj, e, s1)),
        Block("pairing_D0", gconn.pairing_compat_residual(gconn.D_ZERO, fj, e, s1, s2)),
        Block("pairing_Dphi", gconn.pairing_compat_residual(Dphi, fj, e, s1, s2)),
    ]


_KAPPA_LABEL = {0.5: "+1/2", 1.0 / 6.0: "+1/6", -0.5: "-1/2", -1.0 / 6.0: "-1/6"}


def _bismut(ctx: Context) -> list:
    fj = ctx.fields()
    n = ctx.scene.n
    Y, Z = ctx.germ((n,)), ctx.germ((n,))
    out = []
    for kappa, v in gconn.bismut_from_d0(fj, Y, Z).items():
        ref = gconn.nabla_along(fj.skew(kappa), Y, Z)
        out.append(Block(f"kappa={_KAPPA_LABEL[kappa]}", (v - ref).value()))
    return out


def _gr_crosscheck(ctx: Context) -> list:
    fj = ctx.fields()
    n, m = ctx.scene.n, ctx.scene.m
    X, Y, Z = ctx.germ((n,)), ctx.germ((n,)), ctx.germ((n,))
    r, t = ctx.germ((m,)), ctx.germ((m,))
    e1, e2, e3 = gconn.lift_plus(fj, X, r), gconn.lift_minus(fj, Y), gconn.lift_plus(fj, Z, t)
    out = []
    for label, vphi in (("D0", None), ("Dphi", ctx.germ((n,)))):
        a = gcurv.gr_def(gcurv.connection_for(vphi), fj, e1, e2, e3)
        b = gcurv.gr_closed(fj, vphi, X.value(), r.value(), Y.value(), Z.value(), t.value())
        out.append(Block(f"GR_{label} definition - closed form", a - b))
    return out


def _gric(ctx: Context) -> list:
    fj = ctx.fields()
    formula = sugra.gric_for_policy(fj, ctx.policy, "formula")
    trace = sugra.gric_for_policy(fj, ctx.policy, "trace")
    return [Block("GRic", formula), Block("formula - trace", formula[:, 0] - trace)]


def _gs(ctx: Context) -> list:
    return [Block("GS", gcurv.gs(ctx.fields()))]


def _sugra_type2(ctx: Context) -> list:
    if ctx.scene.m:
        raise CheckError("sugra-type2 needs a scene without gauge sector")
    res = sugra.typeII_residuals(ctx.fields())
    return [Block(k, v) for k, v in res.blocks().items()]


def _sugra_heterotic(ctx: Context) -> list:
    res = sugra.heterotic_residuals(ctx.fields(), factors=ctx.scene.gauge.factors)
    return [Block(k, v, gated=k != "dilaton_scalar") for k, v in res.blocks().items()]


def _cross(fj: FieldJets, policy: sugra.DilatonPolicy) -> tuple:
    gric = sugra.gric_for_policy(fj, policy)
    if fj.m == 0 and policy.kind == "typeII":
        eom = sugra.typeII_residuals(fj)
    else:
        eom = sugra.heterotic_residuals(fj)
    classical = sugra.eom_assembly(fj, eom)
    return gric, classical, gric - classical


def _equivalence(ctx: Context) -> list:
    fj = ctx.fields()
    gric, classical, diff = _cross(fj, ctx.policy)
    out = [Block("cross_difference", diff), Block("GRic", gric, False), Block("eom_assembly", classical, False)]
    fj_random = ctx.fields()
    fj_random.phi = ctx.germ(scale=0.3)
    out.append(Block("cross_difference (random dilaton)", _cross(fj_random, ctx.policy)[2]))
    return out


COMMANDS: dict = {
    "axioms": (_axioms, "Courant axioms of the Dorfman bracket on random section triples"),
    "bianchi": (_bianchi, "dH - c(F^F)"),
    "torsion": (_torsion, "generalized torsion of D0 and D^phi (random Weyl forms)"),
    "compat": (_compat, "metric and pairing compatibility of D0 and D^phi"),
    "bismut": (_bismut, "four Bismut connections extracted from D0"),
    "gr-crosscheck": (_gr_crosscheck, "generalized curvature: definition against closed form"),
    "gric": (_gric, "generalized Ricci tensor of D^phi (policy Weyl form) and its two routes"),
    "gs": (_gs, "generalized scalar curvature"),
    "sugra-type2": (_sugra_type2, "type II equations of motion"),
    "sugra-heterotic": (_sugra_heterotic, "heterotic equations of motion"),
    "equivalence": (_equivalence, "GRic assembly against the classical equations of motion"),
}


# ---------- reports ----------

def _fmt(x: float) -> float:
    """Round to 12 significant digits so reports do not carry last-bit noise."""
    return float(f"{x:.12g}")


@dataclass
class ResidualReport:
    check: str
    scene: str
    seed: int
    points: int
    samples: int
    tol: float
    max_abs: float
    mean_abs: float
    passed: bool
    blocks: dict
    scene_info: dict
    coords: tuple = ()
    point_values: np.ndarray | None = None
    point_table: dict = field(default_factory=dict)
    conventions: dict = field(default_factory=lambda: dict(CONVENTIONS))

    def as_dict(self) -> dict:
        return {
            "check": self.check, "scene": self.scene, "seed": self.seed, "points": self.points,
            "samples": self.samples, "tol": self.tol, "passed": self.passed,
            "max_abs": self.max_abs, "mean_abs": self.mean_abs, "blocks": self.blocks,
            "scene_info": self.scene_info, "conventions": self.conventions,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        """Plot table: one row per point (coordinates, block residuals, gated residual)."""
        buf = io.StringIO()
        for key in ("check", "scene", "seed", "points", "samples", "tol", "passed", "max_abs", "mean_abs"):
            buf.write(f"# {key}: {getattr(self, key)}\n")
        for key, v in sorted(self.conventions.items()):
            buf.write(f"# convention {key}: {v}\n")
        w = csv.writer(buf, lineterminator="\n")
        names = list(self.point_table)
        w.writerow(list(self.coords) + names + ["residual"])
        for i in range(self.points):
            row = [repr(_fmt(x)) for x in self.point_values[i]]
            row += [repr(_fmt(self.point_table[k][i])) for k in names]
            row.append(repr(_fmt(max((self.point_table[k][i] for k, b in self.blocks.items() if b["gated"]),
                                     default=0.0))))
            w.writerow(row)
        return buf.getvalue()

    def render(self, fmt: str = "json") -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        raise CheckError(f"unknown format {fmt!r}")


def scene_info(scene: Scene) -> dict:
    return {
        "model": scene.model.kind, "dim": scene.n, "gauge_dim": scene.m,
        "params": {k: scene.params[k] for k in sorted(scene.params)},
        "alpha_prime": scene.alpha_prime, "bianchi": scene.bianchi,
    }


def _locate(scene: Scene, points: np.ndarray, bad: np.ndarray | None = None) -> str:
    """Coordinates of the first point where the fields cannot be evaluated (or ``bad`` is set)."""
    names = scene.model.coords
    for i, p in enumerate(points):
        if bad is not None:
            if not bad[i]:
                continue
        else:
            try:
                fj = scene.fields(p[None, :])
                ok = all(np.all(np.isfinite(j.value())) for j in (fj.g, fj.H, fj.A, fj.phi))
            except (ExprError, GeometryError, FloatingPointError, np.linalg.LinAlgError):
                ok = False
            if ok:
                continue
        return "(" + ", ".join(f"{c}={v:.6g}" for c, v in zip(names, p)) + ")"
    return "(unknown point)"


def run_check(cmd: str, scene: Scene, points: int = 16, seed: int = 0, tol: float = 1e-8,
              samples: int = 4, policy: sugra.DilatonPolicy | None = None) -> ResidualReport:
    if cmd not in COMMANDS:
        raise CheckError(f"unknown command {cmd!r}; choose from {', '.join(COMMANDS)}")
    if points < 1 or samples < 1:
        raise CheckError("points and samples must be positive")
    policy = policy or sugra.DilatonPolicy("heterotic")
    try:
        policy.coefficient(scene.rank_vplus)
    except sugra.PolicyError as err:
        raise CheckError(str(err)) from err
    if policy.kind == "typeII" and scene.m:
        raise CheckError("type II dilaton policy needs a scene without gauge sector")
    rng = np.random.default_rng(seed)
    pts = scene.model.sample(rng, points)
    ctx = Context(scene, rng, pts, samples, policy)
    fn: Callable = COMMANDS[cmd][0]
    try:
        with np.errstate(divide="raise", over="raise", invalid="raise", under="ignore"):
            blocks = fn(ctx)
    except (ExprError, GeometryError, FloatingPointError, np.linalg.LinAlgError) as err:
        raise EvaluationError(f"{cmd}: {err} at {_locate(scene, pts)}") from err

    npts = len(pts)
    table, summary = {}, {}
    for b in blocks:
        v = _per_point(b.values, npts)
        if not np.all(np.isfinite(v)):
            raise EvaluationError(f"{cmd}: non-finite {b.name} at {_locate(scene, pts, ~np.isfinite(v))}")
        table[b.name] = v
        summary[b.name] = {"max_abs": _fmt(v.max()), "mean_abs": _fmt(v.mean()), "gated": b.gated}
    gated = [table[b.name] for b in blocks if b.gated]
    per_point = np.max(gated, axis=0) if gated else np.zeros(npts)
    max_abs = _fmt(per_point.max())
    return ResidualReport(
        check=cmd, scene=scene.name, seed=seed, points=npts, samples=samples, tol=tol,
        max_abs=max_abs, mean_abs=_fmt(per_point.mean()), passed=bool(max_abs <= tol),
        blocks=summary, scene_info={**scene_info(scene), "policy": policy.kind,
                                    "vphi_coefficient": _fmt(policy.coefficient(scene.rank_vplus))},
        coords=scene.model.coords, point_values=pts, point_table=table,
    )
