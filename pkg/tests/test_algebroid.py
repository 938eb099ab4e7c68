import itertools

import numpy as np
import pytest

from gencourant.algebroid import (
    PINNED,
    BracketConvention,
    Section,
    anchor,
    axiom_residuals,
    bianchi_residual,
    chern_simons,
    chern_simons_form,
    dorfman,
    pairing,
    symmetric_part_residual,
)
from gencourant.cli.scenefile import load_fixture
from gencourant.exprs import Jet, random_germ
from gencourant.fiber import QuadraticForm
from gencourant.fiber import pairing as fiber_pairing
from gencourant.geometry import calculus as calc

from conftest import VALID, sample_fields

EPS3 = calc.levi_civita(3)


def const_section(x, r, xi, batch):
    n = len(x)
    b = lambda v: Jet.const(np.broadcast_to(np.asarray(v, float), batch + (len(v),)), n)  # noqa: E731
    return Section(b(x), b(r), b(xi))


def random_triple(rng, scene, batch):
    return [Section.random(rng, batch, scene.n, scene.m, scene.C) for _ in range(3)]


def test_anchor_examples():
    s = const_section([1, 0, 0], [2.0], [0, 1, 0], (1,))
    assert np.allclose(anchor(s).val, [[1, 0, 0]])
    assert np.allclose(anchor(const_section([0, 0, 0], [1.0], [0, 0, 0], (1,))).val, 0)
    assert np.allclose(anchor(const_section([0, 0, 0], [0.0], [1, 2, 3], (1,))).val, 0)


def test_bracket_examples(scenes):
    fj = sample_fields(scenes["flat3"], 3, 0)
    rng = np.random.default_rng(0)
    s1 = const_section(rng.normal(size=3), [], rng.normal(size=3), (3,))
    s2 = const_section(rng.normal(size=3), [], rng.normal(size=3), (3,))
    assert np.abs(dorfman(fj, s1, s2).value()).max() == 0.0
    sc = scenes["flux-torus"].with_params(k=2.5)
    fj = sample_fields(sc, 3, 0)
    dx = const_section([1, 0, 0], [], [0, 0, 0], (3,))
    dy = const_section([0, 1, 0], [], [0, 0, 0], (3,))
    assert np.allclose(dorfman(fj, dx, dy).value(), np.tile([0, 0, 0, 0, 0, 2.5], (3, 1)))


@pytest.mark.parametrize("name", VALID)
def test_axioms_hold_on_valid_scenes(scenes, name):
    sc = scenes[name]
    rng = np.random.default_rng(1)
    fj = sample_fields(sc, 10, 1, trailing=True)
    B = (len(fj.points), 3)
    res = axiom_residuals(fj, *random_triple(rng, sc, B), random_germ(rng, B, sc.n, sc.C))
    assert res.max() <= 1e-8, res.as_dict()


def test_jacobi_defect_is_linear_in_bianchi_defect():
    rng = np.random.default_rng(2)
    base = load_fixture("broken-bianchi")
    out = []
    for delta in (1e-3, 1e-2, 1e-1):
        sc = base.with_params(delta=delta)
        fj = sample_fields(sc, 5, 3)
        rng = np.random.default_rng(2)
        B = (5,)
        res = axiom_residuals(fj, *random_triple(rng, sc, B), random_germ(rng, B, sc.n))
        out.append(res.jacobi.max())
        assert res.invariance.max() <= 1e-10 and res.leibniz.max() <= 1e-10
    slopes = np.array(out) / np.array([1e-3, 1e-2, 1e-1])
    assert np.allclose(slopes, slopes[0], rtol=1e-6)
    assert out[-1] > 1e-3


@pytest.mark.parametrize("name", VALID + ["broken-bianchi"])
def test_symmetric_part_is_exact(scenes, name):
    sc = scenes[name]
    rng = np.random.default_rng(4)
    fj = sample_fields(sc, 6, 4)
    s1, s2, _ = random_triple(rng, sc, (len(fj.points),))
    assert symmetric_part_residual(fj, s1, s2).max() <= 1e-9


@pytest.mark.parametrize("name", ["het", "nonabelian-torus", "gauge-torus"])
def test_section_pairing_matches_fiber_pairing(scenes, name):
    sc = scenes[name]
    rng = np.random.default_rng(5)
    s1, s2, _ = random_triple(rng, sc, (4,))
    c = QuadraticForm(sc.cmat)
    jet = pairing(s1, s2, sc.cmat).val
    ref = [fiber_pairing(s1.vector((i,)), s2.vector((i,)), c) for i in range(4)]
    assert np.allclose(jet, ref, atol=1e-12)


# ---------- Chern-Simons ----------

def _cs_args(rng, n, m, batch=()):
    return [(rng.normal(size=batch + (n,)), rng.normal(size=batch + (m,))) for _ in range(3)]


def test_chern_simons_examples():
    rng = np.random.default_rng(6)
    n, m = 3, 2
    F = np.zeros((n, n, m))
    args = [(x, np.zeros(m)) for x, _ in _cs_args(rng, n, m)]
    assert chern_simons(F, np.eye(m), np.zeros((m, m, m)), args) == 0.0
    F = rng.normal(size=(n, n, m))
    F = F - F.swapaxes(0, 1)
    args = [(np.zeros(n), r) for _, r in _cs_args(rng, n, m)]
    assert chern_simons(F, np.eye(m), np.zeros((m, m, m)), args) == 0.0


@pytest.mark.parametrize("cubic", [-1.0, 1.0])
def test_chern_simons_is_alternating(cubic):
    rng = np.random.default_rng(7)
    n, m = 4, 3
    F = rng.normal(size=(n, n, m))
    F = F - F.swapaxes(0, 1)
    args = _cs_args(rng, n, m)
    base = chern_simons(F, -np.eye(m), EPS3, args, cubic)
    for p in itertools.permutations(range(3)):
        val = chern_simons(F, -np.eye(m), EPS3, [args[i] for i in p], cubic)
        assert abs(val - calc.perm_sign(p) * base) <= 1e-12


def test_chern_simons_form_structure_equation():
    rng = np.random.default_rng(8)
    n, m = 4, 3
    A = random_germ(rng, (6, n, m), n)
    C = np.zeros((n, n, n))
    F = calc.gauge_curvature(A, C, EPS3)
    cm = -0.7 * np.eye(m)
    dcs = calc.exterior_d(chern_simons_form(A, F, cm, EPS3), 3, C)
    cff = calc.c_wedge(F, 2, F, 2, cm)
    assert np.abs(dcs.val - cff.val).max() <= 1e-10


def test_chern_simons_form_matches_pointwise_formula():
    rng = np.random.default_rng(9)
    n, m = 4, 3
    A = random_germ(rng, (n, m), n)
    F = calc.gauge_curvature(A, np.zeros((n, n, n)), EPS3)
    cs = chern_simons_form(A, F, np.eye(m), EPS3).val
    X, Y, Z = rng.normal(size=(3, n))
    Av = A.val
    direct = chern_simons(F.val, np.eye(m), EPS3, [(X, X @ Av), (Y, Y @ Av), (Z, Z @ Av)])
    assert np.isclose(np.einsum("ijk,i,j,k->", cs, X, Y, Z), direct, atol=1e-12)


# ---------- Bianchi ----------

def test_bianchi_examples(scenes):
    for name in ("flat3", "flux-torus"):
        assert np.abs(bianchi_residual(sample_fields(scenes[name], 5, 0)).val).max() == 0.0
    assert np.abs(bianchi_residual(sample_fields(scenes["gauge-torus"], 20, 0)).val).max() <= 1e-9
    assert np.abs(bianchi_residual(sample_fields(scenes["nonabelian-torus"], 20, 0)).val).max() <= 1e-9
    broken = np.abs(bianchi_residual(sample_fields(scenes["broken-bianchi"], 5, 0)).val).max()
    assert np.isclose(broken, scenes["broken-bianchi"].params["delta"])


def test_gauge_torus_flux_is_not_closed(scenes):
    """dH = c(F^F) with both sides nonzero, so the F-sign of the bracket is exercised."""
    fj = sample_fields(scenes["gauge-torus"], 4, 0)
    assert np.abs(calc.exterior_d(fj.H, 3, fj.C).val).max() > 0.5


def test_only_pinned_bracket_satisfies_axioms(scenes):
    sc = scenes["nonabelian-torus"]
    fj = sample_fields(sc, 4, 10)
    passing = []
    for sF, sb in itertools.product((1, -1), repeat=2):
        rng = np.random.default_rng(10)
        B = (4,)
        res = axiom_residuals(fj, *random_triple(rng, sc, B), random_germ(rng, B, sc.n),
                              BracketConvention(sF, sb))
        if res.max() <= 1e-8:
            passing.append(BracketConvention(sF, sb))
    assert passing == [PINNED]
