import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gencourant.algebroid import Section, chern_simons, dorfman, pairing
from gencourant.exprs import Jet, jein, random_germ
from gencourant.fiber import BATransform, GeneralizedVector, QuadraticForm
from gencourant.fiber import pairing as fiber_pairing
from gencourant.gconn import (
    D_PRIME,
    D_ZERO,
    SECTION_CS_CUBIC,
    AdmissibleMetric,
    GenConnection,
    adapted_splitting,
    ba_section,
    bismut_from_d0,
    build_admissible,
    chi0,
    compat_residual,
    conjugated,
    d_phi,
    explicit_connection,
    gen_torsion,
    leibniz_residual,
    lift_minus,
    lift_plus,
    nabla_along,
    pairing_compat_residual,
    proj_plus,
    sigma,
    torsion_formula,
    transported_fields,
    weyl_chi,
)
from gencourant.geometry import calculus as calc
from gencourant.geometry.fields import FieldJets

from conftest import VALID, sample_fields


def const_jet(v, batch, n):
    v = np.asarray(v, float)
    return Jet.const(np.broadcast_to(v, batch + v.shape), n).with_order(2)


def const_section(x, r, xi, batch):
    n = len(x)
    return Section(const_jet(x, batch, n), const_jet(r, batch, n), const_jet(xi, batch, n))


def random_sections(rng, scene, batch, count=3):
    return [Section.random(rng, batch, scene.n, scene.m, scene.C) for _ in range(count)]


def maxabs(v):
    return float(np.max(np.abs(v.value() if hasattr(v, "value") else v), initial=0.0))


# ---------- admissible metric ----------

def random_metric(rng, n, m):
    L = rng.normal(size=(n, n))
    g = L @ L.T + n * np.eye(n)
    c = np.diag(rng.choice([-1.0, 1.0], size=m) * rng.uniform(0.5, 2.0, size=m))
    return AdmissibleMetric(g, QuadraticForm(c))


def random_vector(rng, n, m):
    return GeneralizedVector(rng.normal(size=n), rng.normal(size=m), rng.normal(size=n))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 5), st.integers(0, 3))
def test_admissible_invariants(seed, n, m):
    rng = np.random.default_rng(seed)
    M = random_metric(rng, n, m)
    chk = M.checks()
    assert chk["G_squared"] < 1e-10
    assert chk["G_selfadjoint"] < 1e-10
    assert chk["vplus_rank"] == n + m
    assert chk["transverse_to_cotangent"]
    assert np.allclose(M.plus + M.minus, np.eye(2 * n + m))
    assert np.allclose(M.plus @ M.plus, M.plus)
    assert np.allclose(M.minus @ M.minus, M.minus)
    u = random_vector(rng, n, m)
    scale = max(1.0, np.abs(u.flat()).max() ** 2 * np.abs(M.g).max())
    assert abs(fiber_pairing(M.project(u, 1), M.project(u, -1), M.c)) < 1e-12 * scale


def test_admissible_examples(scenes):
    fj = sample_fields(scenes["nonabelian-torus"], 2, 0)
    M = build_admissible(fj, 1)
    rng = np.random.default_rng(0)
    X = rng.normal(size=M.n)
    up = GeneralizedVector(X, np.zeros(M.m), M.g @ X)
    um = GeneralizedVector(X, np.zeros(M.m), -M.g @ X)
    assert np.allclose(M.project(up, 1).flat(), up.flat())
    assert np.allclose(M.project(um, 1).flat(), 0)
    assert np.allclose(M.project(um, -1).flat(), um.flat())


# ---------- chi0 ----------

def test_chi0_flux_example(scenes):
    k = 1.7
    fj = sample_fields(scenes["flux-torus"].with_params(k=k), 2, 0)
    B = (2,)
    dx = const_section([1, 0, 0], [], [0, 0, 0], B)
    dy = const_section([0, 1, 0], [], [0, 0, 0], B)
    assert np.allclose(chi0(fj, dx, dy).value(), np.tile([0, 0, 0, 0, 0, k], (2, 1)))


def test_chi0_middle_block_vanishes_abelian_flat(scenes):
    sc = scenes["gauge-torus"]
    fj = sample_fields(sc, 3, 0)
    zero_A = Jet.zeros(fj.A.shape, sc.n).with_order(2)
    flat = FieldJets(fj.C, fj.fstruct, fj.cmat, fj.g, fj.H, zero_A, fj.phi, fj.points)
    assert maxabs(flat.F) == 0.0 and not flat.fstruct.any()
    rng = np.random.default_rng(1)
    e, s = random_sections(rng, sc, fj.batch, 2)
    assert maxabs(chi0(flat, e, s).r) == 0.0


@pytest.mark.parametrize("name", VALID)
def test_chi0_pairing_identity(scenes, name):
    sc = scenes[name]
    fj = sample_fields(sc, 6, 2)
    rng = np.random.default_rng(2)
    ss = random_sections(rng, sc, fj.batch)
    lhs = pairing(chi0(fj, ss[0], ss[1]), ss[2], fj.cmat).value()
    xs = [s.x.value() for s in ss]
    rhs = 0.5 * np.einsum("...ijk,...i,...j,...k->...", fj.H.value(), *xs)
    if fj.m:
        rhs = rhs - chern_simons(fj.F.value(), fj.cmat, fj.fstruct,
                                 [(s.x.value(), s.r.value()) for s in ss], cubic=SECTION_CS_CUBIC)
    assert np.abs(lhs - rhs).max() < 1e-10


# ---------- D0 ----------

def test_d0_flat_is_coordinate_derivative(scenes):
    sc = scenes["flat3"]
    fj = sample_fields(sc, 5, 3)
    rng = np.random.default_rng(3)
    e, s = random_sections(rng, sc, fj.batch, 2)
    out = D_ZERO(fj, e, s)
    along = lambda v: jein("...i,...ik->...k", e.x, calc.frame_derivative(v, 1))  # noqa: E731
    assert maxabs(out.x - along(s.x)) < 1e-12
    assert maxabs(out.xi - along(s.xi)) < 1e-12


@pytest.mark.parametrize("name", ["flux-torus", "su2", "nonabelian-torus"])
def test_bismut_blocks(scenes, name):
    sc = scenes[name]
    fj = sample_fields(sc, 6, 4)
    rng = np.random.default_rng(4)
    Y = random_germ(rng, fj.batch + (sc.n,), sc.n, sc.C)
    Z = random_germ(rng, fj.batch + (sc.n,), sc.n, sc.C)
    blocks = bismut_from_d0(fj, Y, Z)
    assert sorted(blocks) == sorted([0.5, 1 / 6, -0.5, -1 / 6])
    for kappa, v in blocks.items():
        assert maxabs(v - nabla_along(fj.skew(kappa), Y, Z)) < 1e-10


def test_bismut_flux_constant_frame(scenes):
    # on the flux torus the mixed block is d/dY Z + (k/2) g^-1 H(Y, Z, .)
    k = 0.8
    fj = sample_fields(scenes["flux-torus"].with_params(k=k), 1, 0)
    B = (1,)
    dx, dy = const_jet([1, 0, 0], B, 3), const_jet([0, 1, 0], B, 3)
    blocks = bismut_from_d0(fj, dx, dy)
    assert np.allclose(blocks[0.5].value(), [[0, 0, k / 2]])
    assert np.allclose(blocks[1 / 6].value(), [[0, 0, k / 6]])
    assert np.allclose(blocks[-0.5].value(), [[0, 0, -k / 2]])


@pytest.mark.parametrize("name", VALID)
def test_connections_torsion_free_and_compatible(scenes, name):
    sc = scenes[name]
    fj = sample_fields(sc, 8, 5)
    rng = np.random.default_rng(5)
    ss = random_sections(rng, sc, fj.batch)
    vphi = random_germ(rng, fj.batch + (sc.n,), sc.n, sc.C)
    f = random_germ(rng, fj.batch, sc.n, sc.C)
    for D in (D_ZERO, d_phi(vphi)):
        assert np.abs(gen_torsion(D, fj, *ss)).max() < 1e-9
        assert compat_residual(D, fj, ss[0], ss[1]).max() < 1e-9
        assert pairing_compat_residual(D, fj, *ss).max() < 1e-9
        assert leibniz_residual(D, fj, ss[0], ss[1], f).max() < 1e-9


@pytest.mark.parametrize("name", VALID)
def test_recipe_matches_explicit_formulas(scenes, name):
    sc = scenes[name]
    fj = sample_fields(sc, 8, 6)
    rng = np.random.default_rng(6)
    e, s = random_sections(rng, sc, fj.batch, 2)
    vphi = random_germ(rng, fj.batch + (sc.n,), sc.n, sc.C)
    assert maxabs(D_ZERO(fj, e, s) - explicit_connection(fj, e, s)) < 1e-10
    assert maxabs(d_phi(vphi)(fj, e, s) - explicit_connection(fj, e, s, vphi)) < 1e-10


@pytest.mark.parametrize("name", ["su2", "nonabelian-torus"])
def test_tensorial_in_direction(scenes, name):
    sc = scenes[name]
    fj = sample_fields(sc, 5, 7)
    rng = np.random.default_rng(7)
    e, s = random_sections(rng, sc, fj.batch, 2)
    f = random_germ(rng, fj.batch, sc.n, sc.C)
    vphi = random_germ(rng, fj.batch + (sc.n,), sc.n, sc.C)
    for D in (D_ZERO, d_phi(vphi)):
        assert maxabs(D(fj, e.scale(f), s) - D(fj, e, s).scale(f)) < 1e-10


# ---------- Weyl term and D^phi ----------

def test_weyl_chi_examples():
    B = (1,)
    dx = const_jet([1, 0, 0], B, 3)
    e = const_section([1, 0, 0], [], [1, 0, 0], B)
    assert np.allclose(weyl_chi(dx, np.zeros((0, 0)), e, e).value(), [[1, 0, 0, -1, 0, 0]])
    # vphi(pi s) = 0 and <e, s> = 0
    s = const_section([0, 1, 0], [], [0, 0, 1], B)
    assert np.abs(weyl_chi(dx, np.zeros((0, 0)), e, s).value()).max() == 0.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_weyl_chi_skew_and_sigma(seed):
    rng = np.random.default_rng(seed)
    n, m, B = 3, 2, (4,)
    cm = np.diag([1.0, -2.0])
    vphi = random_germ(rng, B + (n,), n)
    e, s1, s2 = [Section.random(rng, B, n, m) for _ in range(3)]
    skew = pairing(weyl_chi(vphi, cm, e, s1), s2, cm) + pairing(s1, weyl_chi(vphi, cm, e, s2), cm)
    assert maxabs(skew) < 1e-12
    chi = lambda fj, a, b: weyl_chi(vphi, cm, a, b)  # noqa: E731
    fj = type("F", (), {"cmat": cm})()
    assert np.abs(sigma(chi, fj, e, s1, s2)).max() < 1e-12


@pytest.mark.parametrize("name", ["flux-torus", "nonabelian-torus", "su2"])
def test_deformation_has_zero_sigma(scenes, name):
    sc = scenes[name]
    fj = sample_fields(sc, 5, 8)
    rng = np.random.default_rng(8)
    ss = random_sections(rng, sc, fj.batch)
    vphi = random_germ(rng, fj.batch + (sc.n,), sc.n, sc.C)
    Dp = d_phi(vphi)
    chi = lambda fj_, a, b: Dp(fj_, a, b) - D_ZERO(fj_, a, b)  # noqa: E731
    assert np.abs(sigma(chi, fj, *ss)).max() < 1e-12


def test_dphi_reduces_to_d0(scenes):
    sc = scenes["nonabelian-torus"]
    fj = sample_fields(sc, 4, 9)
    rng = np.random.default_rng(9)
    e, s = random_sections(rng, sc, fj.batch, 2)
    zero = Jet.zeros(fj.batch + (sc.n,), sc.n).with_order(2)
    assert maxabs(d_phi(zero)(fj, e, s) - D_ZERO(fj, e, s)) < 1e-14


@pytest.mark.parametrize("name", ["flat3", "nonabelian-torus"])
def test_dphi_blocks(scenes, name):
    sc = scenes[name]
    fj = sample_fields(sc, 5, 10)
    rng = np.random.default_rng(10)
    B, n, m = fj.batch, sc.n, sc.m
    G = lambda sh: random_germ(rng, B + sh, n, sc.C)  # noqa: E731
    X, Y, Z, r, t = G((n,)), G((n,)), G((n,)), G((m,)), G((m,))
    vphi = G((n,)) if name != "flat3" else const_jet([1, 0, 0], B, n)
    Dp = d_phi(vphi)
    e1p, e2m, e3p = lift_plus(fj, X, r), lift_minus(fj, Y), lift_plus(fj, Z, t)
    assert maxabs(Dp(fj, e2m, e3p) - D_ZERO(fj, e2m, e3p)) < 1e-12
    pZ = jein("...i,...i->...", vphi, Z)
    gXZ = jein("...i,...ij,...j->...", X, fj.g, Z)
    if m:
        gXZ = gXZ + jein("...a,ab,...b->...", r, fj.cmat, t)
    phi_sec = Section.cotangent(vphi, m)
    correction = proj_plus(fj, e1p.scale(pZ) - phi_sec.scale(gXZ) * 2.0) * (1.0 / 3.0)
    assert maxabs(Dp(fj, e1p, e3p) - D_ZERO(fj, e1p, e3p) - correction) < 1e-12


# ---------- torsion ----------

def test_torsion_of_levi_civita_part_on_flux(scenes):
    k = 1.3
    fj = sample_fields(scenes["flux-torus"].with_params(k=k), 2, 0)
    B = (2,)
    e = [const_section(v, [], [0, 0, 0], B) for v in np.eye(3)]
    assert np.allclose(gen_torsion(D_PRIME, fj, *e), -k / 2)


def chi_ppp(fj, e, s):
    return proj_plus(fj, chi0(fj, proj_plus(fj, e), proj_plus(fj, s))) * (1.0 / 3.0)


@pytest.mark.parametrize("name", ["flux-torus", "nonabelian-torus", "gauge-torus"])
def test_torsion_formula_and_antisymmetry(scenes, name):
    sc = scenes[name]
    fj = sample_fields(sc, 5, 11)
    rng = np.random.default_rng(11)
    ss = random_sections(rng, sc, fj.batch)
    for chi in (None, chi_ppp):
        D = D_PRIME if chi is None else GenConnection("custom", chi, projected=False)
        T = gen_torsion(D, fj, *ss)
        assert np.abs(T - torsion_formula(fj, chi, *ss)).max() < 1e-9
        for perm in itertools.permutations(range(3)):
            sign = np.linalg.det(np.eye(3)[list(perm)])
            assert np.abs(gen_torsion(D, fj, *[ss[i] for i in perm]) - sign * T).max() < 1e-9


def test_compat_examples(scenes):
    sc = scenes["flat3"]
    fj = sample_fields(sc, 4, 12)
    rng = np.random.default_rng(12)
    e, s = random_sections(rng, sc, fj.batch, 2)
    assert compat_residual(D_PRIME, fj, e, s).max() < 1e-12
    sc = scenes["flux-torus"]
    fj = sample_fields(sc, 4, 12)
    e, s = random_sections(rng, sc, fj.batch, 2)
    unprojected = GenConnection("custom", chi0, projected=False)
    assert compat_residual(unprojected, fj, e, s).min() > 1e-3
    assert compat_residual(D_ZERO, fj, e, s).max() < 1e-9


# ---------- (b, a) naturality ----------

@pytest.mark.parametrize("name", ["flux-torus", "gauge-torus", "nonabelian-torus", "het"])
def test_ba_naturality(scenes, name):
    sc = scenes[name]
    fj = sample_fields(sc, 5, 13)
    rng = np.random.default_rng(13)
    n, m, B = sc.n, sc.m, fj.batch
    b = rng.normal(size=(n, n))
    b = b - b.T
    a = rng.normal(size=(n, m)) * 0.5
    c = QuadraticForm(fj.cmat)
    T = BATransform(b, a).matrix(c)
    Ti = np.linalg.inv(T)
    moved = transported_fields(fj, b, a)
    ss = random_sections(rng, sc, B)
    # the transform intertwines the brackets of the two splittings
    back = ba_section(Ti, dorfman(moved, ba_section(T, ss[0]), ba_section(T, ss[1])))
    assert maxabs(dorfman(fj, ss[0], ss[1]) - back) < 1e-9
    # the conjugated connection is torsion free for the moved bracket
    op = conjugated(D_ZERO, fj, T)
    assert np.abs(gen_torsion(op, moved, *ss)).max() < 1e-8
    # V+ of the moved structure determines (g, b, a)
    M = build_admissible(fj, 0)
    g2, b2, a2 = adapted_splitting(M.vplus_basis() @ T.T, n, c)
    assert np.abs(g2 - M.g).max() < 1e-8
    assert np.abs(b2 - b).max() < 1e-8
    assert np.abs(a2 - a).max(initial=0.0) < 1e-8
