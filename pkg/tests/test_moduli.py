"""Moduli of flat connections: relations, tangents, gauge, moment maps."""

import numpy as np
import pytest

from quiltmod.lie_core import abelian_algebra, group_exp, sl_algebra
from quiltmod.moduli import (ModuliError, ModuliPoint, ModuliSpace,
                             polygon_moduli, polygon_point)
from quiltmod.surface import MarkedSurface, torus

rng = np.random.default_rng(1)
alg = sl_algebra(2)


def test_polygon_moduli_dimensions():
    for n in (2, 3, 4, 6):
        M = polygon_moduli(n, alg)
        p = M.random_point(rng)
        assert M.face_residual(p) < 1e-12
        basis, rep = M.tangent_basis(p, report=True)
        assert rep["dim"] == (n - 1) * alg.dim
        assert not rep["rank_deficient"]


def test_polygon_point_construction():
    M = polygon_moduli(5, alg)
    gs = [group_exp(alg, alg.random_element(rng, 0.3)).value for _ in range(4)]
    p = polygon_point(M, gs)
    assert M.face_residual(p) < 1e-12
    # relation g_e1 ... g_e5 = 1 in path order
    acc = np.eye(2)
    for i in range(1, 6):
        acc = acc @ p.data[(0, f"e{i}")]
    assert np.abs(acc - np.eye(2)).max() < 1e-12
    with pytest.raises(ModuliError):
        polygon_point(M, gs[:2])


def test_identity_point_and_triangle_moment():
    M = polygon_moduli(3, alg)
    p = M.identity_point()
    mus = M.moment(p)
    assert sorted(lbl for _, lbl in mus) == ["e1", "e2", "e3"]
    q = M.random_point(rng)
    mus = M.moment(q)
    for i in (1, 2, 3):
        assert np.allclose(mus[(0, f"e{i}")], q.data[(0, f"e{i}")])


def test_gauge_action_properties():
    M = polygon_moduli(4, alg)
    p = M.random_point(rng)

    def random_gauge():
        return {(0, v): group_exp(alg, alg.random_element(rng, 0.3)).value
                for _, v in M.vertices}

    h1, h2 = random_gauge(), random_gauge()
    # identity gauge fixes the point
    ident = {k: np.eye(2) for k in h1}
    fixed = M.gauge_act(ident, p)
    assert all(np.allclose(fixed.data[k], p.data[k]) for k in p.data)
    # action property (h1 h2) . p = h1 . (h2 . p)
    h12 = {k: h1[k] @ h2[k] for k in h1}
    lhs = M.gauge_act(h12, p)
    rhs = M.gauge_act(h1, M.gauge_act(h2, p))
    worst = max(np.abs(lhs.data[k] - rhs.data[k]).max() for k in p.data)
    assert worst < 1e-12
    # relations preserved
    assert M.face_residual(M.gauge_act(h1, p)) < 1e-12


def test_moment_equivariance_exact():
    M = polygon_moduli(5, alg)
    p = M.random_point(rng)
    h = {(0, v): group_exp(alg, alg.random_element(rng, 0.4)).value
         for _, v in M.vertices}
    mus = M.moment(p)
    mus_h = M.moment(M.gauge_act(h, p))
    for dom, lbl in M.graph_edges():
        pred = h[M.graph_in(dom, lbl)] @ mus[(dom, lbl)] \
            @ np.linalg.inv(h[M.graph_out(dom, lbl)])
        assert np.abs(pred - mus_h[(dom, lbl)]).max() < 1e-12


def test_gauge_vector_is_derivative_of_action():
    M = polygon_moduli(4, alg)
    p = M.random_point(rng)
    xi = {(0, v): alg.random_element(rng) for _, v in M.vertices}
    gv = M.gauge_vector(xi, p)
    M.check_tangent(p, gv)
    t = 1e-6
    hp = {k: group_exp(alg, v, t).value for k, v in xi.items()}
    hm = {k: group_exp(alg, v, -t).value for k, v in xi.items()}
    pp, pm = M.gauge_act(hp, p), M.gauge_act(hm, p)
    for key in p.data:
        fd = alg.project(np.linalg.inv(p.data[key])
                         @ (pp.data[key] - pm.data[key]) / (2 * t))
        assert np.abs(fd - gv.data[key]).max() < 1e-7


def test_gauge_vectors_lie_in_tangent_span():
    M = polygon_moduli(3, alg)
    p = M.random_point(rng)
    basis = np.stack([b.coords() for b in M.tangent_basis(p)])
    xi = {(0, v): alg.random_element(rng) for _, v in M.vertices}
    v = M.gauge_vector(xi, p).coords()
    resid = v - basis.T @ (basis @ v)
    assert np.abs(resid).max() < 1e-10


def test_relation_drift_under_many_gauges():
    # 1000 actions in inverse pairs: holonomies stay bounded, so the residual
    # measures pure roundoff accumulation
    M = polygon_moduli(3, alg)
    p = M.random_point(rng)
    for _ in range(500):
        h = {(0, v): group_exp(alg, alg.random_element(rng, 0.2)).value
             for _, v in M.vertices}
        hinv = {k: np.linalg.inv(v) for k, v in h.items()}
        p = M.gauge_act(hinv, M.gauge_act(h, p))
    assert M.face_residual(p) < 1e-9


def test_torus_tangent_rank_report():
    # closed torus with abelian structure group: relations degenerate and the
    # kernel is 2 * dim(g), larger than the naive count
    ab = abelian_algebra(2)
    Mt = ModuliSpace([(MarkedSurface(torus(), strict=False), ab)])
    p = Mt.random_point(rng, scale=0.4)
    basis, rep = Mt.tangent_basis(p, report=True)
    assert rep["dim"] == 2 * ab.dim
    assert rep["rank_deficient"]       # generic count would be dim(g)


def test_point_serialization_roundtrip():
    M = polygon_moduli(4, alg)
    p = M.random_point(rng)
    q = ModuliPoint.from_json(M, p.to_json())
    assert all(np.array_equal(p.data[k], q.data[k]) for k in p.data)


def test_closed_surface_moment_is_empty():
    ab = abelian_algebra(2)
    Mt = ModuliSpace([(MarkedSurface(torus(), strict=False), ab)])
    assert Mt.moment(Mt.identity_point()) == {}
