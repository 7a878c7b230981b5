"""Combinatorial surfaces: construction, surgery, canonical forms."""

import numpy as np
import pytest

from quiltmod.surface import (MarkedSurface, Surface, SurfaceError, annulus,
                              bar, disjoint_union, fuse_surface, pachner_flip,
                              polygon, sew, sphere, torus, triangulate)


def test_triangle_disk():
    t = polygon(3)
    ms = MarkedSurface(t)
    assert len(ms.graph.edges) == 3
    assert len(ms.marked) == 3
    assert t.euler_characteristic() == 1


def test_sphere_from_two_triangles():
    s = sphere()
    assert s.euler_characteristic() == 2
    assert not s.boundary_edges()


def test_square_from_two_triangles():
    two = disjoint_union(polygon(3, prefix="a"), polygon(3, prefix="b"))
    sq = sew(two, "a3", "b1")
    assert sq.euler_characteristic() == 1
    assert len(sq.boundary_edges()) == 4
    ms = MarkedSurface(sq)
    assert len(ms.graph.edges) == 4


def test_head_to_tail_validation():
    with pytest.raises(SurfaceError):
        Surface([("a", "b", "a")])      # oriented edge reused in a face


def test_pachner_flip_involution_and_invariants():
    sq, _ = triangulate(polygon(4))
    diag = sq.interior_positive_edges()[0]
    flipped, new_edge, _ = pachner_flip(sq, diag)
    assert flipped.euler_characteristic() == sq.euler_characteristic()
    assert MarkedSurface(flipped).marked == MarkedSurface(sq).marked
    again, _, _ = pachner_flip(flipped, new_edge)
    assert again.is_isomorphic(sq)
    # flipped complex still satisfies all construction invariants
    assert flipped.is_triangulated()


def test_pachner_flip_requires_adjacent_triangles():
    sq, _ = triangulate(polygon(4))
    with pytest.raises(SurfaceError):
        pachner_flip(sq, "e1")


def test_sew_disk_to_sphere():
    p2 = polygon(2)
    s = sew(p2, "e1", "e2")
    assert s.euler_characteristic() == 2
    assert not s.boundary_edges()


def test_sew_rejects_self():
    p2 = polygon(2)
    with pytest.raises(SurfaceError):
        sew(p2, "e1", "e1")


def test_square_sewn_to_torus():
    sq, _ = triangulate(polygon(4))
    t = sew(sew(sq, "e1", "e3"), "e2", "e4")
    assert t.euler_characteristic() == 0
    assert len(t.vertices) == 1
    assert not t.boundary_edges()


def test_hexagon_sewn_to_annulus():
    h, _ = triangulate(polygon(6))
    a = sew(h, "e1", "e4")
    assert a.euler_characteristic() == 0
    assert len(a.boundary_circles()) == 2


def test_euler_characteristic_drops_by_one_per_sew():
    two = disjoint_union(polygon(3, prefix="a"), polygon(3, prefix="b"))
    chi0 = two.euler_characteristic()
    sq = sew(two, "a3", "b1")
    assert sq.euler_characteristic() == chi0 - 1


def test_sewing_order_does_not_matter():
    three = disjoint_union(
        disjoint_union(polygon(3, prefix="a"), polygon(3, prefix="b")),
        polygon(3, prefix="c"), name="three")
    s1 = sew(sew(three, "a1", "b1"), "a2", "c1")
    s2 = sew(sew(three, "a2", "c1"), "a1", "b1")
    assert s1.is_isomorphic(s2)


def test_fusion_cases_and_associativity():
    # case 2: fusing vertices of two disjoint bigons composes edges
    un = disjoint_union(polygon(2, prefix="p"), polygon(2, prefix="q"))
    ms = MarkedSurface(un)
    P = un.in_vertex("p1")
    Q = un.out_vertex("q1")
    fused = fuse_surface(ms, P, Q)
    assert fused.last_case == 2
    assert any("*" in e for e in fused.graph.edges)
    # case 1: fusing the endpoints of one edge deletes it
    m2 = MarkedSurface(polygon(2))
    f = fuse_surface(m2, m2.surface.out_vertex("e1"), m2.surface.in_vertex("e1"))
    assert f.last_case == 1
    assert list(f.graph.edges) == ["e2"]
    # associativity at the graph level
    three = disjoint_union(un, polygon(2, prefix="r"))
    m3 = MarkedSurface(three)
    A1, B1 = three.in_vertex("p1"), three.out_vertex("q1")
    A2, B2 = three.in_vertex("q1"), three.out_vertex("r1")
    f12 = fuse_surface(fuse_surface(m3, A1, B1), A2, B2)
    f21 = fuse_surface(fuse_surface(m3, A2, B2), A1, B1)
    assert sorted(f12.graph.edges) == sorted(f21.graph.edges)
    assert sorted(f12.graph.vertices) == sorted(f21.graph.vertices)


def test_annulus_builder():
    a = annulus(2, 2)
    assert a.euler_characteristic() == 0
    assert len(a.boundary_circles()) == 2
    assert a.is_triangulated()
    ms = MarkedSurface(a)
    assert sorted(ms.graph.edges) == ["i1", "i2", "o1", "o2"]


def test_marked_surface_strictness():
    with pytest.raises(SurfaceError):
        MarkedSurface(torus())           # closed component, strict
    ms = MarkedSurface(torus(), strict=False)
    assert ms.closed_components == 1
    ann = annulus(1, 2)
    msu = MarkedSurface(ann, strict=False, unmarked=[ann.out_vertex("o1")])
    assert len(msu.unmarked_circles) == 1
    with pytest.raises(SurfaceError):
        MarkedSurface(ann, strict=True, unmarked=[ann.out_vertex("o1")])


def test_canonical_form_detects_relabeling():
    a = polygon(4)
    relabeled = Surface([tuple(e.replace("e", "x") for e in f) for f in a.faces])
    assert a.is_isomorphic(relabeled)
    assert not a.is_isomorphic(polygon(5))
