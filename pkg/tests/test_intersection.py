"""Intersection pairing: combinatorial rule vs geometric brute force vs the
fusion-built bivector."""

import numpy as np
import pytest

from quiltmod.intersection import (FormalPathSum, GroupoidPath,
                                   intersection_pairing)
from quiltmod.lie_core import ad_matrix, sl_algebra
from quiltmod.moduli import ModuliPoint, ModuliSpace, polygon_moduli, resolve_words
from quiltmod.quasi_ham import (bivector_via_intersections,
                                fused_polygon_structure, holonomy_form)
from quiltmod.surface import MarkedSurface, Surface, polygon, triangulate, bar

from oracles import count_polyline_crossings, endpoint_terms

rng = np.random.default_rng(2024)
alg = sl_algebra(2)


def evaluate_terms(point, dom, terms, algebra):
    s = np.linalg.inv(algebra.metric)
    out = np.zeros((algebra.dim, algebra.dim))
    for coeff, word in terms:
        out += 0.5 * coeff * ad_matrix(algebra, point.word_holonomy(dom, word)) @ s
    return out


# ---------------------------------------------------------------------------
# configuration 1: the 2-gon
# ---------------------------------------------------------------------------

def bigon_setup():
    st, words = fused_polygon_structure(2, alg)
    surf = st.space.domains[0].surface
    return st, surf


def test_bigon_pairing_vanishes_on_moduli():
    st, surf = bigon_setup()
    a = GroupoidPath(surf, ["p0e1"])
    b = GroupoidPath(surf, ["p0e2"])
    fps = intersection_pairing(surf, a, b)
    p = st.space.random_point(rng)
    terms = [(c, (0, w)) for c, w in fps.terms]
    lhs, rhs = bivector_via_intersections(st, (0, a.edges), (0, b.edges), p, terms)
    assert np.abs(lhs).max() < 1e-12          # pi = 0 on the 2-gon
    assert np.abs(rhs).max() < 1e-12


def test_identical_paths_give_empty_sum():
    st, surf = bigon_setup()
    a = GroupoidPath(surf, ["p0e1"])
    fps = intersection_pairing(surf, a, a)
    assert len(fps) == 0


def test_disjoint_paths_give_empty_sum():
    faces = polygon(3, prefix="a").faces + polygon(3, prefix="b").faces
    surf = Surface(faces)
    a = GroupoidPath(surf, ["a1"])
    b = GroupoidPath(surf, ["b2"])
    assert len(intersection_pairing(surf, a, b)) == 0


def test_bigon_geometric_oracle_agrees():
    """Hand-drawn transverse representatives of (e1, e2) on the planar bigon
    reproduce the evaluated pairing (perturbation independence)."""
    from oracles import count_polyline_crossings, endpoint_terms

    st, surf = bigon_setup()
    a = GroupoidPath(surf, ["p0e1"])
    b = GroupoidPath(surf, ["p0e2"])
    fps = intersection_pairing(surf, a, b)
    p = st.space.random_point(rng)
    combo = evaluate_terms(p, 0, fps.terms, alg)

    # drawn arcs: upper for e1, lower for e2 (distinct endpoint angles)
    vA = np.array([-1.0, 0.0])
    vB = np.array([1.0, 0.0])
    start_a = surf.out_vertex("p0e1")
    posA = {start_a: vA, surf.in_vertex("p0e1"): vB}
    drawn_a = np.array([vA, [-0.5, 0.5], [0.5, 0.45], vB])
    drawn_b = np.array([vB, [0.5, -0.45], [-0.5, -0.5], vA])
    crossings = count_polyline_crossings(drawn_a, drawn_b)
    assert not crossings                         # arcs are disjoint inside
    terms = []
    for lam, sign, ka, kb in endpoint_terms(drawn_a, drawn_b, 1, 1):
        word = tuple(b.edges[:kb]) + tuple(bar(e) for e in reversed(a.edges[:ka]))
        terms.append((lam * sign, word))
    geo = evaluate_terms(p, 0, terms, alg)
    assert np.abs(combo - geo).max() < 1e-12


# ---------------------------------------------------------------------------
# configuration 2: square with one interior crossing
# ---------------------------------------------------------------------------

def cone_square():
    p4 = polygon(4)
    outv = {e: p4.out_vertex(e) for e in ["e1", "e2", "e3", "e4"]}
    inv = {e: p4.in_vertex(e) for e in ["e1", "e2", "e3", "e4"]}
    faces = [(f"s{outv[e]}", e, "~s" + inv[e]) for e in ["e1", "e2", "e3", "e4"]]
    cone = Surface(faces, name="cone-square")
    return cone, outv, inv


def square_data():
    stF, words = fused_polygon_structure(4, alg)
    Mpoly = polygon_moduli(4, alg)
    full_words = resolve_words(getattr(Mpoly, "diagonal_words", {}), words)
    return stF, words, full_words


def cone_point(cone, stF, words, p):
    Mcone = ModuliSpace([(MarkedSurface(cone, strict=False), alg)])
    data = {}
    for i in range(1, 5):
        data[(0, f"e{i}")] = p.word_holonomy(0, words[f"e{i}"])
    for key in Mcone.pos_edges:
        if key not in data:
            data[key] = np.eye(2)
    q = ModuliPoint(Mcone, data)
    pin = [(0, f"e{i}") for i in range(1, 5)]
    pin.append((0, sorted(e for _, e in Mcone.pos_edges if e.startswith("s"))[0]))
    q = Mcone._eliminate(q, pinned=pin)
    assert Mcone.face_residual(q) < 1e-10
    return q, Mcone


def test_square_interior_crossing_vs_bivector_and_geometry():
    stF, words, full_words = square_data()
    cone, outv, inv = cone_square()
    p = stF.space.random_point(rng)
    q, Mcone = cone_point(cone, stF, words, p)

    a = GroupoidPath(cone, [f"~s{outv['e1']}", f"s{inv['e4']}"])  # v3 -> w -> v1
    b = GroupoidPath(cone, [f"~s{inv['e1']}", f"s{inv['e3']}"])   # v0 -> w -> v2
    fps = intersection_pairing(cone, a, b)
    assert sum(abs(c) for c, _ in fps.terms) == 2   # one interior crossing

    rhs = evaluate_terms(q, 0, fps.terms, alg)
    wa = words["e1"] + words["e4"]
    wb = words["e4"] + words["e3"]
    A = holonomy_form(stF.space, p, 0, wa)
    B = holonomy_form(stF.space, p, 0, wb)
    lhs = stF.pi(p).pair_with_forms(A, B, alg.dim, alg.dim)
    assert np.abs(lhs - rhs).max() < 1e-9

    # geometric confirmation: hand-drawn transverse diagonals of the square
    from oracles import count_polyline_crossings, endpoint_terms

    drawn_a = np.array([[0.0, 0.0], [0.48, 0.53], [1.0, 1.0]])  # v3 -> v1
    drawn_b = np.array([[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]])    # v0 -> v2
    crossings = count_polyline_crossings(drawn_a, drawn_b)
    assert len(crossings) == 1
    _, sign, ta, tb = crossings[0]
    # each half stays beside its spoke: truncation at the cone point
    word = tuple(b.edges[:1]) + tuple(bar(e) for e in reversed(a.edges[:1]))
    geo = evaluate_terms(q, 0, [(2 * sign, word)], alg)
    assert np.abs(geo - rhs).max() < 1e-12


def test_pairing_skew_symmetry():
    stF, words, full_words = square_data()
    cone, outv, inv = cone_square()
    a = GroupoidPath(cone, [f"~s{outv['e1']}", f"s{inv['e4']}"])
    b = GroupoidPath(cone, [f"~s{inv['e1']}", f"s{inv['e3']}"])
    fab = intersection_pairing(cone, a, b)
    fba = intersection_pairing(cone, b, a)
    # coefficients negate and the loop terms invert
    inverted = sorted((-c, tuple(bar(e) for e in reversed(w)))
                      for c, w in fab.terms)
    assert sorted(fba.terms) == inverted


# ---------------------------------------------------------------------------
# configuration 3: annulus generator pair
# ---------------------------------------------------------------------------

def glued_annulus():
    pent = ("n", "e4a", "e3a", "~n", "~d1")
    src = Surface([pent, ("d1", "e2", "e1")], name="glued-annulus")
    annT, _ = triangulate(src, diag_prefix="ad")
    return annT


def annulus_fused_structure():
    stF, words = fused_polygon_structure(4, alg)
    Mpoly = polygon_moduli(4, alg)
    full_words = resolve_words(getattr(Mpoly, "diagonal_words", {}), words)
    g = stF.space.domains[0].graph
    label_of = {}
    for lbl in g.edges:
        for i in range(1, 5):
            if tuple(g.word(lbl)) == tuple(words[f"e{i}"]):
                label_of[f"e{i}"] = lbl
    from quiltmod.quasi_ham import fusion_bivector
    v0 = g.in_vertex(label_of["e1"])
    v2 = g.in_vertex(label_of["e3"])
    stA = fusion_bivector(stF, (0, v0), (0, v2))
    return stA, words, full_words


def test_annulus_generator_pair():
    stA, words, full_words = annulus_fused_structure()
    annT = glued_annulus()
    p = stA.space.random_point(rng)
    q4 = stA.space.transport(polygon_moduli(4, alg), p, full_words)
    Mann = ModuliSpace([(MarkedSurface(annT, strict=False,
                                      unmarked=[annT.in_vertex("n")]), alg)])
    data = {}
    for dom, e in Mann.pos_edges:
        if e == "n":
            data[(dom, e)] = np.eye(2)
        elif e == "e4a":
            data[(dom, e)] = q4.data[(0, "e4")]
        elif e == "e3a":
            data[(dom, e)] = q4.data[(0, "e3")]
        elif (0, e) in q4.data:
            data[(dom, e)] = q4.data[(0, e)]
        else:
            data[(dom, e)] = np.eye(2)
    qa = ModuliPoint(Mann, data)
    qa = Mann._eliminate(qa, pinned=[k for k in data if k[1] in
                                     ("n", "e4a", "e3a", "e1", "e2", "d1")])
    assert Mann.face_residual(qa) < 1e-10

    a = GroupoidPath(annT, ["n", "e4a", "e3a", "~n"])   # core loop
    b = GroupoidPath(annT, ["n", "e4a"])                # radial path
    fps = intersection_pairing(annT, a, b)
    rhs = evaluate_terms(qa, 0, fps.terms, alg)
    wa = words["e4"] + words["e3"]
    wb = words["e4"]
    lhs = stA.pi(p).pair_with_forms(
        holonomy_form(stA.space, p, 0, wa),
        holonomy_form(stA.space, p, 0, wb), alg.dim, alg.dim)
    assert np.abs(lhs - rhs).max() < 1e-9

    # refinement confirmation: recompute the crossing data on a flipped
    # triangulation of the same surface (the paths' edges survive the flip)
    from quiltmod.surface import pachner_flip

    flippable = [e for e in annT.interior_positive_edges()
                 if e.startswith(("ad", "d"))]
    annT2, new_edge, words_new = pachner_flip(annT, flippable[0])
    a2 = GroupoidPath(annT2, a.edges)
    b2 = GroupoidPath(annT2, b.edges)
    fps2 = intersection_pairing(annT2, a2, b2)
    Mann2 = ModuliSpace([(MarkedSurface(annT2, strict=False,
                                        unmarked=[annT2.in_vertex("n")]), alg)])
    qa2 = Mann.transport(Mann2, qa, words_new)
    assert Mann2.face_residual(qa2) < 1e-10
    rhs2 = evaluate_terms(qa2, 0, fps2.terms, alg)
    assert np.abs(rhs2 - rhs).max() < 1e-10

    # robustness of the push convention: scaling both offsets (same order)
    # leaves the crossing data unchanged
    from quiltmod.intersection import _strand_events, _cross
    ev_a = _strand_events(annT, a, delta=0.32)
    ev_b = _strand_events(annT, b, delta=0.21)
    terms = []
    for ea in ev_a:
        for eb in ev_b:
            if ea[0] != eb[0]:
                continue
            hit = _cross(ea, eb)
            if hit:
                lam, sign = hit
                word = tuple(b.edges[:eb[3]]) + tuple(
                    bar(e) for e in reversed(a.edges[:ea[3]]))
                terms.append((int(lam * sign), word))
    rhs3 = evaluate_terms(qa, 0, terms, alg)
    assert np.abs(rhs3 - rhs).max() < 1e-12
