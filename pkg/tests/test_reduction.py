"""Reduction engine: level sets, slices, corrections, tau, commutativity."""

import numpy as np
import pytest

from quiltmod.catalog import build_lu_weinstein, double_sl2, in_diagonal_pair
from quiltmod.lie_core import (Subalgebra, ad_matrix, group_exp, sl_algebra,
                               su2_realified)
from quiltmod.moduli import ModuliSpace, polygon_moduli, polygon_point
from quiltmod.quasi_ham import QuasiHamStructure, omega_surface
from quiltmod.reduction import (Ambient, OrbitDescriptor, ReductionData,
                                ReductionError, check_commutativity,
                                conjugacy_class_orbit, correction_term_matrix,
                                intersect_orbits, orbit_directions,
                                product_one_orbit, reduced_bivector,
                                reduced_two_form, reduced_two_form_corrected,
                                slice_at, solve_level_set,
                                solve_level_set_retrying, subgroup_orbit,
                                tau_from_lagrangian, trivial_orbit,
                                two_form_matrix, walk_level_set)
from quiltmod.surface import MarkedSurface, Surface, disjoint_union, polygon, triangulate

rng = np.random.default_rng(11)


def four_triangles(algebra):
    faces = []
    for pre in ("a", "b", "c", "d"):
        faces += polygon(3, prefix=pre).faces
    surf = Surface(faces, name="4T")
    M = ModuliSpace([(MarkedSurface(surf), algebra)], name="4T")
    st = QuasiHamStructure(M)
    st.ambient = Ambient(M)
    return st


def sewing_data(st, e1, e2, name):
    amb = st.ambient
    keys = [k for k in st.space.graph_edges() if k not in ((0, e1), (0, e2))]
    rows = [amb.sew_colouring_span((0, e1), (0, e2)), amb.full_edges_span(keys)]
    c = amb.subalgebra(np.vstack(rows), name)
    return ReductionData(amb, c, product_one_orbit((0, e1), (0, e2)), name=name)


def test_trivial_orbit_returns_seed():
    alg = sl_algebra(2)
    M = polygon_moduli(3, alg)
    st = QuasiHamStructure(M)
    seed = M.random_point(rng)
    p = solve_level_set(st, trivial_orbit(), seed)
    assert all(np.array_equal(p.data[k], seed.data[k]) for k in p.data)


def test_sewing_constraint_solvable_from_random_seeds():
    alg = sl_algebra(2)
    st = four_triangles(alg)
    orbit = product_one_orbit((0, "a1"), (0, "b1"))
    ok = 0
    for _ in range(40):
        try:
            p = solve_level_set(st, orbit, st.space.random_point(rng, scale=0.3))
            mus = st.space.moment(p)
            assert np.abs(mus[(0, "a1")] @ mus[(0, "b1")] - np.eye(2)).max() < 1e-10
            ok += 1
        except ReductionError:
            pass
    assert ok >= 38        # >= 95 percent


def test_lu_weinstein_level_set_matches_parametrization():
    data = build_lu_weinstein()
    st, orbit, M = data["structure"], data["orbit"], data["space"]
    p = walk_level_set(st, orbit, M.identity_point(), rng, steps=3,
                       step_size=0.35)
    mus = M.moment(p)
    # e1 f1 e2 f2 = 1 with memberships
    relation = mus[(0, "e1")] @ mus[(0, "e2")] @ mus[(0, "e3")] @ mus[(0, "e4")]
    assert np.abs(relation - np.eye(4)).max() < 1e-10
    assert np.abs(in_diagonal_pair(mus[(0, "e1")])).max() < 1e-10


def test_slice_full_when_no_residual():
    data = build_lu_weinstein()
    st, rdata, orbit, M = (data["structure"], data["rdata"], data["orbit"],
                           data["space"])
    p = walk_level_set(st, orbit, M.identity_point(), rng, steps=2,
                       step_size=0.3)
    slice_rows, T, O = slice_at(st, rdata, p)
    assert O.shape[0] == 0
    assert slice_rows.shape[0] == T.shape[0] == 6


def test_orbit_directions_in_reduced_kernel():
    # gauge directions of the residual algebra annihilate the reduced form
    alg = su2_realified()
    tri, _ = triangulate(Surface([("a", "b", "~a", "~b", "~l")], name="T-hole"))
    M = ModuliSpace([(MarkedSurface(tri), alg)])
    st = QuasiHamStructure(M)
    amb = Ambient(M)
    st.ambient = amb
    p0 = M.random_point(rng, scale=0.5)
    key = amb.edges[0]
    orbit = conjugacy_class_orbit(key, M.moment(p0)[key])
    rdata = ReductionData(amb, amb.subalgebra(np.hstack([np.eye(3), np.eye(3)]),
                                              "g_diag"), orbit, name="conj")
    p = solve_level_set(st, orbit, p0)
    slice_rows, T, O = slice_at(st, rdata, p)
    rows = np.vstack([slice_rows, O])
    base = two_form_matrix(st, p, rows)
    corr = correction_term_matrix(st, rdata, p, rows)
    mat = base - corr
    k = slice_rows.shape[0]
    assert np.abs(mat[k:, :]).max() < 1e-8   # orbit rows in the kernel


def test_conjugacy_correction_nonzero_and_theta_independent():
    alg = su2_realified()
    tri, _ = triangulate(Surface([("a", "b", "~a", "~b", "~l")], name="T-hole"))
    M = ModuliSpace([(MarkedSurface(tri), alg)])
    st = QuasiHamStructure(M)
    amb = Ambient(M)
    st.ambient = amb
    p0 = M.random_point(rng, scale=0.5)
    key = amb.edges[0]
    orbit = conjugacy_class_orbit(key, M.moment(p0)[key])
    rdata = ReductionData(amb, amb.subalgebra(np.hstack([np.eye(3), np.eye(3)]),
                                              "g_diag"), orbit, name="conj")
    p = solve_level_set(st, orbit, p0)
    slice_rows, _, _ = slice_at(st, rdata, p)
    m0, info = reduced_two_form_corrected(st, rdata, p, slice_rows=slice_rows,
                                          theta_variant=0)
    m1, _ = reduced_two_form_corrected(st, rdata, p, slice_rows=slice_rows,
                                       theta_variant=7)
    assert info["correction_max"] > 1e-3
    assert np.abs(m0 - m1).max() < 1e-9
    assert info["rank"] == info["dim"] == 2
    # the correction on structure-action pairs reproduces the recorded
    # multiple of <eta, Ad_g xi> - <Ad_g eta, xi>
    cls = (0, M.domains[0].marked[0])
    mus = M.moment(p)
    Admu = ad_matrix(alg, mus[key])
    for _ in range(4):
        xi, eta = alg.random_element(rng), alg.random_element(rng)
        RX, RY = st.action({cls: xi}, p), st.action({cls: eta}, p)
        rows = np.stack([RX.coords(), RY.coords()])
        corr = correction_term_matrix(st, rdata, p, rows)
        pred = float(eta @ alg.metric @ (Admu @ xi)) \
            - float((Admu @ eta) @ alg.metric @ xi)
        assert abs(corr[0, 1] - (-0.5) * pred) < 1e-9


def test_symmetric_case_correction_vanishes():
    data = build_lu_weinstein()
    st, rdata, orbit, M = (data["structure"], data["rdata"], data["orbit"],
                           data["space"])
    p = walk_level_set(st, orbit, M.identity_point(), rng, steps=2,
                       step_size=0.3)
    slice_rows, _, _ = slice_at(st, rdata, p)
    for variant in (0, 3):
        corr = correction_term_matrix(st, rdata, p, slice_rows, variant=variant)
        assert np.abs(corr).max() < 1e-11


def test_tau_extraction_matches_projection_formula():
    algebra, e_sub, f_sub = double_sl2()
    l1 = np.vstack([np.hstack([e_sub.span, np.zeros((3, 6))]),
                    np.hstack([np.zeros((3, 6)), f_sub.span])])
    wedges, k0 = tau_from_lagrangian(algebra, l1)
    assert k0.shape[0] == 0

    def tau_sharp(a):
        out = np.zeros(6)
        for c, xi, eta in wedges:
            out += c * (2 * float(a @ algebra.metric @ xi) * eta
                        - 2 * float(a @ algebra.metric @ eta) * xi)
        return out

    B = np.vstack([e_sub.span, f_sub.span])
    for _ in range(5):
        a = rng.standard_normal(6)
        co = np.linalg.solve(B.T, a)
        expected = co[:3] @ e_sub.span - co[3:] @ f_sub.span
        assert np.abs(tau_sharp(a) - expected).max() < 1e-12


def test_tau_zero_for_antidiagonal_complement():
    # l = g_antidiag-shaped complement: here l = k itself gives tau = 0;
    # use the swapped-graph Lagrangian whose tau-sharp vanishes
    algebra, e_sub, f_sub = double_sl2()
    span = np.hstack([np.eye(3), -np.eye(3)])   # g_antidiag: tau undefined as
    # a colouring (not a subalgebra), but the extraction treats it linearly
    wedges, k0 = tau_from_lagrangian(algebra, span)
    assert not wedges


def test_commutativity_pure_sewing():
    alg = sl_algebra(2)
    st = four_triangles(alg)
    r1 = sewing_data(st, "a1", "b1", "sew_ab")
    r2 = sewing_data(st, "c1", "d1", "sew_cd")
    seed = st.space.random_point(rng, scale=0.25)
    joint = intersect_orbits(r1.orbit, r2.orbit)
    p = solve_level_set(st, joint, seed)
    report = check_commutativity(st, r1, r2, p)
    assert report["deviation"] < 1e-10


def test_commutativity_sewing_plus_colouring():
    algebra, e_sub, f_sub = double_sl2()
    st = four_triangles(algebra)
    amb = st.ambient
    r1 = sewing_data(st, "a1", "b1", "sew_ab")
    keys = [k for k in st.space.graph_edges() if k != (0, "c1")]
    rows = [amb.pair_colouring_span((0, "c1"), e_sub), amb.full_edges_span(keys)]
    r2 = ReductionData(amb, amb.subalgebra(np.vstack(rows), "colour_c1"),
                       subgroup_orbit((0, "c1"), in_diagonal_pair), name="colour")
    joint = intersect_orbits(r1.orbit, r2.orbit)
    p = walk_level_set(st, joint, st.space.identity_point(), rng, steps=3,
                       step_size=0.3)
    report = check_commutativity(st, r1, r2, p)
    assert report["deviation"] < 1e-10


def test_commutativity_double_colouring():
    algebra, e_sub, f_sub = double_sl2()
    M = polygon_moduli(4, algebra)
    st = QuasiHamStructure(M)
    amb = Ambient(M)
    st.ambient = amb

    def colour_data(edges, sub, shape, name):
        rest = [k for k in M.graph_edges() if k not in [(0, e) for e in edges]]
        rows = [amb.pair_colouring_span((0, e), sub) for e in edges]
        rows.append(amb.full_edges_span(rest))
        orbits = [subgroup_orbit((0, e), shape) for e in edges]
        return ReductionData(amb, amb.subalgebra(np.vstack(rows), name),
                             intersect_orbits(*orbits), name=name)

    from quiltmod.catalog import in_dual_pair
    r1 = colour_data(["e1", "e3"], e_sub, in_diagonal_pair, "colour_e")
    r2 = colour_data(["e2", "e4"], f_sub, in_dual_pair, "colour_f")
    joint = intersect_orbits(r1.orbit, r2.orbit)
    p = walk_level_set(st, joint, M.identity_point(), rng, steps=3,
                       step_size=0.3)
    report = check_commutativity(st, r1, r2, p)
    assert report["deviation"] < 1e-10


def test_trivial_reduction_commutes_with_sewing():
    alg = sl_algebra(2)
    st = four_triangles(alg)
    r1 = sewing_data(st, "a1", "b1", "sew_ab")
    amb = st.ambient
    r2 = ReductionData(amb, amb.subalgebra(np.eye(amb.dim), "full"),
                       trivial_orbit(), name="trivial")
    p = solve_level_set(st, r1.orbit, st.space.random_point(rng, scale=0.25))
    report = check_commutativity(st, r1, r2, p)
    assert report["deviation"] < 1e-10


def test_newton_reports_nonconvergence():
    alg = sl_algebra(2)
    M = polygon_moduli(3, alg)
    st = QuasiHamStructure(M)
    st.ambient = Ambient(M)

    def impossible(mus):
        return np.array([np.trace(mus[(0, "e1")]) - 99.0])

    orbit = OrbitDescriptor(impossible, name="impossible")
    with pytest.raises(ReductionError):
        solve_level_set(st, orbit, M.random_point(rng), max_iter=12)
