"""Coisotropic reduction of quasi-Hamiltonian moduli structures.

Everything is slice-local at sampled points: level sets are found by Newton
iteration in the left-trivialized tangent coordinates with exponential
retraction, quotients are realized as complements to the orbit directions,
and reduced 2-forms/bivectors are matrices on those slices.
"""

from __future__ import annotations

import numpy as np

from . import lie_core
from .lie_core import (QuadraticLieAlgebra, Subalgebra, ad_matrix, group_exp,
                       nullspace, span_basis, span_complement, span_contains)
from .moduli import ModuliError, TangentVector
from .quasi_ham import Bivector, omega_surface


class ReductionError(ValueError):
    pass


def tsvd_solve(A, b, rcond=1e-9):
    """Least-squares solve with an explicit relative singular-value cutoff,
    so near-null directions never produce runaway Newton steps."""
    u, s, vt = np.linalg.svd(A, full_matrices=False)
    keep = s > rcond * (s[0] if s.size else 1.0)
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return vt.T @ (inv * (u.T @ b))


# ---------------------------------------------------------------------------
# the ambient quadratic algebra  d = (+)_e ( g-bar (+) g )
# ---------------------------------------------------------------------------

class Ambient:
    """Coordinates on the ambient Dirac algebra of a moduli structure.

    One block per (graph edge, side): side "in" carries the negated metric,
    side "out" the original one.  The swap involution exchanges the two
    sides of every edge.
    """

    def __init__(self, space):
        self.space = space
        self.edges = space.graph_edges()
        self.blocks = []
        for key in self.edges:
            self.blocks.append(("in", key))
            self.blocks.append(("out", key))
        self.offsets = {}
        off = 0
        for side, key in self.blocks:
            self.offsets[(side, key)] = off
            off += space.algebras[key[0]].dim
        self.dim = off
        self.total = self._build_algebra()
        self.swap = self._build_swap()
        self.total.involution = self.swap

    def _build_algebra(self):
        structure = np.zeros((self.dim, self.dim, self.dim))
        metric = np.zeros((self.dim, self.dim))
        basis_blocks = []
        nmat = 0
        sizes = []
        for side, key in self.blocks:
            alg = self.space.algebras[key[0]]
            sizes.append(alg.basis[0].shape[0])
        starts = np.cumsum([0] + sizes)
        nmat = starts[-1]
        for b, (side, key) in enumerate(self.blocks):
            alg = self.space.algebras[key[0]]
            d = alg.dim
            off = self.offsets[(side, key)]
            sgn = -1.0 if side == "in" else 1.0
            metric[off:off + d, off:off + d] = sgn * alg.metric
            structure[off:off + d, off:off + d, off:off + d] = alg.structure
            for a in range(d):
                mat = np.zeros((nmat, nmat))
                s0 = starts[b]
                n = sizes[b]
                mat[s0:s0 + n, s0:s0 + n] = alg.basis[a]
                basis_blocks.append(mat)
        return QuadraticLieAlgebra(basis_blocks, metric, structure,
                                   name="ambient", check=False)

    def _build_swap(self):
        swap = np.zeros((self.dim, self.dim))
        for key in self.edges:
            d = self.space.algebras[key[0]].dim
            i, o = self.offsets[("in", key)], self.offsets[("out", key)]
            swap[i:i + d, o:o + d] = np.eye(d)
            swap[o:o + d, i:i + d] = np.eye(d)
        return swap

    # -- embeddings --------------------------------------------------------------
    def gauge_classes(self):
        out = []
        for dom, ms in enumerate(self.space.domains):
            out += [(dom, c) for c in ms.marked]
        return out

    def gauge_embedding(self):
        """Matrix of h = (+) g^{marked classes} -> d (thin columns)."""
        classes = self.gauge_classes()
        h_offsets = {}
        off = 0
        for dom, c in classes:
            h_offsets[(dom, c)] = off
            off += self.space.algebras[dom].dim
        E = np.zeros((self.dim, off))
        for key in self.edges:
            dom, lbl = key
            d = self.space.algebras[dom].dim
            vin = self.space.graph_in(dom, lbl)
            vout = self.space.graph_out(dom, lbl)
            E[self.offsets[("in", key)]:self.offsets[("in", key)] + d,
              h_offsets[vin]:h_offsets[vin] + d] += np.eye(d)
            E[self.offsets[("out", key)]:self.offsets[("out", key)] + d,
              h_offsets[vout]:h_offsets[vout] + d] += np.eye(d)
        return E, h_offsets

    def gauge_span(self):
        E, _ = self.gauge_embedding()
        return span_basis(E.T, self.dim)

    # -- the action on N ---------------------------------------------------------
    def anchor_rows(self, mus):
        """Anchor d -> T N at mus (left-trivialized per graph edge): the rows
        are indexed like N-tangents, the columns like ambient coordinates."""
        n_rows = sum(self.space.algebras[dom].dim for dom, _ in self.edges)
        A = np.zeros((n_rows, self.dim))
        r = 0
        for key in self.edges:
            dom, lbl = key
            alg = self.space.algebras[dom]
            d = alg.dim
            adinv = ad_matrix(alg, np.linalg.inv(mus[key]))
            A[r:r + d, self.offsets[("in", key)]:self.offsets[("in", key)] + d] \
                = -adinv
            A[r:r + d, self.offsets[("out", key)]:self.offsets[("out", key)] + d] \
                = np.eye(d)
            r += d
        return A

    def splitting_of_tangent(self, mus, xs):
        """Isotropic splitting s: T N -> d at mus, applied to per-edge
        left-trivialized tangents xs[(dom,label)]."""
        out = np.zeros(self.dim)
        for key in self.edges:
            dom, lbl = key
            alg = self.space.algebras[key[0]]
            d = alg.dim
            x = xs[key]
            out[self.offsets[("in", key)]:self.offsets[("in", key)] + d] = \
                -0.5 * (ad_matrix(alg, mus[key]) @ x)
            out[self.offsets[("out", key)]:self.offsets[("out", key)] + d] = \
                0.5 * x
        return out

    def block(self, vec, side, key):
        d = self.space.algebras[key[0]].dim
        off = self.offsets[(side, key)]
        return np.asarray(vec)[off:off + d]

    # -- subalgebra builders -------------------------------------------------------
    def subalgebra(self, rows, name="c", require=True):
        return Subalgebra(self.total, rows, name=name, require_subalgebra=require)

    def full_edges_span(self, keys):
        rows = []
        for key in keys:
            d = self.space.algebras[key[0]].dim
            for side in ("in", "out"):
                off = self.offsets[(side, key)]
                block = np.zeros((d, self.dim))
                block[:, off:off + d] = np.eye(d)
                rows.append(block)
        return np.vstack(rows) if rows else np.zeros((0, self.dim))

    def pair_colouring_span(self, key, c: Subalgebra):
        """l_c = {(xi, eta): xi, eta in c, xi - eta in c-perp} on one edge."""
        dom = key[0]
        d = self.space.algebras[dom].dim
        cperp = lie_core.orthogonal(c)
        rows = []
        i, o = self.offsets[("in", key)], self.offsets[("out", key)]
        for v in c.span:
            row = np.zeros(self.dim)
            row[i:i + d] = v
            row[o:o + d] = v
            rows.append(row)
        for w in cperp.span:
            row = np.zeros(self.dim)
            row[i:i + d] = w
            rows.append(row)
        return np.stack(rows)

    def sew_colouring_span(self, key1, key2):
        """l_sew = {((xi,eta);(eta,xi))} on an ordered pair of edges."""
        d = self.space.algebras[key1[0]].dim
        if self.space.algebras[key2[0]].dim != d:
            raise ReductionError("sewing needs equal structure algebras")
        rows = []
        for a in range(d):
            row = np.zeros(self.dim)
            row[self.offsets[("in", key1)] + a] = 1.0
            row[self.offsets[("out", key2)] + a] = 1.0
            rows.append(row)
            row = np.zeros(self.dim)
            row[self.offsets[("out", key1)] + a] = 1.0
            row[self.offsets[("in", key2)] + a] = 1.0
            rows.append(row)
        return np.stack(rows)

    def vertex_colouring_span(self, cls, l_span):
        """Embed a Lagrangian l_v in g (+) g-bar (L-slot, R-slot) at a marked
        class: L acts on the edge leaving the class, R on the edge entering."""
        dom, c = cls
        d = self.space.algebras[dom].dim
        ms = self.space.domains[dom]
        e_out = ms.graph.edge_leaving(c)
        e_in = ms.graph.edge_into(c)
        rows = []
        for v in np.atleast_2d(l_span):
            row = np.zeros(self.dim)
            row[self.offsets[("out", (dom, e_out))]:
                self.offsets[("out", (dom, e_out))] + d] += v[:d]
            row[self.offsets[("in", (dom, e_in))]:
                self.offsets[("in", (dom, e_in))] + d] += v[d:]
            rows.append(row)
        return np.stack(rows)


# ---------------------------------------------------------------------------
# orbit descriptors
# ---------------------------------------------------------------------------

class OrbitDescriptor:
    """Invariant submanifold S of N presented by constraint functions.

    `constraint(mus) -> residual vector`; the descriptor also carries the
    generating subalgebra span (in ambient coordinates) used for tangency
    and vertical-space computations.
    """

    def __init__(self, constraint, generator_span=None, kind="explicit_constraints",
                 name="S", tol=1e-9):
        self.constraint = constraint
        self.generator_span = generator_span
        self.kind = kind
        self.name = name
        self.tol = tol

    def residual(self, mus):
        return np.asarray(self.constraint(mus), dtype=float)

    def contains(self, mus, tol=None):
        r = self.residual(mus)
        return bool(r.size == 0 or np.abs(r).max() <= (tol or self.tol))

    def jacobian(self, ambient, mus, h=1e-7):
        """d(constraint) with respect to left-trivialized edge motions."""
        base = self.residual(mus)
        cols = []
        for key in ambient.edges:
            alg = ambient.space.algebras[key[0]]
            for a in range(alg.dim):
                xi = alg.matrix(np.eye(alg.dim)[a])
                plus = dict(mus)
                minus = dict(mus)
                step = group_exp(alg, np.eye(alg.dim)[a], h).value
                stepm = group_exp(alg, np.eye(alg.dim)[a], -h).value
                plus[key] = mus[key] @ step
                minus[key] = mus[key] @ stepm
                cols.append((self.residual(plus) - self.residual(minus)) / (2 * h))
        return np.stack(cols, axis=1) if cols else np.zeros((len(base), 0))

    def tangency_residual(self, ambient, mus, n_checks=None):
        """max |dF(anchor(c-basis))| over the generator span at mus in S."""
        if self.generator_span is None or not self.generator_span.size:
            return 0.0
        jac = self.jacobian(ambient, mus)
        A = ambient.anchor_rows(mus)
        worst = 0.0
        for row in self.generator_span:
            worst = max(worst, np.abs(jac @ (A @ row)).max()
                        if jac.size else 0.0)
        return worst


def trivial_orbit(name="N"):
    return OrbitDescriptor(lambda mus: np.zeros(0), kind="explicit_constraints",
                           name=name)


def product_one_orbit(key1, key2, name=None):
    """Sewing orbit: mu_{e1} mu_{e2} = 1 (the l_sew orbit through identity)."""

    def constraint(mus):
        g = mus[key1] @ mus[key2]
        return (g - np.eye(g.shape[0])).ravel()

    return OrbitDescriptor(constraint, kind="product_constraint",
                           name=name or f"sew({key1},{key2})")


def subgroup_orbit(key, shape_fn, name=None):
    """Per-edge membership orbit:  shape_fn(mu_e) = 0 cuts out C-perp."""

    def constraint(mus):
        return np.asarray(shape_fn(mus[key]), dtype=float).ravel()

    return OrbitDescriptor(constraint, kind="subgroup_orbit_through_identity",
                           name=name or f"orbit({key})")


def conjugacy_class_orbit(key, reference, name=None):
    """Conjugacy class through `reference`: matching characteristic data."""
    ref = np.asarray(reference, dtype=float)
    n = ref.shape[0]
    ref_traces = [np.trace(np.linalg.matrix_power(ref, k)) for k in range(1, n + 1)]

    def constraint(mus):
        g = mus[key]
        return np.array([np.trace(np.linalg.matrix_power(g, k)) - ref_traces[k - 1]
                         for k in range(1, n + 1)])

    return OrbitDescriptor(constraint, kind="conjugacy_class",
                           name=name or f"class({key})")


def intersect_orbits(*orbits, name=None):
    def constraint(mus):
        parts = [o.residual(mus) for o in orbits]
        return np.concatenate(parts) if parts else np.zeros(0)

    spans = [o.generator_span for o in orbits if o.generator_span is not None]
    gen = None
    return OrbitDescriptor(constraint, generator_span=gen, kind="explicit_constraints",
                           name=name or "&".join(o.name for o in orbits))


# ---------------------------------------------------------------------------
# reduction data
# ---------------------------------------------------------------------------

class ReductionData:
    """Coisotropic subalgebra together with an invariant orbit descriptor."""

    def __init__(self, ambient: Ambient, c: Subalgebra, orbit: OrbitDescriptor,
                 name="reduction", check=True):
        self.ambient = ambient
        self.c = c
        self.orbit = orbit
        self.name = name
        self.cperp = lie_core.orthogonal(c)
        if check and not span_contains(c.span, self.cperp.span):
            raise ReductionError(f"{name}: c is not coisotropic")
        kind = lie_core.classify_subalgebra(c, involution=ambient.swap)
        self.lagrangian = kind in ("lagrangian", "symmetric_lagrangian")
        self.symmetric = kind == "symmetric_lagrangian" or (
            span_contains(self.c.span @ ambient.swap.T, self.c.span)
            and span_contains(self.c.span, self.c.span @ ambient.swap.T))
        E, self._h_offsets = ambient.gauge_embedding()
        self._E = E
        # h cap c-perp in gauge-class coordinates: E xi orthogonal to c (the
        # metric double-perp of c-perp), refined by an exact span test
        cand = nullspace(self.c.span @ ambient.total.metric @ E)
        keep = []
        for row in cand:
            if span_contains(self.cperp.span, (E @ row)[None, :]):
                keep.append(row)
        self.residual_gauge = span_basis(keep, E.shape[1]) if keep else \
            np.zeros((0, E.shape[1]))

    def gauge_class_vector(self, row):
        """Split a gauge-class coordinate vector into {(dom, class): coeff}."""
        out = {}
        for cls, off in self._h_offsets.items():
            d = self.ambient.space.algebras[cls[0]].dim
            coef = row[off:off + d]
            if np.abs(coef).max() > 0:
                out[cls] = coef
        return out

    def residual_dimension(self):
        return self.residual_gauge.shape[0]


# ---------------------------------------------------------------------------
# level sets, slices, reduced tensors
# ---------------------------------------------------------------------------

def solve_level_set(structure, orbit, seed_point, tol=1e-11, max_iter=100):
    """Newton-solve F(mu(p)) = 0 on the relation variety from a seed point.

    Steps are taken in the left-trivialized tangent coordinates of the full
    edge space, solving the joint system (face relations, orbit constraints),
    and retracted edge-wise through exp.
    """
    space = structure.space

    def residual_of(q):
        mus = space.moment(q)
        return np.concatenate([space._face_residual_vector(q),
                               orbit.residual(mus)])

    def retract(q, step):
        out = q.copy()
        for key, x in space.unpack(step).items():
            alg = space.algebras[key[0]]
            out.data[key] = out.data[key] @ group_exp(alg, x).value
        return out

    p = seed_point.copy()
    res = residual_of(p)
    for it in range(max_iter):
        if res.size == 0 or np.abs(res).max() < tol:
            if space.face_residual(p) > 1e-10:
                raise ReductionError("face relations drifted")
            return p
        mus = space.moment(p)
        jac = np.vstack([space._face_jacobian(p),
                         _orbit_jacobian_on_edges(structure, orbit, p, mus)])
        step = tsvd_solve(jac, -res, rcond=1e-8)
        if np.abs(step).max() > 1.0:
            step *= 1.0 / np.abs(step).max()
        # backtracking on the residual norm
        norm0 = np.linalg.norm(res)
        alpha = 1.0
        for _ in range(25):
            q = retract(p, alpha * step)
            res_q = residual_of(q)
            if np.linalg.norm(res_q) < (1 - 1e-4 * alpha) * norm0:
                p, res = q, res_q
                break
            alpha *= 0.5
        else:
            raise ReductionError("level-set Newton stalled "
                                 f"(residual {norm0:.2e})")
    raise ReductionError(f"level-set Newton did not converge "
                         f"(last residual {np.abs(res).max():.2e})")


def solve_level_set_retrying(structure, orbit, seed_factory, retries=15,
                             tol=1e-11):
    """Retry Newton from fresh seeds; the caller supplies the seed factory."""
    last = None
    for _ in range(retries):
        try:
            return solve_level_set(structure, orbit, seed_factory(), tol=tol)
        except ReductionError as err:
            last = err
    raise ReductionError(f"no convergence in {retries} seeds: {last}")


def _orbit_jacobian_on_edges(structure, orbit, p, mus, h=1e-7):
    """d(F о mu) with respect to the moduli edge coordinates (central FD)."""
    space = structure.space
    base = orbit.residual(mus)
    if base.size == 0:
        return np.zeros((0, space.tangent_dim_ambient))
    cols = []
    for dom, e in space.pos_edges:
        alg = space.algebras[dom]
        for a in range(alg.dim):
            q = p.copy()
            q.data[(dom, e)] = p.data[(dom, e)] @ group_exp(
                alg, np.eye(alg.dim)[a], h).value
            rp = orbit.residual(space.moment(q))
            q.data[(dom, e)] = p.data[(dom, e)] @ group_exp(
                alg, np.eye(alg.dim)[a], -h).value
            rm = orbit.residual(space.moment(q))
            cols.append((rp - rm) / (2 * h))
    return np.stack(cols, axis=1)


def walk_level_set(structure, orbit, p, rng, steps=4, step_size=0.35,
                   tol=1e-11):
    """Diffuse along the level set: random tangent steps with Newton
    re-projection.  Starting from any solved point (the identity when the
    orbit passes through it) this reaches generic-scale samples reliably."""
    space = structure.space
    for _ in range(steps):
        basis = level_set_tangent(structure, orbit, p)
        coef = rng.standard_normal(basis.shape[0])
        step = step_size * (basis.T @ coef) / max(1.0, np.linalg.norm(coef))
        q = p.copy()
        for key, x in space.unpack(step).items():
            alg = space.algebras[key[0]]
            q.data[key] = q.data[key] @ group_exp(alg, x).value
        p = solve_level_set(structure, orbit, q, tol=tol)
    return p


def level_set_tangent(structure, orbit, p):
    """Orthonormal basis of T_p mu^{-1}(S) in packed coordinates."""
    space = structure.space
    mus = space.moment(p)
    cons = [space.tangent_constraints(p)]
    jac = _orbit_jacobian_on_edges(structure, orbit, p, mus)
    if jac.size:
        cons.append(jac)
    return nullspace(np.vstack(cons), tol=1e-7)


def orbit_directions(structure, rdata, p, include_unmarked=True):
    """Packed coordinates of the directions to quotient: the residual-gauge
    action plus the gauge of complex vertices in no marked class."""
    space = structure.space
    rows = []
    for row in rdata.residual_gauge:
        xi = rdata.gauge_class_vector(row)
        rows.append(structure.action(xi, p).coords())
    if include_unmarked:
        for dom, v in space.vertices:
            part = space.domains[dom].partition
            if v in part:
                continue
            alg = space.algebras[dom]
            for a in range(alg.dim):
                vec = space.structure_action({(dom, v): np.eye(alg.dim)[a]}, p)
                rows.append(vec.coords())
    return span_basis(rows, space.tangent_dim_ambient) if rows else \
        np.zeros((0, space.tangent_dim_ambient))


def slice_at(structure, rdata, p, tol=1e-7):
    """Orthonormal slice basis: complement of the orbit directions inside the
    level-set tangent space.

    The tolerance separates genuine complement directions (order 1) from
    finite-difference noise in the level-set tangent computation (< 1e-9).
    """
    T = level_set_tangent(structure, rdata.orbit, p)
    O = orbit_directions(structure, rdata, p)
    if O.shape[0] and not span_contains(T, O, tol=1e-6):
        raise ReductionError("orbit directions leave the level set "
                             "(S is not invariant here)")
    return span_complement(O, T, tol=tol), T, O


def two_form_matrix(structure, p, rows):
    """omega evaluated pairwise on packed tangent rows."""
    space = structure.space
    vecs = [space.tangent(r) for r in rows]
    m = len(vecs)
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            val = omega_surface(space, p, vecs[i], vecs[j])
            out[i, j] = val
            out[j, i] = -val
    return out


def reduced_two_form(structure, rdata, p, slice_rows=None):
    """Matrix of the reduced 2-form on the slice.

    For symmetric data with orbits through the identity the splitting is
    tangent to c and the reduced form is the plain restriction; otherwise
    the theta-corrected formula is used (Lagrangian c only).
    """
    if not rdata.symmetric:
        return reduced_two_form_corrected(structure, rdata, p,
                                          slice_rows=slice_rows)
    if slice_rows is None:
        slice_rows, _, _ = slice_at(structure, rdata, p)
    mat = two_form_matrix(structure, p, slice_rows)
    rank = np.linalg.matrix_rank(mat, tol=1e-9)
    return mat, {"rank": int(rank), "dim": mat.shape[0]}


def _connection_theta(structure, rdata, p, slice_rows, variant=0):
    """theta(d mu X) in ambient c-perp coordinates for each slice vector.

    The connection projects T S onto the vertical distribution a(c-perp)
    along a horizontal complement; variant selects the complement (0 is the
    euclidean one, others reweight it) for theta-(in)dependence tests.
    """
    space = structure.space
    ambient = rdata.ambient
    mus = space.moment(p)
    A = ambient.anchor_rows(mus)
    Vcols = (A @ rdata.cperp.span.T)
    # tangent rows of S at mu(p): image of the level-set tangent under d mu
    thetas = []
    n_rows = Vcols.shape[0]
    if variant == 0:
        weights = np.ones(n_rows)
    else:
        rng = np.random.default_rng(1000 + variant)
        weights = 0.5 + rng.random(n_rows)
    W = np.diag(weights)
    for row in slice_rows:
        X = space.tangent(row)
        y = np.concatenate([space.path_log_derivative(
            p, X, key[0], space.graph_word(key[0], key[1]))
            for key in ambient.edges])
        sol, *_ = np.linalg.lstsq(W @ Vcols, W @ y, rcond=None)
        vert = Vcols @ sol
        # the residual y - vert must be "horizontal"; theta only records sol
        thetas.append(rdata.cperp.span.T @ sol)
    return thetas


def correction_term_matrix(structure, rdata, p, slice_rows, variant=0):
    """(1/2) mu^* <theta, s o a(theta)> as a matrix on the slice."""
    space = structure.space
    ambient = rdata.ambient
    mus = space.moment(p)
    A = ambient.anchor_rows(mus)
    thetas = _connection_theta(structure, rdata, p, slice_rows, variant)
    m = len(slice_rows)
    # s o a(theta): split the anchored tangent back into d through s
    s_of = []
    for th in thetas:
        y = A @ th
        xs = {}
        r = 0
        for key in ambient.edges:
            d = space.algebras[key[0]].dim
            xs[key] = y[r:r + d]
            r += d
        s_of.append(ambient.splitting_of_tangent(mus, xs))
    G = ambient.total.metric
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            val = 0.5 * (float(thetas[i] @ G @ s_of[j])
                         - float(thetas[j] @ G @ s_of[i]))
            out[i, j] = val
            out[j, i] = -val
    return out


def reduced_two_form_corrected(structure, rdata, p, slice_rows=None,
                               theta_variant=0):
    """q* omega_red = i* omega - (1/2) mu^* <theta, s o a(theta)> on the slice
    (Lagrangian c)."""
    if not rdata.lagrangian:
        raise ReductionError("corrected reduction needs Lagrangian c")
    if slice_rows is None:
        slice_rows, _, _ = slice_at(structure, rdata, p)
    base = two_form_matrix(structure, p, slice_rows)
    corr = correction_term_matrix(structure, rdata, p, slice_rows,
                                  variant=theta_variant)
    mat = base - corr
    rank = np.linalg.matrix_rank(mat, tol=1e-9)
    return mat, {"rank": int(rank), "dim": mat.shape[0],
                 "correction_max": float(np.abs(corr).max())}


# ---------------------------------------------------------------------------
# tau extraction and reduced bivectors
# ---------------------------------------------------------------------------

def tau_from_lagrangian(algebra, l_span, tol=1e-9):
    """Extract tau in wedge^2 (h / (l cap h)) from a Lagrangian l in g (+) g-bar.

    Coordinates: l_span rows are length 2d = (L-slot, R-slot); h is the
    diagonal, identified with g.  Returns (tau_wedges, k0span) with
    tau_wedges = [(coeff, xi_i, xi_j)] meaning tau = sum coeff xi_i ^ xi_j.
    """
    d = algebra.dim
    l_span = span_basis(l_span, 2 * d)
    diag = np.hstack([np.eye(d), np.eye(d)])
    off = np.hstack([np.eye(d), -np.eye(d)])
    k0 = lie_core.span_intersect(l_span, diag, 2 * d)
    k0_g = span_basis([row[:d] for row in k0], d) if k0.size else np.zeros((0, d))
    comp = span_complement(k0_g, np.eye(d))  # basis h_r of a complement in g
    m = comp.shape[0]
    # admissible alpha = (a, -a) with <a, k0_g> = 0 (g-metric)
    ann = nullspace(k0_g @ algebra.metric) if k0_g.size else np.eye(d)
    # choose m_r in ann with 2 <m_r, h_s> = delta_rs
    Gram = 2.0 * (ann @ algebra.metric @ comp.T)
    coefs = np.linalg.pinv(Gram.T)  # rows r: coordinates of m_r in ann-basis
    ms = coefs @ ann
    tau_rows = np.zeros((m, m))
    for r in range(m):
        a = ms[r]
        alpha = np.concatenate([a, -a])
        # x in l with x - alpha in diag: solve [l_basis | diag-basis] combos
        A = np.vstack([l_span, -diag]).T
        sol, res, *_ = np.linalg.lstsq(A, alpha, rcond=None)
        if np.abs(A @ sol - alpha).max() > tol:
            raise ReductionError("Lagrangian does not decompose against the "
                                 "diagonal (tau undefined)")
        hpart = sol[l_span.shape[0]:] @ diag  # x - alpha, lies in the diagonal
        tau_sharp = hpart[:d]
        # coordinates in the comp basis, modulo k0
        coords, *_ = np.linalg.lstsq(
            np.vstack([comp, k0_g]).T if k0_g.size else comp.T,
            tau_sharp, rcond=None)
        tau_rows[r] = coords[:m]
    tau_rows = 0.5 * (tau_rows - tau_rows.T)  # enforce skew (roundoff)
    wedges = []
    for i in range(m):
        for j in range(i + 1, m):
            if abs(tau_rows[i, j]) > tol:
                wedges.append((tau_rows[i, j], comp[i], comp[j]))
    return wedges, k0_g


def vertex_tau_bivector(structure, cls, l_span, p):
    """rho_v(tau_v) as a Bivector at p, for a Lagrangian colouring of one
    marked class."""
    dom = cls[0]
    alg = structure.space.algebras[dom]
    wedges, _ = tau_from_lagrangian(alg, l_span)
    out = []
    for coeff, xi, eta in wedges:
        V = structure.action({cls: xi}, p)
        W = structure.action({cls: eta}, p)
        out.append((coeff * V, W))
    return Bivector(out)


def reduced_bivector(structure, rdata, p, vertex_colourings=None,
                     slice_rows=None):
    """(pi + sum_v rho_v(tau_v)) restricted to the level set, pushed to the
    slice.  Returns (matrix on slice, slice_rows, info)."""
    space = structure.space
    if slice_rows is None:
        slice_rows, T, O = slice_at(structure, rdata, p)
    else:
        _, T, O = slice_at(structure, rdata, p)
    pi = structure.pi(p)
    total = Bivector(list(pi.wedges))
    for cls, l_span in (vertex_colourings or {}).items():
        total = total + vertex_tau_bivector(structure, cls, l_span, p)
    # projection onto the slice along the orbit directions
    frame = np.vstack([slice_rows, O]) if O.size else slice_rows
    proj = np.linalg.pinv(frame.T)[:slice_rows.shape[0]]

    m = slice_rows.shape[0]
    mat = np.zeros((m, m))
    for V, W in total.wedges:
        v = proj @ V.coords()
        w = proj @ W.coords()
        mat += np.outer(v, w) - np.outer(w, v)
    return mat, slice_rows, {"wedges": len(total.wedges)}


def bivector_invariance_residual(structure, rdata, p, vertex_colourings=None,
                                 t=1e-5):
    """Lie derivative of the reduced bivector along the residual directions,
    by comparing slice matrices at gauge-flowed points in transported frames."""
    space = structure.space
    if rdata.residual_gauge.shape[0] == 0:
        return 0.0
    slice_rows, _, _ = slice_at(structure, rdata, p)
    base, _, _ = reduced_bivector(structure, rdata, p, vertex_colourings,
                                  slice_rows=slice_rows)
    worst = 0.0
    for row in rdata.residual_gauge:
        xi = rdata.gauge_class_vector(row)
        vert_gauge = structure.expand_class_gauge(xi)
        hplus = {k: group_exp(space.algebras[k[0]], v, -t).value
                 for k, v in vert_gauge.items()}
        hminus = {k: group_exp(space.algebras[k[0]], v, t).value
                  for k, v in vert_gauge.items()}
        # transport the slice frame along the gauge flow
        rows_p = _gauge_transport_rows(space, slice_rows, hplus, p)
        rows_m = _gauge_transport_rows(space, slice_rows, hminus, p)
        pp = space.gauge_act(hplus, p)
        pm = space.gauge_act(hminus, p)
        mp, _, _ = reduced_bivector(structure, rdata, pp, vertex_colourings,
                                    slice_rows=rows_p)
        mm, _, _ = reduced_bivector(structure, rdata, pm, vertex_colourings,
                                    slice_rows=rows_m)
        worst = max(worst, np.abs((mp - mm) / (2 * t)).max())
    return worst


def _gauge_transport_rows(space, rows, h, p):
    out = []
    for r in rows:
        X = space.tangent(r)
        data = {}
        for dom, e in space.pos_edges:
            alg = space.algebras[dom]
            surf = space.domains[dom].surface
            ho = h.get((dom, surf.out_vertex(e)), None)
            x = X.data[(dom, e)]
            if ho is not None:
                x = ad_matrix(alg, ho) @ x
            data[(dom, e)] = x
        out.append(space.pack(data))
    return np.stack(out)


# ---------------------------------------------------------------------------
# commutativity of reductions
# ---------------------------------------------------------------------------

def check_commutativity(structure, rdata1, rdata2, seed_point,
                        vertex_colourings=None, use_bivector=False):
    """Execute two reductions in both orders on the joint level set and
    compare the reduced tensors on matched slices; returns a report."""
    space = structure.space
    joint = intersect_orbits(rdata1.orbit, rdata2.orbit)
    c12 = lie_core.span_intersect(rdata1.c.span, rdata2.c.span,
                                  rdata1.ambient.dim)
    joint_data = ReductionData(rdata1.ambient,
                               rdata1.ambient.subalgebra(c12, "c1&c2"),
                               joint, name="joint")
    p = solve_level_set(structure, joint, seed_point)

    def reduced_matrix(first, second):
        # iterated quotient realized on the joint level set: orbit directions
        # of both steps are removed; slice order reflects the execution order
        T = level_set_tangent(structure, joint, p)
        O1 = orbit_directions(structure, first, p)
        O2 = orbit_directions(structure, second, p)
        O = span_basis(np.vstack([O1, O2]) if O1.size or O2.size else
                       np.zeros((0, space.tangent_dim_ambient)),
                       space.tangent_dim_ambient)
        rows = span_complement(O, T)
        if use_bivector:
            mat, rows, _ = reduced_bivector(structure, joint_data, p,
                                            vertex_colourings, slice_rows=rows)
            return mat, rows
        return two_form_matrix(structure, p, rows), rows

    m12, rows12 = reduced_matrix(rdata1, rdata2)
    m21, rows21 = reduced_matrix(rdata2, rdata1)
    # match slices: express rows21 in the rows12 frame modulo orbits
    O = span_basis(np.vstack([orbit_directions(structure, rdata1, p),
                              orbit_directions(structure, rdata2, p)]),
                   space.tangent_dim_ambient)
    frame = np.vstack([rows12, O]) if O.size else rows12
    coefs = np.linalg.pinv(frame.T) @ rows21.T
    P = coefs[:rows12.shape[0]].T   # rows21 in rows12 coordinates
    predicted = P @ m12 @ P.T
    dev = np.abs(predicted - m21).max()
    return {"deviation": float(dev), "dim": rows12.shape[0],
            "point_residual": float(np.abs(joint.residual(space.moment(p))).max())}
