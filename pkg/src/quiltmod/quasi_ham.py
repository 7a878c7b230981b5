"""Quasi-Hamiltonian evaluators: 2-forms, the curvature 3-form, axiom checks,
fusion bivectors and the intersection-pairing formula.

The 2-form of a triangulated surface is the face-wise sum of
omega_t = 1/2 < g_{e2}^-1 d g_{e2} , d g_{e1} g_{e1}^-1 >  evaluated with the
wedge convention <a ^ b>(X, Y) = <a(X), b(Y)> - <a(Y), b(X)>; bigon faces
contribute nothing.  All evaluators are pure functions of points and
left-trivialized tangents.
"""

from __future__ import annotations

import numpy as np

from .constants import CARTAN_KAPPA
from .lie_core import ad_matrix, group_exp, nullspace
from .moduli import ModuliError, ModuliSpace, TangentVector
from .surface import is_positive, positive


# ---------------------------------------------------------------------------
# 2-forms
# ---------------------------------------------------------------------------

def omega_triangle(space, p, X, Y, dom, face):
    """Triangle 2-form on one face (cyclically invariant on the face relation)."""
    f1, f2 = face[0], face[1]
    alg = space.algebras[dom]
    ad1 = ad_matrix(alg, p.g(dom, f1))
    x1, y1 = X.x(dom, f1, p), Y.x(dom, f1, p)
    x2, y2 = X.x(dom, f2, p), Y.x(dom, f2, p)
    return 0.5 * (float(x2 @ alg.metric @ (ad1 @ y1))
                  - float(y2 @ alg.metric @ (ad1 @ x1)))


def omega_surface(space, p, X, Y):
    """Sum of the face 2-forms over every domain of the moduli space."""
    total = 0.0
    for dom, face in space.faces:
        if len(face) == 2:
            continue
        if len(face) != 3:
            raise ModuliError("omega_surface needs a triangulated complex")
        total += omega_triangle(space, p, X, Y, dom, face)
    return total


def omega_splitting(space, p, X, Y, tol=1e-8):
    """Canonical 2-form computed through the isotropic splitting of the
    ambient Dirac data; valid where the boundary holonomies embed the moduli
    space (unions of polygons).  Independent of omega_surface.
    """
    mus = space.moment(p)
    blocks = {}
    verts = space.graph_vertices()
    vidx = {v: i for i, v in enumerate(verts)}
    dims = [space.algebras[dom].dim for dom, _ in verts]
    offs = np.cumsum([0] + dims)
    rows, rhs = [], []
    dmuX = {}
    for dom, lbl in space.graph_edges():
        alg = space.algebras[dom]
        d = alg.dim
        word = space.graph_word(dom, lbl)
        dmu_x = space.path_log_derivative(p, X, dom, word)
        dmu_y = space.path_log_derivative(p, Y, dom, word)
        dmuX[(dom, lbl)] = (dmu_x, dmu_y)
        row = np.zeros((d, offs[-1]))
        iv = vidx[space.graph_in(dom, lbl)]
        ov = vidx[space.graph_out(dom, lbl)]
        row[:, offs[iv]:offs[iv] + d] -= ad_matrix(alg, np.linalg.inv(mus[(dom, lbl)]))
        row[:, offs[ov]:offs[ov] + d] += np.eye(d)
        rows.append(row)
        rhs.append(dmu_x)
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    xi, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.abs(A @ xi - b).max() > tol * max(1.0, np.abs(b).max()):
        raise ModuliError("anchor equation unsolvable: moment map does not embed")
    total = 0.0
    for dom, lbl in space.graph_edges():
        alg = space.algebras[dom]
        d = alg.dim
        iv, ov = vidx[space.graph_in(dom, lbl)], vidx[space.graph_out(dom, lbl)]
        _, dmu_y = dmuX[(dom, lbl)]
        adg = ad_matrix(alg, mus[(dom, lbl)])
        total += 0.5 * (float((adg @ dmu_y) @ alg.metric @ xi[offs[iv]:offs[iv] + d])
                        + float(dmu_y @ alg.metric @ xi[offs[ov]:offs[ov] + d]))
    return total


def cartan_three_form(algebra, xi, eta, zeta):
    """Curvature 3-form of the invariant splitting, evaluated on algebra
    coefficients: kappa <[xi, eta], zeta> (fully antisymmetric)."""
    return CARTAN_KAPPA * float(algebra.bracket(xi, eta) @ algebra.metric
                                @ np.asarray(zeta, float))


def gamma_pullback(space, p, X, Y, Z):
    """mu^* gamma on three tangents: the 3-form summed over boundary arcs."""
    total = 0.0
    for dom, lbl in space.graph_edges():
        alg = space.algebras[dom]
        word = space.graph_word(dom, lbl)
        u = space.path_log_derivative(p, X, dom, word)
        v = space.path_log_derivative(p, Y, dom, word)
        w = space.path_log_derivative(p, Z, dom, word)
        total += cartan_three_form(alg, u, v, w)
    return total


# ---------------------------------------------------------------------------
# elimination charts (exact local coordinates by re-solving faces)
# ---------------------------------------------------------------------------

class EliminationChart:
    """Chart on the relation variety: free edges move by right translation,
    the remaining edges are re-solved face by face.

    Frame fields are the left-invariant fields of the free edges; their
    pairwise brackets live on single edges, which makes the classical frame
    formula for the exterior derivative exact up to finite differencing.
    """

    def __init__(self, space, free_edges):
        self.space = space
        self.free = list(free_edges)
        free_set = set(self.free)
        self.dep = [k for k in space._offsets if k not in free_set]
        probe = space.identity_point()
        probe = space._eliminate(probe, pinned=self.free)
        if space.face_residual(probe) > 1e-9:
            raise ModuliError("free edges do not determine the complex")

    def move(self, p, key, a, t):
        q = p.copy()
        alg = self.space.algebras[key[0]]
        q.data[key] = q.data[key] @ group_exp(alg, np.eye(alg.dim)[a], t).value
        q = self.space._eliminate(q, pinned=self.free)
        return q

    def tangent_from_free(self, p, free_components):
        """Unique tangent with the given free components (dependents solved)."""
        C = self.space.tangent_constraints(p)
        x_free = np.zeros(self.space.tangent_dim_ambient)
        for key, comp in free_components.items():
            off = self.space._offsets[key]
            x_free[off:off + len(comp)] = comp
        cols_dep = []
        for key in self.dep:
            off = self.space._offsets[key]
            cols_dep += list(range(off, off + self.space.algebras[key[0]].dim))
        A = C[:, cols_dep]
        b = -C @ x_free
        sol, *_ = np.linalg.lstsq(A, b, rcond=None)
        if np.abs(A @ sol - b).max() > 1e-8 * max(1.0, np.abs(b).max()):
            raise ModuliError("chart tangent solve failed")
        x = x_free.copy()
        x[cols_dep] += sol
        return self.space.tangent(x)

    def frame(self, p, key, a):
        alg = self.space.algebras[key[0]]
        return self.tangent_from_free(p, {key: np.eye(alg.dim)[a]})

    def omega_frames(self, p, u, v, form):
        return form(p, self.frame(p, *u), self.frame(p, *v))

    def d_omega(self, p, u, v, w, form, h=1e-5):
        """Exterior derivative on three frame fields by central differences."""

        def ddir(fu, func):
            return (func(self.move(p, *fu, h)) - func(self.move(p, *fu, -h))) / (2 * h)

        t1 = ddir(u, lambda q: self.omega_frames(q, v, w, form))
        t2 = ddir(v, lambda q: self.omega_frames(q, u, w, form))
        t3 = ddir(w, lambda q: self.omega_frames(q, u, v, form))

        def bracket_term(pq, rr, sign):
            (k1, a1), (k2, a2) = pq
            if k1 != k2:
                return 0.0
            alg = self.space.algebras[k1[0]]
            coef = alg.bracket(np.eye(alg.dim)[a1], np.eye(alg.dim)[a2])
            vec = self.tangent_from_free(p, {k1: coef})
            return sign * form(p, vec, self.frame(p, *rr))

        b1 = bracket_term((u, v), w, -1.0)
        b2 = bracket_term((u, w), v, +1.0)
        b3 = bracket_term((v, w), u, -1.0)
        return t1 - t2 + t3 + b1 + b2 + b3


def polygon_chart(space):
    """Free edges e1..e_{n-1} of a polygon moduli space."""
    labels = sorted({e for _, e in space.pos_edges if e.startswith("e")},
                    key=lambda s: int(s[1:]))
    return EliminationChart(space, [(0, lbl) for lbl in labels[:-1]])


# ---------------------------------------------------------------------------
# bivectors
# ---------------------------------------------------------------------------

class Bivector:
    """Finite wedge sum of tangent vectors at a point: sum_i V_i ^ W_i."""

    def __init__(self, wedges):
        self.wedges = list(wedges)

    def evaluate(self, covA, covB):
        """Pair with two covectors given as linear functionals on tangents."""
        total = 0.0
        for V, W in self.wedges:
            total += covA(V) * covB(W) - covA(W) * covB(V)
        return total

    def matrix(self, basis_coords):
        """Coefficient matrix pi^{ab} in an orthonormal tangent basis
        (rows of `basis_coords` are packed tangent coordinates)."""
        m = basis_coords.shape[0]
        out = np.zeros((m, m))
        for V, W in self.wedges:
            v = basis_coords @ V.coords()
            w = basis_coords @ W.coords()
            out += np.outer(v, w) - np.outer(w, v)
        return out

    def pair_with_forms(self, formA, formB, dimA, dimB):
        """Contract with two algebra-valued 1-forms; returns a (dimA, dimB)
        coefficient tensor in g (x) g."""
        out = np.zeros((dimA, dimB))
        for V, W in self.wedges:
            out += np.outer(formA(V), formB(W)) - np.outer(formA(W), formB(V))
        return out

    def __add__(self, other):
        return Bivector(self.wedges + other.wedges)


class QuasiHamStructure:
    """Moduli space with its quasi-Hamiltonian data.

    * `space` is the underlying (possibly multi-domain) moduli space;
    * the 2-form is the triangulated-face sum (exact pipeline);
    * `s_tensors[dom]` is the symmetric tensor entering fusion (for a
      quadratic algebra, the inverse metric); domains without one cannot fuse;
    * `bivector_fn(p)` returns the wedge decomposition of pi at p (the
      bivector pipeline), or None.
    """

    def __init__(self, space: ModuliSpace, s_tensors=None, bivector_fn=None,
                 name=None):
        self.space = space
        self.s_tensors = dict(s_tensors or {})
        self.bivector_fn = bivector_fn
        self.name = name or space.name

    # -- gauge bookkeeping -------------------------------------------------------
    def expand_class_gauge(self, xi):
        """Turn {(dom, marked class): coeff} into complex-vertex gauge data."""
        out = {}
        for (dom, cls), coef in xi.items():
            part = self.space.domains[dom].partition
            members = [v for v, c in part.items() if c == cls]
            if not members:
                raise ModuliError(f"unknown marked class {(dom, cls)}")
            for v in members:
                out[(dom, v)] = out.get((dom, v), 0) + np.asarray(coef, float)
        return out

    def action(self, xi, p):
        """Structure action of the residual algebra h = prod g^{V_i}."""
        return self.space.structure_action(self.expand_class_gauge(xi), p)

    def moment(self, p):
        return self.space.moment(p)

    def omega(self, p, X, Y):
        return omega_surface(self.space, p, X, Y)

    def pi(self, p) -> Bivector:
        if self.bivector_fn is None:
            return Bivector([])
        return self.bivector_fn(p)

    # -- derived checks -----------------------------------------------------------
    def moment_identity_residual(self, p, xis, Xs):
        """Condition: iota_{rho(xi)} omega = (1/2) mu^* sum_e
        <g^-1 dg, xi_out> + <dg g^-1, xi_in>."""
        worst = 0.0
        for xi in xis:
            rho = self.action(xi, p)
            for X in Xs:
                lhs = self.omega(p, rho, X)
                rhs = 0.0
                for dom, lbl in self.space.graph_edges():
                    alg = self.space.algebras[dom]
                    word = self.space.graph_word(dom, lbl)
                    dmu = self.space.path_log_derivative(p, X, dom, word)
                    mu_e = p.word_holonomy(dom, word)
                    x_out = xi.get(self.space.graph_out(dom, lbl), np.zeros(alg.dim))
                    x_in = xi.get(self.space.graph_in(dom, lbl), np.zeros(alg.dim))
                    rhs += 0.5 * (float(dmu @ alg.metric @ x_out)
                                  + float((ad_matrix(alg, mu_e) @ dmu)
                                          @ alg.metric @ x_in))
                worst = max(worst, abs(lhs - rhs))
        return worst

    def equivariance_residual(self, p, xis):
        """Exact check that d mu (rho(xi)) = -xi_in^R + xi_out^L per arc."""
        worst = 0.0
        for xi in xis:
            rho = self.action(xi, p)
            for dom, lbl in self.space.graph_edges():
                alg = self.space.algebras[dom]
                word = self.space.graph_word(dom, lbl)
                dmu = self.space.path_log_derivative(p, rho, dom, word)
                mu_e = p.word_holonomy(dom, word)
                x_out = xi.get(self.space.graph_out(dom, lbl), np.zeros(alg.dim))
                x_in = xi.get(self.space.graph_in(dom, lbl), np.zeros(alg.dim))
                pred = -ad_matrix(alg, np.linalg.inv(mu_e)) @ x_in + x_out
                worst = max(worst, np.abs(dmu - pred).max())
        return worst

    def kernel_rank_gap(self, p):
        """Dimension of ker(d mu) cap ker(omega flat) plus the smallest
        retained singular value (0 gap means condition (3) holds)."""
        basis = self.space.tangent_basis(p)
        m = len(basis)
        omega_mat = np.zeros((m, m))
        for i in range(m):
            for j in range(i + 1, m):
                val = self.omega(p, basis[i], basis[j])
                omega_mat[i, j] = val
                omega_mat[j, i] = -val
        rows = [omega_mat]
        for dom, lbl in self.space.graph_edges():
            word = self.space.graph_word(dom, lbl)
            block = np.stack([self.space.path_log_derivative(p, b, dom, word)
                              for b in basis], axis=1)
            rows.append(block)
        stacked = np.vstack(rows)
        s = np.linalg.svd(stacked, compute_uv=False)
        null_dim = int(np.sum(s <= 1e-8 * max(1.0, s[0])))
        return null_dim, (s[m - 1] if m else 0.0)


def verify_quasi_ham(structure, n_samples=20, seed=0, chart=None,
                     d_omega_triples=4, tol_scale=1.0):
    """Run the four structure conditions at sampled points; returns a report
    dict with the max residual per condition (failures are entries, not
    exceptions)."""
    rng = np.random.default_rng(seed)
    space = structure.space
    report = {"samples": n_samples, "seed": seed}
    res_eq = res_mom = res_rank = 0.0
    res_domega = 0.0
    rank_fail = 0
    for _ in range(n_samples):
        p = space.random_point(rng)
        Xs = [space.random_tangent(p, rng) for _ in range(3)]
        xis = []
        for _ in range(2):
            xi = {}
            for dom, cls in _marked_classes(space):
                xi[(dom, cls)] = space.algebras[dom].random_element(rng)
            xis.append(xi)
        res_eq = max(res_eq, structure.equivariance_residual(p, xis))
        res_mom = max(res_mom, structure.moment_identity_residual(p, xis, Xs))
        null_dim, sval = structure.kernel_rank_gap(p)
        if null_dim:
            rank_fail += 1
        res_rank = max(res_rank, float(null_dim))
        if chart is not None:
            for _ in range(d_omega_triples):
                u, v, w = (_rand_frame(chart, rng) for _ in range(3))
                dv = chart.d_omega(p, u, v, w, structure.omega)
                gv = gamma_pullback(space, p, chart.frame(p, *u),
                                    chart.frame(p, *v), chart.frame(p, *w))
                res_domega = max(res_domega, abs(dv - gv))
    report["equivariance"] = res_eq
    report["moment_identity"] = res_mom
    report["kernel_rank_violations"] = rank_fail
    report["d_omega_vs_gamma"] = res_domega if chart is not None else None
    report["pass"] = (res_eq < 1e-10 * tol_scale and res_mom < 1e-10 * tol_scale
                      and rank_fail == 0
                      and (chart is None or res_domega < 1e-6 * tol_scale))
    return report


def _marked_classes(space):
    out = []
    for dom, ms in enumerate(space.domains):
        out += [(dom, c) for c in ms.marked]
    return out


def _rand_frame(chart, rng):
    key = chart.free[rng.integers(len(chart.free))]
    a = int(rng.integers(chart.space.algebras[key[0]].dim))
    return key, a


# ---------------------------------------------------------------------------
# fusion of bivector structures
# ---------------------------------------------------------------------------

def pair_s_tensor(algebra):
    """Inverse metric: the canonical symmetric tensor of a quadratic algebra."""
    return np.linalg.inv(algebra.metric)


def zero_bivector_structure(space, s_tensors=None, name=None):
    """Polygon-union starting point of the bivector pipeline: pi = 0."""
    if s_tensors is None:
        s_tensors = {dom: pair_s_tensor(space.algebras[dom])
                     for dom in range(len(space.domains))}
    return QuasiHamStructure(space, s_tensors, bivector_fn=lambda p: Bivector([]),
                             name=name)


def fusion_bivector(structure, P, Q):
    """Fuse the ordered pair of marked classes P=(dom, cls), Q=(dom, cls).

    The underlying manifold is unchanged; the boundary graph is fused and the
    bivector gains the twist  pi* = pi + (1/2) s^{ij} rho_P(xi_i) ^ rho_Q(xi_j).
    """
    domP, clsP = P
    domQ, clsQ = Q
    space = structure.space
    if (domP, clsP) == (domQ, clsQ):
        raise ModuliError("fusion needs distinct marked classes")
    if domP != domQ:
        raise ModuliError("fusion acts within one domain; build the disjoint "
                          "union as a single multi-component complex")
    new_domains = list(space.domains)
    new_domains[domP] = space.domains[domP].fuse(clsP, clsQ)
    new_space = ModuliSpace(list(zip(new_domains, space.algebras)),
                            name=f"{space.name}*")
    s = structure.s_tensors.get(domP)
    if s is None:
        raise ModuliError("fusion needs the symmetric tensor of the domain")
    old_structure = structure
    d = space.algebras[domP].dim

    def bivector_fn(p):
        q = _repoint(p, space)
        base = old_structure.pi(q)
        wedges = list(base.wedges)
        rho_P = [old_structure.action({(domP, clsP): np.eye(d)[i]}, q)
                 for i in range(d)]
        rho_Q = [old_structure.action({(domQ, clsQ): np.eye(d)[j]}, q)
                 for j in range(d)]
        for i in range(d):
            for j in range(d):
                cij = 0.5 * s[i, j]
                if abs(cij) < 1e-15:
                    continue
                wedges.append((cij * _retangent(rho_P[i], p.space),
                               _retangent(rho_Q[j], p.space)))
        return Bivector(wedges)

    out = QuasiHamStructure(new_space, structure.s_tensors, bivector_fn,
                            name=f"{structure.name}*({clsP},{clsQ})")
    out.last_case = new_domains[domP].last_case
    return out


def _repoint(p, space):
    from .moduli import ModuliPoint
    return ModuliPoint(space, p.data)


def _retangent(X, space):
    return TangentVector(space, X.data)


def fused_polygon_structure(n, algebra, name=None):
    """Canonical bivector structure of the n-gon, built by fusing n-1 bigons.

    Returns (structure, words): `words` expresses the n-gon edge labels
    e1..en as edge words of the underlying bigon-union complex, so points,
    tangents and path evaluations transport to a plain polygon complex:
    e_i = p_{n-1-i}e1 and e_n = (p_{n-2}e2, ..., p0e2).
    """
    st = polygon_union_structure([2] * (n - 1), algebra, name=name or f"P{n}*")
    space = st.space
    surf = space.domains[0].surface
    for k in range(n - 2):
        P = surf.in_vertex(f"p{k}e1")
        Q = surf.out_vertex(f"p{k + 1}e1")
        part = st.space.domains[0].partition
        st = fusion_bivector(st, (0, part[P]), (0, part[Q]))
    words = {f"e{i}": (f"p{n - 1 - i}e1",) for i in range(1, n)}
    words[f"e{n}"] = tuple(f"p{k}e2" for k in range(n - 2, -1, -1))
    return st, words


def polygon_union_structure(sizes, algebra, name=None):
    """Bivector-pipeline starting point: a disjoint union of polygons in a
    single domain (labels p{k}e{i}), with pi = 0 and the canonical tensor."""
    from .surface import MarkedSurface, Surface, polygon, triangulate

    faces = []
    for k, n in enumerate(sizes):
        surf = polygon(n, prefix=f"p{k}e")
        if n > 3:
            surf, _ = triangulate(surf, diag_prefix=f"p{k}d")
        faces += surf.faces
    un = Surface(faces, name=name or "polygons")
    space = ModuliSpace([(MarkedSurface(un), algebra)], name=name or "polygons")
    return zero_bivector_structure(space, name=name)


def exact_bivector_matrix(structure, p, basis=None):
    """Bivector of an exact (2-form) structure through the canonical
    complement: solve, for each covector, the graph relation

        -iota_Y omega + mu^* alpha = beta,   s(d mu Y) + a^* alpha in k,

    with k the per-class antidiagonal complement.  Returns the matrix of pi
    in the chosen tangent basis; independent of the fusion construction.
    """
    space = structure.space
    if basis is None:
        basis = space.tangent_basis(p)
    m = len(basis)
    edges = space.graph_edges()
    mus = space.moment(p)
    d_edge = {key: space.algebras[key[0]].dim for key in edges}
    alpha_off = {}
    off = 0
    for key in edges:
        alpha_off[key] = off
        off += d_edge[key]
    n_alpha = off

    omega_mat = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            val = structure.omega(p, basis[i], basis[j])
            omega_mat[i, j] = val
            omega_mat[j, i] = -val
    dmu = {key: np.stack([space.path_log_derivative(
        p, b, key[0], space.graph_word(key[0], key[1])) for b in basis], axis=1)
        for key in edges}

    # condition (i): -omega(Y, Z_b) + sum_e alpha_e(dmu_e Z_b) = beta(Z_b)
    rows_i = np.zeros((m, m + n_alpha))
    for b in range(m):
        for a in range(m):
            rows_i[b, a] = -omega_mat[a, b]
        for key in edges:
            o = m + alpha_off[key]
            rows_i[b, o:o + d_edge[key]] = dmu[key][:, b]

    # condition (ii): s(dmu Y) + a^* alpha lies in the span of k
    amb_dim = 2 * n_alpha
    blk = {}
    off = 0
    for key in edges:
        blk[("in", key)] = off
        off += d_edge[key]
        blk[("out", key)] = off
        off += d_edge[key]
    W = np.zeros((amb_dim, m + n_alpha))
    for key in edges:
        alg = space.algebras[key[0]]
        d = d_edge[key]
        adg = ad_matrix(alg, mus[key])
        ginv = np.linalg.inv(alg.metric)
        W[blk[("in", key)]:blk[("in", key)] + d, :m] = -0.5 * adg @ dmu[key]
        W[blk[("out", key)]:blk[("out", key)] + d, :m] = 0.5 * dmu[key]
        o = m + alpha_off[key]
        W[blk[("in", key)]:blk[("in", key)] + d, o:o + d] = \
            ginv @ ad_matrix(alg, np.linalg.inv(mus[key])).T
        W[blk[("out", key)]:blk[("out", key)] + d, o:o + d] = ginv
    # k-span rows: per marked class, +xi on the leaving edge's out block,
    # -xi on the entering edge's in block
    k_rows = []
    for dom, ms in enumerate(space.domains):
        for cls in ms.marked:
            d = space.algebras[dom].dim
            e_out = ms.graph.edge_leaving(cls)
            e_in = ms.graph.edge_into(cls)
            for a in range(d):
                row = np.zeros(amb_dim)
                row[blk[("out", (dom, e_out))] + a] = 1.0
                row[blk[("in", (dom, e_in))] + a] = -1.0
                k_rows.append(row)
    K = np.stack(k_rows)
    # annihilating projector of span(K)
    Kb = lie_core_span_basis(K, amb_dim)
    proj_out = np.eye(amb_dim) - Kb.T @ Kb
    rows_ii = proj_out @ W

    A = np.vstack([rows_i, rows_ii])
    out = np.zeros((m, m))
    for a in range(m):
        beta = np.zeros(m)
        beta[a] = 1.0
        rhs = np.concatenate([beta, np.zeros(amb_dim)])
        sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        resid = np.abs(A @ sol - rhs).max()
        if resid > 1e-7:
            raise ModuliError(f"exact bivector solve failed (residual {resid:.1e})")
        out[a] = sol[:m]
    return 0.5 * (out - out.T)


def lie_core_span_basis(rows, dim):
    from .lie_core import span_basis
    return span_basis(rows, dim)


# ---------------------------------------------------------------------------
# the intersection-pairing formula
# ---------------------------------------------------------------------------

def holonomy_form(space, p, dom, path):
    """ev_path^* (g^-1 dg) as a functional on tangents, valued in coefficients."""

    def form(X):
        return space.path_log_derivative(p, X, dom, path)

    return form


def bivector_via_intersections(structure, a, b, p, pairing_terms):
    """Right-hand side of the pairing formula together with the bivector side.

    `a`, `b` are (dom, edge word) paths; `pairing_terms` is the formal sum
    [(coefficient, (dom, word))] produced by the intersection pairing.
    Returns (lhs, rhs) as (d, d) coefficient tensors of g (x) g.
    """
    domA, pathA = a
    domB, pathB = b
    alg = structure.space.algebras[domA]
    d = alg.dim
    s = structure.s_tensors.get(domA)
    if s is None:
        raise ModuliError("needs the symmetric tensor")
    pi = structure.pi(p)
    lhs = pi.pair_with_forms(holonomy_form(structure.space, p, domA, pathA),
                             holonomy_form(structure.space, p, domB, pathB),
                             d, d)
    rhs = np.zeros((d, d))
    for coeff, (dom_t, word) in pairing_terms:
        hol = p.word_holonomy(dom_t, word)
        rhs += 0.5 * coeff * ad_matrix(alg, hol) @ s
    return lhs, rhs
