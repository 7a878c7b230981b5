"""Quadratic Lie algebras, subalgebras, Drinfel'd doubles and matrix-group primitives.

Every algebra carries an explicit matrix realization together with
precomputed structure constants; elements are coefficient vectors with
respect to the chosen basis.  All subspace computations use rank-revealing
decompositions at a fixed tolerance.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

SPAN_TOL = 1e-10
JACOBI_TOL = 1e-12
PROJ_TOL = 1e-10


class AlgebraError(ValueError):
    """Inconsistent algebraic data (failed invariant at construction or use)."""


# ---------------------------------------------------------------------------
# subspace helpers (rows of 2-d arrays span subspaces of R^d)
# ---------------------------------------------------------------------------

def span_basis(rows, dim=None, tol=SPAN_TOL):
    """Orthonormal row basis of the span of `rows` (possibly empty)."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.size == 0:
        return np.zeros((0, dim if dim is not None else rows.shape[1]))
    u, s, vt = np.linalg.svd(rows, full_matrices=False)
    rank = int(np.sum(s > tol * max(1.0, s[0] if len(s) else 1.0)))
    return vt[:rank]


def span_contains(span, vecs, tol=SPAN_TOL):
    """True when every row of `vecs` lies in the row span of `span`."""
    basis = span_basis(span)
    vecs = np.atleast_2d(np.asarray(vecs, dtype=float))
    if vecs.size == 0:
        return True
    resid = vecs - vecs @ basis.T @ basis
    scale = max(1.0, np.abs(vecs).max())
    return bool(np.abs(resid).max() <= tol * scale)


def span_equal(a, b, tol=SPAN_TOL):
    return span_contains(a, b, tol) and span_contains(b, a, tol)


def span_intersect(a, b, dim, tol=SPAN_TOL):
    """Row basis of span(a) ∩ span(b)."""
    a = span_basis(a, dim)
    b = span_basis(b, dim)
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((0, dim))
    # null space of the stacked annihilators
    ann = np.vstack([nullspace(a, tol), nullspace(b, tol)])
    return nullspace(ann, tol) if ann.shape[0] else np.eye(dim)


def nullspace(rows, tol=SPAN_TOL):
    """Orthonormal basis (rows) of the right null space of `rows`."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    d = rows.shape[1]
    if rows.size == 0:
        return np.eye(d)
    u, s, vt = np.linalg.svd(rows)
    rank = int(np.sum(s > tol * max(1.0, s[0] if len(s) else 1.0)))
    return vt[rank:]


def span_complement(sub, ambient, tol=SPAN_TOL):
    """Rows spanning a complement of span(sub) inside span(ambient)."""
    sub = span_basis(sub, ambient.shape[1])
    amb = span_basis(ambient)
    if sub.shape[0] == 0:
        return amb
    proj = amb - amb @ sub.T @ sub
    return span_basis(proj, amb.shape[1], tol)


# ---------------------------------------------------------------------------
# quadratic Lie algebras
# ---------------------------------------------------------------------------

class QuadraticLieAlgebra:
    """Lie algebra with invariant symmetric pairing in a fixed basis.

    Parameters
    ----------
    basis : list of (n, n) arrays
        Matrix realization of the basis (may be non-faithful for quotients).
    metric : (d, d) array
        Pairing of basis elements; symmetric, usually nondegenerate.
    structure : (d, d, d) array, optional
        [xi_i, xi_j] = sum_k structure[i, j, k] xi_k.  Computed from the
        matrix brackets when omitted.
    """

    def __init__(self, basis, metric, structure=None, name="algebra",
                 nondegenerate=True, involution=None, matrix_faithful=True,
                 check=True):
        self.basis = [np.asarray(b, dtype=float) for b in basis]
        self.dim = len(self.basis)
        self.metric = np.asarray(metric, dtype=float)
        self.name = name
        self.nondegenerate = nondegenerate
        self.involution = None if involution is None else np.asarray(involution, dtype=float)
        self.matrix_faithful = matrix_faithful
        if self.dim:
            self._stack = np.stack(self.basis)
            self._flat = self._stack.reshape(self.dim, -1)  # (d, n*n)
            self._proj = np.linalg.pinv(self._flat.T)
        else:
            self._stack = np.zeros((0, 0, 0))
            self._flat = np.zeros((0, 0))
            self._proj = np.zeros((0, 0))
        if structure is None:
            structure = self._structure_from_matrices()
        self.structure = np.asarray(structure, dtype=float)
        if check:
            self._check_invariants()

    # -- construction helpers -------------------------------------------------
    def _structure_from_matrices(self):
        c = np.zeros((self.dim, self.dim, self.dim))
        for i, bi in enumerate(self.basis):
            for j, bj in enumerate(self.basis):
                c[i, j] = self.project(bi @ bj - bj @ bi)
        return c

    def _check_invariants(self):
        if not np.allclose(self.metric, self.metric.T, atol=JACOBI_TOL):
            raise AlgebraError(f"{self.name}: metric not symmetric")
        if self.nondegenerate and self.dim:
            s = np.linalg.svd(self.metric, compute_uv=False)
            if s[-1] <= 1e-10 * max(1.0, s[0]):
                raise AlgebraError(f"{self.name}: metric is degenerate")
        jr = self.jacobi_residual()
        if jr > JACOBI_TOL * 100:
            raise AlgebraError(f"{self.name}: Jacobi residual {jr:.2e}")
        ir = self.invariance_residual()
        if ir > JACOBI_TOL * 100:
            raise AlgebraError(f"{self.name}: metric invariance residual {ir:.2e}")

    # -- coefficient <-> matrix ----------------------------------------------
    def matrix(self, coeffs):
        """Matrix realization of a coefficient vector."""
        if not self.dim:
            return np.zeros((0, 0))
        coeffs = np.asarray(coeffs, dtype=float)
        return np.einsum("i,ijk->jk", coeffs, self._stack)

    def project(self, mat, tol=PROJ_TOL, strict=False):
        """Coefficients of `mat` in the basis; optionally enforce membership."""
        coeffs = self._proj @ np.asarray(mat, dtype=float).ravel()
        if strict:
            resid = np.abs(self._flat.T @ coeffs - np.asarray(mat).ravel()).max()
            if resid > tol * max(1.0, np.abs(mat).max()):
                raise AlgebraError(
                    f"{self.name}: element left the algebra (residual {resid:.2e})")
        return coeffs

    # -- algebraic operations --------------------------------------------------
    def bracket(self, x, y):
        return np.einsum("i,j,ijk->k", np.asarray(x, float), np.asarray(y, float),
                         self.structure)

    def inner(self, x, y):
        return float(np.asarray(x, float) @ self.metric @ np.asarray(y, float))

    def ad(self, x):
        """Matrix of ad_x acting on coefficient vectors."""
        return np.einsum("i,ijk->kj", np.asarray(x, float), self.structure)

    def jacobi_residual(self):
        c = self.structure
        # [[x,y],z] + [[y,z],x] + [[z,x],y] = 0 contracted on structure constants
        t = np.einsum("ijm,mkl->ijkl", c, c)
        total = t + np.einsum("jkm,mil->ijkl", c, c) + np.einsum("kim,mjl->ijkl", c, c)
        return float(np.abs(total).max()) if c.size else 0.0

    def invariance_residual(self):
        c, g = self.structure, self.metric
        # <[x,y],z> + <y,[x,z]> = 0
        t = np.einsum("ijm,mk->ijk", c, g) + np.einsum("ikm,jm->ijk", c, g)
        return float(np.abs(t).max()) if c.size else 0.0

    def random_element(self, rng, scale=1.0):
        return scale * rng.standard_normal(self.dim)

    def __repr__(self):
        return f"QuadraticLieAlgebra({self.name}, dim={self.dim})"


# ---------------------------------------------------------------------------
# subalgebras
# ---------------------------------------------------------------------------

class Subalgebra:
    """Subspace of a quadratic Lie algebra given by a coefficient row span."""

    def __init__(self, parent, span, name="subspace", require_subalgebra=True):
        self.parent = parent
        self.span = span_basis(span, parent.dim)
        self.name = name
        if require_subalgebra and not self.is_closed():
            raise AlgebraError(f"{name}: span not closed under bracket")

    @property
    def dim(self):
        return self.span.shape[0]

    def is_closed(self, tol=SPAN_TOL):
        brs = [self.parent.bracket(x, y) for x in self.span for y in self.span]
        if not brs:
            return True
        return span_contains(self.span, np.stack(brs), tol)

    def contains(self, vec, tol=SPAN_TOL):
        return span_contains(self.span, np.atleast_2d(vec), tol)

    def matrices(self):
        return [self.parent.matrix(v) for v in self.span]

    def __repr__(self):
        return f"Subalgebra({self.name}, dim={self.dim}/{self.parent.dim})"


def orthogonal(a: Subalgebra) -> Subalgebra:
    """Metric annihilator of a subspace; requires nondegenerate parent metric."""
    if not a.parent.nondegenerate:
        raise AlgebraError("orthogonal complement needs a nondegenerate metric")
    ann = nullspace(a.span @ a.parent.metric)
    return Subalgebra(a.parent, ann, name=f"{a.name}^perp", require_subalgebra=False)


def classify_subalgebra(a: Subalgebra, involution=None) -> str:
    """One of isotropic | coisotropic | lagrangian | symmetric_lagrangian | none.

    A Lagrangian subalgebra is additionally `symmetric_lagrangian` when it is
    preserved by the parent's edgewise swap involution (if one is known).
    """
    if not a.is_closed():
        raise AlgebraError(f"{a.name}: not a subalgebra")
    perp = orthogonal(a)
    iso = span_contains(perp.span, a.span)          # A subset of A^perp
    coiso = span_contains(a.span, perp.span)        # A^perp subset of A
    if iso and coiso:
        inv = involution if involution is not None else a.parent.involution
        if inv is not None and span_equal(a.span @ inv.T, a.span):
            return "symmetric_lagrangian"
        return "lagrangian"
    if coiso:
        return "coisotropic"
    if iso:
        return "isotropic"
    return "none"


def reduce_algebra(c: Subalgebra):
    """Quotient c/c^perp with induced bracket and metric.

    Returns (algebra, projector) where `projector` maps parent coefficients
    of elements of c to quotient coefficients (representatives are a fixed
    complement of c^perp inside c).  The quotient's matrix realization is its
    adjoint representation, which may be non-faithful; `matrix_faithful`
    records this.
    """
    perp = orthogonal(c)
    if not span_contains(c.span, perp.span):
        raise AlgebraError(f"{c.name}: not coisotropic")
    reps = span_complement(perp.span, c.span)
    k = reps.shape[0]
    parent = c.parent
    if k == 0:
        zero = QuadraticLieAlgebra([], np.zeros((0, 0)), np.zeros((0, 0, 0)),
                                   name=f"{parent.name}/{c.name}", check=False)
        return zero, np.zeros((0, parent.dim))
    # projector: orthogonal projection onto reps, expressed in rep coordinates
    proj = np.linalg.pinv(reps.T)

    metric = reps @ parent.metric @ reps.T
    structure = np.zeros((k, k, k))
    for i in range(k):
        for j in range(k):
            structure[i, j] = proj @ parent.bracket(reps[i], reps[j])
    ad_basis = [structure[i].T.copy() for i in range(k)]
    faithful = (np.linalg.matrix_rank(np.stack([m.ravel() for m in ad_basis]))
                == k)
    alg = QuadraticLieAlgebra(ad_basis, metric, structure,
                              name=f"{parent.name}/{c.name}",
                              nondegenerate=True,
                              matrix_faithful=bool(faithful), check=True)
    return alg, proj


# ---------------------------------------------------------------------------
# group-level primitives
# ---------------------------------------------------------------------------

class MatrixGroupElement:
    """Invertible matrix tagged with the algebra it exponentiates."""

    __slots__ = ("value", "algebra")

    def __init__(self, value, algebra):
        self.value = np.asarray(value, dtype=float)
        self.algebra = algebra
        if abs(np.linalg.det(self.value)) < 1e-14:
            raise AlgebraError("group element is singular")

    def inv(self):
        return MatrixGroupElement(np.linalg.inv(self.value), self.algebra)

    def __matmul__(self, other):
        return MatrixGroupElement(self.value @ other.value, self.algebra)

    def __repr__(self):
        return f"MatrixGroupElement({self.algebra.name})\n{self.value}"


def group_exp(algebra, coeffs, t=1.0):
    """exp(t * xi) as a MatrixGroupElement (scaling-and-squaring Pade core)."""
    return MatrixGroupElement(expm(t * algebra.matrix(coeffs)), algebra)


def group_ad(algebra, g, coeffs, tol=PROJ_TOL):
    """Ad_g xi = g xi g^-1 projected back to basis coefficients."""
    gv = g.value if isinstance(g, MatrixGroupElement) else np.asarray(g, float)
    mat = gv @ algebra.matrix(coeffs) @ np.linalg.inv(gv)
    return algebra.project(mat, tol=tol, strict=True)


def ad_matrix(algebra, g, tol=PROJ_TOL):
    """Matrix of Ad_g on coefficient vectors."""
    gv = g.value if isinstance(g, MatrixGroupElement) else np.asarray(g, float)
    ginv = np.linalg.inv(gv)
    cols = [algebra.project(gv @ b @ ginv, tol=tol, strict=True)
            for b in algebra.basis]
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# constructions: bar, direct sums, doubles
# ---------------------------------------------------------------------------

def bar(algebra, name=None):
    """Same algebra with the metric negated."""
    return QuadraticLieAlgebra(algebra.basis, -algebra.metric, algebra.structure,
                               name=name or f"{algebra.name}-bar",
                               nondegenerate=algebra.nondegenerate,
                               matrix_faithful=algebra.matrix_faithful)


def direct_sum(a, b, name=None, with_swap=False):
    """Orthogonal direct sum; matrices are block diagonal.

    With `with_swap=True` (requires matching dimensions) the result records
    the factor-swap involution used to recognise symmetric subalgebras.
    """
    na = a.basis[0].shape[0] if a.basis else 0
    nb = b.basis[0].shape[0] if b.basis else 0
    basis = []
    for m in a.basis:
        blk = np.zeros((na + nb, na + nb))
        blk[:na, :na] = m
        basis.append(blk)
    for m in b.basis:
        blk = np.zeros((na + nb, na + nb))
        blk[na:, na:] = m
        basis.append(blk)
    d = a.dim + b.dim
    metric = np.zeros((d, d))
    metric[:a.dim, :a.dim] = a.metric
    metric[a.dim:, a.dim:] = b.metric
    structure = np.zeros((d, d, d))
    structure[:a.dim, :a.dim, :a.dim] = a.structure
    structure[a.dim:, a.dim:, a.dim:] = b.structure
    involution = None
    if with_swap:
        if a.dim != b.dim:
            raise AlgebraError("swap involution needs equal factor dimensions")
        involution = np.zeros((d, d))
        involution[:a.dim, a.dim:] = np.eye(a.dim)
        involution[a.dim:, :a.dim] = np.eye(a.dim)
    return QuadraticLieAlgebra(basis, metric, structure,
                               name=name or f"{a.name}(+){b.name}",
                               nondegenerate=a.nondegenerate and b.nondegenerate,
                               involution=involution,
                               matrix_faithful=a.matrix_faithful and b.matrix_faithful)


class DoubleAlgebra:
    """Drinfel'd double d = g + g* attached to (g, s); linear groupoid over g.

    Coefficient order: first `base.dim` coordinates are the g part, the rest
    the g* part (dual basis).  Source and target are linear maps to g-coords;
    composition is defined exactly when source(x) = target(y).
    """

    def __init__(self, base, s_tensor, total, iso_to_pair=None, pair_algebra=None):
        self.base = base
        self.s_tensor = np.asarray(s_tensor, dtype=float)
        self.total = total
        self.iso_to_pair = iso_to_pair      # (2d, 2d) matrix or None
        self.pair_algebra = pair_algebra    # g (+) g-bar when s nondegenerate

    @property
    def dim(self):
        return self.base.dim

    def source(self, x):
        return np.asarray(x, float)[:self.dim]

    def target(self, x):
        x = np.asarray(x, float)
        return x[:self.dim] + self.s_tensor @ x[self.dim:]

    def composable(self, x, y, tol=1e-12):
        return bool(np.abs(self.source(x) - self.target(y)).max() <= tol)

    def compose(self, x, y, tol=1e-12):
        if not self.composable(x, y, tol):
            raise AlgebraError("groupoid elements not composable: source != target")
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        out = np.concatenate([y[:self.dim], x[self.dim:] + y[self.dim:]])
        return out


def drinfeld_double(base, s_tensor, name=None, invariance_tol=1e-12):
    """Drinfel'd double of (g, s) for invariant s in S^2 g.

    The bracket extends the g bracket by the coadjoint action together with
    the s-twist on the dual part; the metric pairs g with g* canonically and
    restricts to s on g*.  When s is nondegenerate the isomorphism onto
    g (+) g-bar  given by x -> (target(x), source(x)) is emitted.
    """
    d = base.dim
    s = np.asarray(s_tensor, dtype=float)
    f = base.structure
    if not np.allclose(s, s.T, atol=invariance_tol):
        raise AlgebraError("s tensor must be symmetric")
    # invariance: (ad_x (x) 1 + 1 (x) ad_x) s = 0 for all generators x
    inv_resid = np.einsum("ilj,lk->ijk", f, s) + np.einsum("ilk,jl->ijk", f, s)
    if inv_resid.size and np.abs(inv_resid).max() > 100 * invariance_tol:
        raise AlgebraError(
            f"s tensor not invariant (residual {np.abs(inv_resid).max():.2e})")

    metric = np.zeros((2 * d, 2 * d))
    metric[:d, d:] = np.eye(d)
    metric[d:, :d] = np.eye(d)
    metric[d:, d:] = s

    structure = np.zeros((2 * d, 2 * d, 2 * d))
    structure[:d, :d, :d] = f
    # [xi_i, xi^j] = -f[i,k,j] xi^k
    for i in range(d):
        for j in range(d):
            structure[i, d + j, d:] = -f[i, :, j]
            structure[d + j, i, d:] = f[i, :, j]
    # [xi^i, xi^j] = c_k xi^k with c_k = -f[k,l,i] s[j,l]
    for i in range(d):
        for j in range(d):
            structure[d + i, d + j, d:] = -np.einsum("kl,l->k", f[:, :, i], s[j])

    # matrix realization: adjoint representation of the double (generic), or
    # block-diagonal pair realization when s is nondegenerate.
    sing = np.linalg.svd(s, compute_uv=False) if d else np.array([])
    nondeg_s = bool(d and sing[-1] > 1e-10 * max(1.0, sing[0]))

    iso = None
    pair = None
    if nondeg_s:
        s_inv = np.linalg.inv(s)
        g_quad = QuadraticLieAlgebra(base.basis, s_inv, f, name=f"{base.name}[s^-1]",
                                     matrix_faithful=base.matrix_faithful)
        pair = direct_sum(g_quad, bar(g_quad), with_swap=True,
                          name=f"{base.name}(+)bar")
        # Phi(x, a) = (x + s a, x)
        iso = np.zeros((2 * d, 2 * d))
        iso[:d, :d] = np.eye(d)
        iso[:d, d:] = s
        iso[d:, :d] = np.eye(d)
        basis = [pair.matrix(iso[:, k]) for k in range(2 * d)]
        total = QuadraticLieAlgebra(basis, metric, structure,
                                    name=name or f"double({base.name})",
                                    matrix_faithful=pair.matrix_faithful)
    else:
        ad_basis = [structure[i].T.copy() for i in range(2 * d)]
        total = QuadraticLieAlgebra(ad_basis, metric, structure,
                                    name=name or f"double({base.name})",
                                    matrix_faithful=False)
    dbl = DoubleAlgebra(base, s, total, iso_to_pair=iso, pair_algebra=pair)
    return dbl


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def gl_algebra(n, name=None):
    """gl(n, R) with the trace form."""
    basis = []
    for i in range(n):
        for j in range(n):
            e = np.zeros((n, n))
            e[i, j] = 1.0
            basis.append(e)
    metric = np.array([[np.trace(a @ b) for b in basis] for a in basis])
    return QuadraticLieAlgebra(basis, metric, name=name or f"gl({n})")


def sl_algebra(n, name=None, scale=1.0):
    """sl(n, R) with `scale` times the trace form."""
    basis = []
    for i in range(n):
        for j in range(n):
            if i != j:
                e = np.zeros((n, n))
                e[i, j] = 1.0
                basis.append(e)
    for i in range(n - 1):
        h = np.zeros((n, n))
        h[i, i], h[i + 1, i + 1] = 1.0, -1.0
        basis.append(h)
    metric = scale * np.array([[np.trace(a @ b) for b in basis] for a in basis])
    return QuadraticLieAlgebra(basis, metric, name=name or f"sl({n})")


def su2_realified(name="su(2)-realified"):
    """su(2) realified to 4x4 real matrices, metric = Re tr (negative definite)."""
    sigma = [np.array([[0, 1], [1, 0]], dtype=complex),
             np.array([[0, -1j], [1j, 0]], dtype=complex),
             np.array([[1, 0], [0, -1]], dtype=complex)]
    cx_basis = [1j * s for s in sigma]

    def realify(m):
        a, b = m.real, m.imag
        return np.block([[a, -b], [b, a]])

    basis = [realify(m) for m in cx_basis]
    metric = np.array([[0.5 * np.trace(a @ b) for b in basis] for a in basis])
    return QuadraticLieAlgebra(basis, metric, name=name)


def abelian_algebra(n, name=None):
    """R^n with trivial bracket, euclidean metric, diagonal matrix model."""
    basis = []
    for i in range(n):
        e = np.zeros((n + 1, n + 1))
        e[i, i] = 1.0
        basis.append(e)
    return QuadraticLieAlgebra(basis, np.eye(n), np.zeros((n, n, n)),
                               name=name or f"abelian({n})")


def subalgebra_from_matrices(parent, mats, name="subspace", **kw):
    rows = np.stack([parent.project(m, strict=True) for m in mats])
    return Subalgebra(parent, rows, name=name, **kw)


def triangular_subalgebra(parent, kind, name=None):
    """Span of the basis matrices of a matrix algebra with a triangular shape.

    kind: 'upper', 'lower', 'strict_upper', 'strict_lower', 'diagonal'.
    """
    keep = []
    for b in parent.basis:
        lower = np.abs(np.tril(b, -1)).max() > 0
        upper = np.abs(np.triu(b, 1)).max() > 0
        diag = np.abs(np.diag(b)).max() > 0
        if kind == "upper" and not lower:
            keep.append(b)
        elif kind == "lower" and not upper:
            keep.append(b)
        elif kind == "strict_upper" and upper and not lower and not diag:
            keep.append(b)
        elif kind == "strict_lower" and lower and not upper and not diag:
            keep.append(b)
        elif kind == "diagonal" and diag and not upper and not lower:
            keep.append(b)
    return subalgebra_from_matrices(parent, keep, name=name or f"{parent.name}.{kind}")


def diagonal_subalgebra(pair, name="g_diag"):
    """Diagonal g_Delta inside a direct sum g (+) g-bar of equal factors."""
    d = pair.dim // 2
    span = np.hstack([np.eye(d), np.eye(d)])
    return Subalgebra(pair, span, name=name)


def antidiagonal_subspace(pair, name="g_antidiag"):
    """Off-diagonal complement {(x, -x)}; not a subalgebra in general."""
    d = pair.dim // 2
    span = np.hstack([np.eye(d), -np.eye(d)])
    return Subalgebra(pair, span, name=name, require_subalgebra=False)


def coisotropic_pair_subalgebra(pair, c: Subalgebra, name=None):
    """l_c = {(x, y) : x, y in c, x - y in c^perp} inside g (+) g-bar.

    Lagrangian and symmetric for any coisotropic c in g.
    """
    d = pair.dim // 2
    cperp = orthogonal(c)
    rows = [np.concatenate([v, v]) for v in c.span]
    rows += [np.concatenate([w, np.zeros(d)]) for w in cperp.span]
    return Subalgebra(pair, np.stack(rows), name=name or f"l_{c.name}")


def sew_subalgebra(pair_of_pairs, edge_dim, name="l_sew"):
    """l_sew = {((x, y); (y, x))} inside (g-bar (+) g)^2 style ambients."""
    d = edge_dim
    eye = np.eye(d)
    zero = np.zeros((d, d))
    span = np.vstack([
        np.hstack([eye, zero, zero, eye]),
        np.hstack([zero, eye, eye, zero]),
    ])
    return Subalgebra(pair_of_pairs, span, name=name, require_subalgebra=True)
