"""Moduli of combinatorial flat connections as edge-holonomy data.

A point assigns an invertible matrix to every positively-oriented edge of a
(possibly multi-domain) complex, subject to the face relations; reversed
edges carry the inverse exactly.  Tangent vectors are left-trivialized: the
velocity of g_e is g_e X_e, so reversal acts by X_{~e} = -Ad_{g_e} X_e.
"""

from __future__ import annotations

import json

import numpy as np

from . import lie_core
from .constants import STRUCTURE_ACTION_SIGN
from .lie_core import ad_matrix, group_exp
from .surface import FusedMarkedSurface, MarkedSurface, bar, is_positive, positive

RELATION_TOL = 1e-10


class ModuliError(ValueError):
    pass


class ModuliPoint:
    """Edge-indexed holonomies; keys are (domain, positive edge label)."""

    def __init__(self, space, data):
        self.space = space
        self.data = {k: np.asarray(v, dtype=float) for k, v in data.items()}

    def g(self, dom, edge):
        if is_positive(edge):
            return self.data[(dom, edge)]
        return np.linalg.inv(self.data[(dom, positive(edge))])

    def word_holonomy(self, dom, word):
        """Holonomy of an edge word in traversal order: g_{w_k} ... g_{w_1}."""
        n = self.space.algebras[dom].basis[0].shape[0]
        out = np.eye(n)
        for e in word:
            out = self.g(dom, e) @ out
        return out

    def copy(self):
        return ModuliPoint(self.space, {k: v.copy() for k, v in self.data.items()})

    def to_json(self):
        payload = {f"{dom}:{edge}": [f"{x:.17g}" for x in mat.ravel()]
                   for (dom, edge), mat in sorted(self.data.items())}
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, space, text):
        payload = json.loads(text)
        data = {}
        for key, flat in payload.items():
            dom, edge = key.split(":", 1)
            dom = int(dom)
            n = space.algebras[dom].basis[0].shape[0]
            data[(dom, edge)] = np.array([float(x) for x in flat]).reshape(n, n)
        return cls(space, data)


class TangentVector:
    """Left-trivialized edge velocities; same keys as ModuliPoint."""

    def __init__(self, space, data):
        self.space = space
        self.data = {k: np.asarray(v, dtype=float) for k, v in data.items()}

    def x(self, dom, edge, point):
        if is_positive(edge):
            return self.data[(dom, edge)]
        g = point.data[(dom, positive(edge))]
        alg = self.space.algebras[dom]
        return -ad_matrix(alg, g) @ self.data[(dom, positive(edge))]

    def coords(self):
        return self.space.pack(self.data)

    def __add__(self, other):
        return TangentVector(self.space, {k: self.data[k] + other.data[k]
                                          for k in self.data})

    def __rmul__(self, c):
        return TangentVector(self.space, {k: c * v for k, v in self.data.items()})


class ModuliSpace:
    """Product of flat-connection spaces over a list of (surface, algebra) domains.

    Surfaces may be MarkedSurface or FusedMarkedSurface; all complex vertices
    act by gauge transformations, while only marked vertices enter the
    boundary graph / residual structure.
    """

    def __init__(self, domains, name="moduli"):
        self.name = name
        self.domains = []
        self.algebras = []
        for ms, alg in domains:
            if isinstance(ms, MarkedSurface):
                ms = FusedMarkedSurface(ms)
            self.domains.append(ms)
            self.algebras.append(alg)
        self.pos_edges = []
        self.faces = []
        self.vertices = []
        for k, ms in enumerate(self.domains):
            surf = ms.surface
            self.pos_edges += [(k, e) for e in sorted(surf.edges)]
            self.faces += [(k, f) for f in surf.faces]
            self.vertices += [(k, v) for v in surf.vertices]
        self._offsets = {}
        off = 0
        for dom, e in self.pos_edges:
            self._offsets[(dom, e)] = off
            off += self.algebras[dom].dim
        self.tangent_dim_ambient = off

    # -- bookkeeping -----------------------------------------------------------
    def pack(self, data):
        out = np.zeros(self.tangent_dim_ambient)
        for key, off in self._offsets.items():
            d = self.algebras[key[0]].dim
            out[off:off + d] = data[key]
        return out

    def unpack(self, vec):
        data = {}
        for key, off in self._offsets.items():
            d = self.algebras[key[0]].dim
            data[key] = np.asarray(vec[off:off + d])
        return data

    def tangent(self, vec):
        return TangentVector(self, self.unpack(vec) if not isinstance(vec, dict)
                             else vec)

    # -- boundary graph of the product ------------------------------------------
    def graph_edges(self):
        """[(domain, graph label)] over all domains, deterministic order."""
        out = []
        for k, ms in enumerate(self.domains):
            out += [(k, e) for e in sorted(ms.graph.edges)]
        return out

    def graph_vertices(self):
        out = []
        for k, ms in enumerate(self.domains):
            out += [(k, v) for v in ms.marked]
        return out

    def graph_in(self, dom, label):
        return (dom, self.domains[dom].graph.in_vertex(label))

    def graph_out(self, dom, label):
        return (dom, self.domains[dom].graph.out_vertex(label))

    def graph_word(self, dom, label):
        return self.domains[dom].graph.word(label)

    # -- points ------------------------------------------------------------------
    def identity_point(self):
        data = {}
        for dom, e in self.pos_edges:
            n = self.algebras[dom].basis[0].shape[0]
            data[(dom, e)] = np.eye(n)
        return ModuliPoint(self, data)

    def random_point(self, rng, scale=0.3, newton_tol=1e-13):
        """Random flat connection: Gaussian edge holonomies projected to the
        relation variety (exact solve face by face where possible, Newton
        otherwise)."""
        data = {}
        for dom, e in self.pos_edges:
            alg = self.algebras[dom]
            data[(dom, e)] = group_exp(alg, alg.random_element(rng, scale)).value
        p = ModuliPoint(self, data)
        p = self._eliminate(p)
        if self.face_residual(p) > newton_tol:
            p = self.project_to_relations(p, tol=newton_tol)
        return p

    def _eliminate(self, p, pinned=()):
        """Re-solve edges face by face until the relations hold.

        Faces with exactly one unsolved edge are solved exactly; when only
        multi-unknown faces remain (the random-seeding case), one face is
        repaired by overwriting its last edge with the current values taken
        as given.  Edges in `pinned` are never re-solved.
        """
        solved = set(pinned)
        pending = list(self.faces)

        def solve_face(dom, f, e0):
            n = self.algebras[dom].basis[0].shape[0]
            acc_after = np.eye(n)
            acc_before = np.eye(n)
            pos = f.index(e0)
            for e in f[:pos]:
                acc_before = p.g(dom, e) @ acc_before
            for e in f[pos + 1:]:
                acc_after = p.g(dom, e) @ acc_after
            # face relation: acc_after g_{e0} acc_before = 1
            ge0 = np.linalg.inv(acc_after) @ np.linalg.inv(acc_before)
            if is_positive(e0):
                p.data[(dom, e0)] = ge0
            else:
                p.data[(dom, positive(e0))] = np.linalg.inv(ge0)
            for e in f:
                solved.add((dom, positive(e)))
            pending.remove((dom, f))

        while pending:
            progress = False
            for dom, f in list(pending):
                unknowns = [e for e in f if (dom, positive(e)) not in solved]
                if not unknowns:
                    pending.remove((dom, f))
                    progress = True
                elif len(unknowns) == 1:
                    solve_face(dom, f, unknowns[0])
                    progress = True
            if not pending:
                break
            if not progress:
                dom, f = pending[0]
                unknowns = [e for e in f if (dom, positive(e)) not in solved]
                solve_face(dom, f, unknowns[-1])
        return p

    def face_residual(self, p):
        worst = 0.0
        for dom, f in self.faces:
            n = self.algebras[dom].basis[0].shape[0]
            acc = np.eye(n)
            for e in f:
                acc = p.g(dom, e) @ acc
            worst = max(worst, np.abs(acc - np.eye(n)).max())
        return worst

    def check_point(self, p, tol=RELATION_TOL):
        r = self.face_residual(p)
        if r > tol:
            raise ModuliError(f"face relations violated (residual {r:.2e})")
        return r

    def project_to_relations(self, p, tol=1e-13, max_iter=60):
        """Newton projection onto the relation variety (left-trivialized steps)."""
        p = p.copy()
        for _ in range(max_iter):
            res = self._face_residual_vector(p)
            if np.abs(res).max() < tol:
                return p
            jac = self._face_jacobian(p)
            step, *_ = np.linalg.lstsq(jac, -res, rcond=None)
            data = self.unpack(step)
            for key, x in data.items():
                alg = self.algebras[key[0]]
                p.data[key] = p.data[key] @ group_exp(alg, x).value
        raise ModuliError("relation projection did not converge")

    def _face_residual_vector(self, p):
        chunks = []
        for dom, f in self.faces:
            n = self.algebras[dom].basis[0].shape[0]
            acc = np.eye(n)
            for e in f:
                acc = p.g(dom, e) @ acc
            chunks.append((acc - np.eye(n)).ravel())
        return np.concatenate(chunks) if chunks else np.zeros(0)

    def _face_jacobian(self, p, h=None):
        """d(face residual)/d(edge coords); exact via the product rule."""
        rows = []
        for dom, f in self.faces:
            alg = self.algebras[dom]
            n = alg.basis[0].shape[0]
            d = alg.dim
            prefix = [np.eye(n)]
            for e in f:
                prefix.append(p.g(dom, e) @ prefix[-1])
            total = prefix[-1]
            block = np.zeros((n * n, self.tangent_dim_ambient))
            for i, e in enumerate(f):
                rest = total @ np.linalg.inv(prefix[i + 1])  # g_{f_k}..g_{f_{i+1}}
                ge = p.g(dom, e)
                for a in range(d):
                    xi = alg.basis[a]
                    if is_positive(e):
                        dmat = rest @ ge @ xi @ prefix[i]
                        col = self._offsets[(dom, e)] + a
                        block[:, col] += dmat.ravel()
                    else:
                        gpos = p.data[(dom, positive(e))]
                        dmat = rest @ (-np.linalg.inv(gpos) @ (gpos @ xi)
                                       @ np.linalg.inv(gpos)) @ prefix[i]
                        col = self._offsets[(dom, positive(e))] + a
                        block[:, col] += dmat.ravel()
            rows.append(block)
        return np.vstack(rows) if rows else np.zeros((0, self.tangent_dim_ambient))

    # -- tangent spaces ----------------------------------------------------------
    def tangent_constraints(self, p):
        """Matrix whose kernel is the linearized relation variety."""
        rows = []
        for dom, f in self.faces:
            alg = self.algebras[dom]
            d = alg.dim
            n = alg.basis[0].shape[0]
            prefix = [np.eye(n)]
            for e in f:
                prefix.append(p.g(dom, e) @ prefix[-1])
            block = np.zeros((d, self.tangent_dim_ambient))
            for i, e in enumerate(f):
                coef = ad_matrix(alg, np.linalg.inv(prefix[i]))
                if is_positive(e):
                    col = self._offsets[(dom, e)]
                    block[:, col:col + d] += coef
                else:
                    gpos = p.data[(dom, positive(e))]
                    col = self._offsets[(dom, positive(e))]
                    block[:, col:col + d] += coef @ (-ad_matrix(alg, gpos))
            rows.append(block)
        return np.vstack(rows) if rows else np.zeros((0, self.tangent_dim_ambient))

    def tangent_basis(self, p, report=False):
        """Orthonormal basis of the tangent space at p (kernel of the
        linearized relations), with the generic-count bookkeeping."""
        cons = self.tangent_constraints(p)
        basis = lie_core.nullspace(cons, tol=1e-9)
        expected = self.tangent_dim_ambient - cons.shape[0]
        vectors = [self.tangent(v) for v in basis]
        if report:
            return vectors, {"dim": len(vectors), "generic_expected": expected,
                             "rank_deficient": len(vectors) != expected}
        return vectors

    def check_tangent(self, p, X, tol=RELATION_TOL):
        resid = self.tangent_constraints(p) @ X.coords()
        if np.abs(resid).max() > tol:
            raise ModuliError(f"linearized relations violated "
                              f"({np.abs(resid).max():.2e})")

    def random_tangent(self, p, rng):
        basis = self.tangent_basis(p)
        coef = rng.standard_normal(len(basis))
        vec = sum(c * b.coords() for c, b in zip(coef, basis))
        return self.tangent(vec)

    # -- moment map ----------------------------------------------------------------
    def moment(self, p):
        """Boundary holonomies, one per boundary-graph edge of each domain."""
        out = {}
        for dom, label in self.graph_edges():
            out[(dom, label)] = p.word_holonomy(dom, self.graph_word(dom, label))
        return out

    # -- gauge ------------------------------------------------------------------
    def gauge_act(self, h, p):
        """(h . g)_e = h_in(e) g_e h_out(e)^-1 over all complex vertices."""
        data = {}
        for dom, e in self.pos_edges:
            surf = self.domains[dom].surface
            n = self.algebras[dom].basis[0].shape[0]
            hi = h.get((dom, surf.in_vertex(e)), np.eye(n))
            ho = h.get((dom, surf.out_vertex(e)), np.eye(n))
            data[(dom, e)] = hi @ p.data[(dom, e)] @ np.linalg.inv(ho)
        return ModuliPoint(self, data)

    def gauge_vector(self, xi, p):
        """Derivative of gauge_act at the identity, left-trivialized."""
        data = {}
        for dom, e in self.pos_edges:
            alg = self.algebras[dom]
            surf = self.domains[dom].surface
            xin = xi.get((dom, surf.in_vertex(e)), np.zeros(alg.dim))
            xout = xi.get((dom, surf.out_vertex(e)), np.zeros(alg.dim))
            g = p.data[(dom, e)]
            data[(dom, e)] = ad_matrix(alg, np.linalg.inv(g)) @ xin - xout
        return TangentVector(self, data)

    def structure_action(self, xi, p):
        """Action of the ambient Dirac structure (sign-calibrated gauge flow)."""
        v = self.gauge_vector(xi, p)
        return TangentVector(self, {k: STRUCTURE_ACTION_SIGN * x
                                    for k, x in v.data.items()})

    def gauge_basis_vertices(self, marked_only=True):
        return self.graph_vertices() if marked_only else self.vertices

    # -- path holonomy -----------------------------------------------------------
    def path_holonomy(self, p, dom, path):
        return p.word_holonomy(dom, tuple(path))

    def path_log_derivative(self, p, X, dom, path):
        """hol^-1 d(hol)(X), the left-trivialized derivative of a path holonomy."""
        alg = self.algebras[dom]
        n = alg.basis[0].shape[0]
        prefix = np.eye(n)
        out = np.zeros(alg.dim)
        for e in path:
            out += ad_matrix(alg, np.linalg.inv(prefix)) @ X.x(dom, e, p)
            prefix = p.g(dom, e) @ prefix
        return out

    def transport(self, new_space, p, words, X=None):
        """Carry a point (and optional tangent) to a complex sharing edge labels,
        with `words` giving any new edges as words in old oriented edges."""
        data = {}
        xdata = {}
        for dom, e in new_space.pos_edges:
            if (dom, e) in p.data:
                data[(dom, e)] = p.data[(dom, e)].copy()
                if X is not None:
                    xdata[(dom, e)] = X.data[(dom, e)].copy()
            else:
                word = words[e]
                data[(dom, e)] = p.word_holonomy(dom, word)
                if X is not None:
                    alg = self.algebras[dom]
                    n = alg.basis[0].shape[0]
                    prefix = np.eye(n)
                    xv = np.zeros(alg.dim)
                    for w in word:
                        xv += ad_matrix(alg, np.linalg.inv(prefix)) @ X.x(dom, w, p)
                        prefix = p.g(dom, w) @ prefix
                    xdata[(dom, e)] = xv
        q = ModuliPoint(new_space, data)
        if X is None:
            return q
        return q, TangentVector(new_space, xdata)


def polygon_moduli(n, algebra, name=None):
    """Moduli space of the n-gon: relation g_e1 ... g_en = 1.

    For n >= 4 the disk is fan-triangulated; the boundary edges e1..en remain
    the moduli coordinates (g_en determined by the others).
    """
    from .surface import polygon, triangulate

    if n < 2:
        raise ModuliError("need n >= 2")
    surf = polygon(n)
    diagonal_words = {}
    if n > 3:
        surf, diagonal_words = triangulate(surf)
    ms = MarkedSurface(surf)
    space = ModuliSpace([(ms, algebra)], name=name or f"M(P{n})")
    space.diagonal_words = diagonal_words
    return space


def resolve_words(words, base):
    """Expand a word dictionary recursively over `base` words.

    `words` may reference other entries of `words`; `base` maps the atomic
    labels.  Returns fully-expanded tuples over the base alphabet.
    """
    from .surface import bar, is_positive, positive

    out = dict(base)

    def expand(label):
        if label in out:
            return out[label]
        if not is_positive(label):
            inner = expand(positive(label))
            return tuple(bar(e) for e in reversed(inner))
        word = words[label]
        res = []
        for e in word:
            res.extend(expand(e))
        out[label] = tuple(res)
        return out[label]

    for lbl in words:
        expand(lbl)
    return out


def polygon_point(space, gs):
    """Point of a polygon moduli space from the free boundary holonomies
    (g_e1, ..., g_{e_{n-1}}); the last edge and the diagonals are solved."""
    labels = sorted({e for _, e in space.pos_edges if e.startswith("e")},
                    key=lambda s: int(s[1:]))
    if len(gs) != len(labels) - 1:
        raise ModuliError(f"expected {len(labels) - 1} free holonomies")
    p = space.identity_point()
    for lbl, g in zip(labels[:-1], gs):
        p.data[(0, lbl)] = np.asarray(g, dtype=float)
    # relation in path order: g_e1 g_e2 ... g_en = 1
    n = space.algebras[0].basis[0].shape[0]
    acc = np.eye(n)
    for lbl in labels[:-1]:
        acc = acc @ p.data[(0, lbl)]
    p.data[(0, labels[-1])] = np.linalg.inv(acc)
    p = space._eliminate(p, pinned=[(0, lbl) for lbl in labels])
    space.check_point(p)
    return p
