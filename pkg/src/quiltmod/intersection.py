"""Combinatorial intersection pairing of edge paths on a triangulated surface.

Paths are pushed off the 1-skeleton to the right of their travel direction,
the first argument by twice the amount of the second, so parallel runs stay
parallel and all transverse crossings happen inside vertex corners.  Each
crossing contributes  lambda * sign * [alpha_A^{-1} beta_A]  to the formal
sum; boundary intersections (lambda = 1) occur exactly at shared endpoint
marked points, with the boundary orientation supplying the reference frame.

The rotation order of edge germs around a vertex is the corner-successor
walk; faces traversed in storage order make this walk counterclockwise for
the surface orientation, which fixes every sign below deterministically.
The rule is validated against the fusion-built bivector, not assumed.
"""

from __future__ import annotations

import numpy as np

from .constants import ORIENT_SIGN
from .surface import SurfaceError, bar


class GroupoidPath:
    """Edge path in traversal order with endpoints at marked points."""

    def __init__(self, surface, edges):
        self.surface = surface
        self.edges = tuple(edges)
        for e in self.edges:
            if bar(e) not in surface._face_of and e not in surface._face_of:
                raise SurfaceError(f"unknown edge {e}")
        for prev, nxt in zip(self.edges, self.edges[1:]):
            if surface.in_vertex(prev) != surface.out_vertex(nxt):
                raise SurfaceError(f"path breaks at {prev} -> {nxt}")

    @property
    def start(self):
        return self.surface.out_vertex(self.edges[0]) if self.edges else None

    @property
    def end(self):
        return self.surface.in_vertex(self.edges[-1]) if self.edges else None

    def reverse(self):
        return GroupoidPath(self.surface, [bar(e) for e in reversed(self.edges)])

    def __repr__(self):
        return f"GroupoidPath({'.'.join(self.edges)})"


class FormalPathSum:
    """Integer combination of edge words: [(coefficient, word)].

    Words are freely reduced (adjacent e, ~e cancel) and equal words are
    collected, so homotopically trivial contributions vanish literally.
    """

    def __init__(self, terms=()):
        collected = {}
        for c, w in terms:
            w = _free_reduce(tuple(w))
            collected[w] = collected.get(w, 0) + int(c)
        self.terms = [(c, w) for w, c in collected.items() if c != 0]

    def __len__(self):
        return len(self.terms)

    def scaled(self, factor):
        return FormalPathSum([(factor * c, w) for c, w in self.terms])

    def __repr__(self):
        if not self.terms:
            return "FormalPathSum(0)"
        bits = [f"{c:+d}[{'.'.join(w) or 'id'}]" for c, w in self.terms]
        return "FormalPathSum(" + " ".join(bits) + ")"


def _free_reduce(word):
    out = []
    for e in word:
        if out and out[-1] == bar(e):
            out.pop()
        else:
            out.append(e)
    return tuple(out)


def _strand_events(surface, path, delta):
    """Segments of the perturbed strand, one per visited vertex.

    Every event is (vertex, theta_in, theta_out, trunc_index, kind) where
    kind is 'chord' (passage), 'start' or 'end' (rays to the marked point);
    theta values are angular positions, trunc_index the number of path edges
    before the vertex.
    """
    events = []
    rot_cache = {}

    def rotation(v):
        if v not in rot_cache:
            rot_cache[v] = surface.vertex_rotation(v)
        return rot_cache[v]

    def theta(vertex, germ, arriving, occurrence):
        order, closed = rotation(vertex)
        k = order.index(germ)
        off = delta * (1.0 + 0.25 * occurrence)
        pos = k + (off if arriving else -off)
        if closed:
            return pos % len(order), len(order), True
        return pos, len(order), False

    seen = {}

    def occ(vertex, germ):
        seen[(vertex, germ)] = seen.get((vertex, germ), -1) + 1
        return seen[(vertex, germ)]

    edges = path.edges
    v0 = path.start
    g0 = edges[0]
    t, m, closed = theta(v0, g0, arriving=False, occurrence=occ(v0, g0))
    events.append((v0, None, (t, m, closed), 0, "start"))
    for i in range(len(edges) - 1):
        v = surface.in_vertex(edges[i])
        gin = bar(edges[i])
        gout = edges[i + 1]
        tin, m, closed = theta(v, gin, arriving=True, occurrence=occ(v, gin))
        tout, _, _ = theta(v, gout, arriving=False, occurrence=occ(v, gout))
        events.append((v, (tin, m, closed), (tout, m, closed), i + 1, "chord"))
    vend = path.end
    gend = bar(edges[-1])
    t, m, closed = theta(vend, gend, arriving=True, occurrence=occ(vend, gend))
    events.append((vend, (t, m, closed), None, len(edges), "end"))
    return events


def _position(theta, m, closed):
    """Planar position of an angular coordinate in the vertex model."""
    if closed:
        ang = 2 * np.pi * theta / m
    else:
        ang = np.pi * (theta + 1.0) / (m + 1.0)
    return np.array([np.cos(ang), np.sin(ang)])


def _segment(event):
    """(start_xy, end_xy) of the strand segment in the local vertex model."""
    v, ein, eout, trunc, kind = event
    if kind == "chord":
        a = _position(*ein)
        b = _position(*eout)
    elif kind == "start":
        a = np.zeros(2)
        b = _position(*eout)
    else:
        a = _position(*ein)
        b = np.zeros(2)
    return a, b


def _cross(eventA, eventB):
    """Transverse crossing of two local segments; returns sign or None.

    For two proper segments the crossing is located by exact 2x2 solves; the
    shared-origin case (both strands ending at the marked point) counts as a
    boundary crossing whenever the directions differ.
    """
    (a0, a1), (b0, b1) = _segment(eventA), _segment(eventB)
    da, db = a1 - a0, b1 - b0
    boundaryA = eventA[4] in ("start", "end")
    boundaryB = eventB[4] in ("start", "end")
    if boundaryA and boundaryB:
        # both strands meet the marked point itself: lambda = 1 crossing
        det = float(db[0] * da[1] - db[1] * da[0])
        if abs(det) < 1e-12:
            return None
        return 1, ORIENT_SIGN * np.sign(det)
    M = np.stack([da, -db], axis=1)
    det0 = np.linalg.det(M)
    if abs(det0) < 1e-12:
        return None
    st = np.linalg.solve(M, b0 - a0)
    s, t = st
    eps = 1e-9
    if eps < s < 1 - eps and eps < t < 1 - eps:
        det = float(db[0] * da[1] - db[1] * da[0])
        return 2, ORIENT_SIGN * np.sign(det)
    return None


def intersection_pairing(surface, path_a, path_b):
    """(a, b) = sum over crossings of lambda * sign * [alpha_A^{-1} beta_A]."""
    if path_a.surface is not path_b.surface:
        raise SurfaceError("paths live on different surfaces")
    ev_a = _strand_events(surface, path_a, delta=0.20)
    ev_b = _strand_events(surface, path_b, delta=0.10)
    terms = []
    for ea in ev_a:
        for eb in ev_b:
            if ea[0] != eb[0]:
                continue
            hit = _cross(ea, eb)
            if hit is None:
                continue
            lam, sign = hit
            alpha = path_a.edges[:ea[3]]
            beta = path_b.edges[:eb[3]]
            word = tuple(beta) + tuple(bar(e) for e in reversed(alpha))
            terms.append((int(lam * sign), word))
    return FormalPathSum(terms)


def pairing_terms_for_bivector(surface, path_a, path_b, dom=0):
    """Adapter: terms shaped for quasi_ham.bivector_via_intersections."""
    fps = intersection_pairing(surface, path_a, path_b)
    return [(c, (dom, w)) for c, w in fps.terms]
