"""Combinatorial marked surfaces: cell complexes, boundary graphs and surgeries.

A surface is a 2-complex given by faces (cyclic tuples of oriented edges in
traversal order); vertices are derived from the corner-gluing rule, never
stored.  Edge labels are strings; the reversal of edge "a" is written "~a".
No embedding coordinates exist anywhere: everything downstream works with
holonomies.
"""

from __future__ import annotations

import json
from collections import Counter

SurfaceError = type("SurfaceError", (ValueError,), {})


def bar(e: str) -> str:
    return e[1:] if e.startswith("~") else "~" + e


def is_positive(e: str) -> bool:
    return not e.startswith("~")


def positive(e: str) -> str:
    return e[1:] if e.startswith("~") else e


class Surface:
    """Oriented 2-complex with faces listed in boundary-traversal order.

    Faces may have any length >= 2 (bigons occur after surgeries); a
    *triangulation* is a surface all of whose faces are triangles.  Each
    oriented edge lies in at most one face, and an edge is *interior* when
    both of its orientations do.
    """

    def __init__(self, faces, extra_edges=(), name="surface"):
        self.name = name
        self.faces = [tuple(f) for f in faces]
        self.edges = set()
        for f in self.faces:
            if len(f) < 2:
                raise SurfaceError(f"{name}: face {f} too short")
            for e in f:
                self.edges.add(positive(e))
        self.edges.update(positive(e) for e in extra_edges)
        self._face_of = {}
        for idx, f in enumerate(self.faces):
            for pos, e in enumerate(f):
                if e in self._face_of:
                    raise SurfaceError(
                        f"{name}: oriented edge {e} lies in two faces (non-manifold)")
                self._face_of[e] = (idx, pos)
        self._build_vertices()
        self._check()

    # -- derived structure -----------------------------------------------------
    def _corner_next(self, germ):
        """Rotate a germ one corner about its base vertex (None at boundary).

        For a face (..., f_{i-1}, f_i, ...) the corner at the base of f_i
        consists of the departing germ f_i and the arriving germ ~f_{i-1}.
        """
        hit = self._face_of.get(germ)
        if hit is None:
            return None
        idx, pos = hit
        f = self.faces[idx]
        return bar(f[(pos - 1) % len(f)])

    def _build_vertices(self):
        germs = set()
        for e in self.edges:
            germs.add(e)
            germs.add(bar(e))
        # union-find over the corner map
        parent = {g: g for g in germs}

        def find(g):
            while parent[g] != g:
                parent[g] = parent[parent[g]]
                g = parent[g]
            return g

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb

        for g in germs:
            nxt = self._corner_next(g)
            if nxt is not None:
                union(g, nxt)
        classes = {}
        for g in sorted(germs):
            classes.setdefault(find(g), []).append(g)
        self._germ_vertex = {}
        self.vertices = []
        for i, (_, members) in enumerate(sorted(classes.items())):
            vid = f"v{i}"
            self.vertices.append(vid)
            for g in members:
                self._germ_vertex[g] = vid
        # canonical vertex naming independent of union-find internals
        rename = {}
        for f in self.faces:
            for e in f:
                for g in (e, bar(e)):
                    v = self._germ_vertex[g]
                    if v not in rename:
                        rename[v] = f"v{len(rename)}"
        for e in sorted(self.edges):
            for g in (e, bar(e)):
                v = self._germ_vertex[g]
                if v not in rename:
                    rename[v] = f"v{len(rename)}"
        self._germ_vertex = {g: rename[v] for g, v in self._germ_vertex.items()}
        self.vertices = sorted(set(self._germ_vertex.values()),
                               key=lambda s: int(s[1:]))

    def out_vertex(self, e):
        """Vertex at the tail of the oriented edge (its base as a germ)."""
        return self._germ_vertex[e]

    def in_vertex(self, e):
        """Vertex at the head of the oriented edge."""
        return self._germ_vertex[bar(e)]

    def boundary_edges(self):
        """Oriented boundary edges, carrying the face-side orientation."""
        return [e for e in sorted(self._face_of)
                if bar(e) not in self._face_of]

    def interior_positive_edges(self):
        return [e for e in sorted(self.edges)
                if e in self._face_of and bar(e) in self._face_of]

    def is_triangulated(self):
        return all(len(f) == 3 for f in self.faces)

    def euler_characteristic(self):
        return len(self.vertices) - len(self.edges) + len(self.faces)

    def boundary_vertices(self):
        return sorted({self.out_vertex(e) for e in self.boundary_edges()}
                      | {self.in_vertex(e) for e in self.boundary_edges()})

    def interior_vertices(self):
        bnd = set(self.boundary_vertices())
        return [v for v in self.vertices if v not in bnd]

    def boundary_circles(self):
        """Boundary edges grouped into circles, each in traversal order."""
        nxt = {}
        for e in self.boundary_edges():
            nxt[self.out_vertex(e)] = e
        circles = []
        seen = set()
        for e in self.boundary_edges():
            if e in seen:
                continue
            circle = []
            cur = e
            while cur not in seen:
                seen.add(cur)
                circle.append(cur)
                cur = nxt[self.in_vertex(cur)]
            circles.append(circle)
        return circles

    def vertex_rotation(self, v):
        """Germs at v in corner order; (germs, closed) with closed=False at boundary."""
        germs = [g for g, w in self._germ_vertex.items() if w == v]
        succ = {}
        for g in germs:
            n = self._corner_next(g)
            if n is not None:
                succ[g] = n
        preds = set(succ.values())
        starts = [g for g in germs if g not in preds]
        if not starts:  # interior vertex: a single cycle
            cur = sorted(germs)[0]
            order = [cur]
            while True:
                cur = succ[cur]
                if cur == order[0]:
                    break
                order.append(cur)
            if len(order) != len(germs):
                raise SurfaceError(f"{self.name}: vertex {v} link is not a circle")
            return order, True
        if len(starts) != 1:
            raise SurfaceError(f"{self.name}: vertex {v} link is not connected")
        cur = starts[0]
        order = [cur]
        while cur in succ:
            cur = succ[cur]
            order.append(cur)
        if len(order) != len(germs):
            raise SurfaceError(f"{self.name}: vertex {v} link is not an interval")
        return order, False

    def _check(self):
        for e in self.edges:
            if e not in self._face_of and bar(e) not in self._face_of:
                raise SurfaceError(f"{self.name}: edge {e} lies in no face")
        for f in self.faces:
            for i, e in enumerate(f):
                nxt = f[(i + 1) % len(f)]
                if self.in_vertex(e) != self.out_vertex(nxt):
                    raise SurfaceError(
                        f"{self.name}: face {f} is not head-to-tail at {e}->{nxt}")
        for v in self.vertices:
            self.vertex_rotation(v)

    # -- serialization ----------------------------------------------------------
    def canonical_form(self):
        """Canonical serialization, invariant under edge/face relabelings.

        Cells are renamed by a breadth-first walk from every possible starting
        flag and the lexicographically least encoding is returned, so two
        isomorphic surfaces serialize identically (surfaces in scope are small).
        """
        best = None
        for f0 in range(len(self.faces)):
            for rot in range(len(self.faces[f0])):
                enc = self._encode_from(f0, rot)
                if best is None or enc < best:
                    best = enc
        return best if best is not None else "[]"

    def _encode_from(self, f0, rot):
        order = {}

        def code(e):
            p, neg = positive(e), not is_positive(e)
            if p not in order:
                order[p] = len(order)
            return ("~" if neg else "") + f"E{order[p]}"

        queue = [tuple(self.faces[f0][rot:] + self.faces[f0][:rot])]
        seen_faces = {f0}
        encoded = []
        while queue:
            face = queue.pop(0)
            encoded.append([code(e) for e in face])
            for e in face:
                hit = self._face_of.get(bar(e))
                if hit and hit[0] not in seen_faces:
                    seen_faces.add(hit[0])
                    idx, pos = hit
                    f = self.faces[idx]
                    queue.append(tuple(f[pos:] + f[:pos]))
        for idx in range(len(self.faces)):
            if idx not in seen_faces:
                # disconnected pieces appended in canonical order of their own
                encoded.append(["#"])
                encoded.append([code(e) for e in self.faces[idx]])
                seen_faces.add(idx)
        return json.dumps(encoded)

    def is_isomorphic(self, other):
        return self.canonical_form() == other.canonical_form()

    def __repr__(self):
        return (f"Surface({self.name}: V={len(self.vertices)} "
                f"E={len(self.edges)} F={len(self.faces)} "
                f"chi={self.euler_characteristic()})")


# ---------------------------------------------------------------------------
# constructions
# ---------------------------------------------------------------------------

def polygon(n, prefix="e", name=None):
    """Disk with n boundary edges e1..en and holonomy relation g_e1...g_en = 1.

    The face is stored in traversal order (~prefix order), so the moduli
    relation in path-composition order reads g_{e1} g_{e2} ... g_{en} = 1.
    For n >= 3 the face is fan-triangulated on the fly by `triangulate`.
    """
    labels = [f"{prefix}{i + 1}" for i in range(n)]
    face = tuple(reversed(labels))
    return Surface([face], name=name or f"P{n}")


def triangulate(surface, diag_prefix="d"):
    """Fan-triangulate every face of length > 3; bigons are left alone.

    Returns (new_surface, diagonal_words) where diagonal_words maps each new
    diagonal edge to the word of original edges (traversal order) it is
    homotopic to, so holonomies extend canonically.
    """
    faces = []
    words = {}
    count = 0
    for f in surface.faces:
        if len(f) <= 3:
            faces.append(f)
            continue
        rest = list(f)
        while len(rest) > 3:
            count += 1
            d = f"{diag_prefix}{count}"
            while d in surface.edges or d in words:
                count += 1
                d = f"{diag_prefix}{count}"
            # corner (rest[0], rest[1]) cut off by the diagonal
            faces.append((rest[0], rest[1], bar(d)))
            words[d] = (rest[0], rest[1])
            rest = [d] + rest[2:]
        faces.append(tuple(rest))
    return Surface(faces, name=surface.name + ".tri"), words


def pachner_flip(surface, interior_edge):
    """Flip the diagonal of the quadrilateral formed by the two triangles
    adjacent to `interior_edge`.

    Returns (new_surface, new_edge, transport) where transport maps the new
    diagonal to the word of old edges (traversal order) determining its
    holonomy.
    """
    d = interior_edge
    if d not in surface._face_of or bar(d) not in surface._face_of:
        raise SurfaceError(f"{d} is not interior")
    i1, p1 = surface._face_of[d]
    i2, p2 = surface._face_of[bar(d)]
    if i1 == i2:
        raise SurfaceError(f"{d}: both sides in one face, cannot flip")
    t1, t2 = surface.faces[i1], surface.faces[i2]
    if len(t1) != 3 or len(t2) != 3:
        raise SurfaceError("flip needs two triangles")
    shared = {positive(e) for e in t1} & {positive(e) for e in t2}
    if shared != {positive(d)}:
        raise SurfaceError("triangles share more than one edge")
    # rotate so t1 = (p, q, d), t2 = (~d, r, s); quad boundary p,q,r,s
    t1 = t1[(p1 + 1) % 3:] + t1[:(p1 + 1) % 3]
    t2 = t2[p2:] + t2[:p2]
    p, q = t1[0], t1[1]
    r, s = t2[1], t2[2]
    base = positive(d) + "f"
    new = base
    k = 0
    while new in surface.edges:
        k += 1
        new = f"{base}{k}"
    faces = [f for j, f in enumerate(surface.faces) if j not in (i1, i2)]
    faces.append((q, r, bar(new)))
    faces.append((s, p, new))
    out = Surface(faces, name=surface.name)
    # new diagonal is homotopic to the path (q, r): runs tail(q) -> head(r)
    return out, new, {new: (q, r)}


def sew(surface, e1, e2):
    """Identify boundary edges e1 and e2 with opposite orientation.

    The label e2 disappears; every face occurrence of e2 becomes ~e1 (and of
    ~e2 becomes e1).  Holonomy level set: g_{e2} = g_{e1}^{-1}.
    """
    bnd = set(surface.boundary_edges())
    if e1 == e2:
        raise SurfaceError("self-sewing an edge to itself is unsupported")
    if e1 not in bnd or e2 not in bnd:
        raise SurfaceError("sew needs two boundary edges (face-side orientation)")
    sub = {e2: bar(e1), bar(e2): e1}
    faces = [tuple(sub.get(e, e) for e in f) for f in surface.faces]
    return Surface(faces, name=f"{surface.name}/sew({e1},{e2})")


def disjoint_union(a, b, name=None):
    clash = a.edges & b.edges
    if clash:
        raise SurfaceError(f"edge labels clash: {sorted(clash)[:4]}")
    return Surface(a.faces + b.faces, name=name or f"{a.name}+{b.name}")


def annulus(n_outer, n_inner, prefix="", name=None):
    """Annulus with marked boundaries: n_outer/n_inner arcs per circle.

    Outer arcs are o1..o_{n_outer}, inner arcs i1..i_{n_inner}; connector
    edges c* join the circles.  All vertices lie on the boundary.
    """
    if n_outer < 1 or n_inner < 1:
        raise SurfaceError("need at least one marked point per circle")
    o = [f"{prefix}o{k + 1}" for k in range(n_outer)]
    i = [f"{prefix}i{k + 1}" for k in range(n_inner)]
    # cut the annulus along one connector: the result is a disk whose boundary
    # word is  o1 ... o_n  c  i_m ... i_1  ~c  (traversal order); both circles
    # then carry the boundary orientation on positive labels.
    c = f"{prefix}c0"
    word = list(o) + [c] + list(reversed(i)) + [bar(c)]
    disk = Surface([tuple(word)], name="cut")
    tri, _ = triangulate(disk, diag_prefix=f"{prefix}c")
    return Surface(tri.faces, name=name or f"annulus({n_outer},{n_inner})")


def torus(name="torus"):
    """Closed torus: one vertex, three edges, two triangles (square a b ~a ~b)."""
    return Surface([("a", "b", bar("d")), ("d", bar("a"), bar("b"))], name=name)


def sphere(name="sphere"):
    """Closed sphere from two triangles glued along all three edges."""
    return Surface([("a", "b", "c"), (bar("a"), bar("c"), bar("b"))],
                   name=name)


# ---------------------------------------------------------------------------
# marked surfaces and boundary graphs
# ---------------------------------------------------------------------------

class BoundaryGraph:
    """Permutation graph of boundary arcs between marked points.

    Each graph edge carries the word of surface boundary edges composing it
    (traversal order), so holonomies survive fusion surgeries.
    """

    def __init__(self, edges, vertices):
        # edges: {label: (out_vertex, in_vertex, word)}
        self.edges = dict(edges)
        self.vertices = list(vertices)
        outs = [v for v, _, _ in self.edges.values()]
        ins = [v for _, v, _ in self.edges.values()]
        if (sorted(outs) != sorted(self.vertices)
                or sorted(ins) != sorted(self.vertices)):
            raise SurfaceError("boundary graph is not a permutation graph")

    def out_vertex(self, e):
        return self.edges[e][0]

    def in_vertex(self, e):
        return self.edges[e][1]

    def word(self, e):
        return self.edges[e][2]

    def sigma(self):
        """Permutation of vertices induced by walking along the edges."""
        return {self.out_vertex(e): self.in_vertex(e) for e in self.edges}

    def edge_into(self, v):
        for e in self.edges:
            if self.in_vertex(e) == v:
                return e
        raise KeyError(v)

    def edge_leaving(self, v):
        for e in self.edges:
            if self.out_vertex(e) == v:
                return e
        raise KeyError(v)

    def __repr__(self):
        return f"BoundaryGraph(E={sorted(self.edges)}, V={sorted(self.vertices)})"


class MarkedSurface:
    """Surface together with a choice of marked boundary vertices.

    By default every boundary vertex of the complex is marked.  Vertices in
    `unmarked` are excluded from V: boundary arcs then run between marked
    points (words of several surface edges), and boundary circles carrying no
    marked point at all produce no graph edges and are flagged.

    `strict` follows the 2-form pipeline and requires every component and
    every boundary circle to meet V; the bivector pipeline (strict=False)
    permits unmarked circles.
    """

    def __init__(self, surface: Surface, strict=True, unmarked=(), name=None):
        self.surface = surface
        self.name = name or surface.name
        self.unmarked = set(unmarked)
        bad = self.unmarked - set(surface.boundary_vertices())
        if bad:
            raise SurfaceError(f"{self.name}: unmarked {sorted(bad)} not on boundary")
        self.marked = [v for v in surface.boundary_vertices()
                       if v not in self.unmarked]
        self.unmarked_circles = []
        edges = {}
        for circle in surface.boundary_circles():
            anchors = [k for k, e in enumerate(circle)
                       if surface.out_vertex(e) in set(self.marked)]
            if not anchors:
                self.unmarked_circles.append(tuple(circle))
                continue
            m = len(circle)
            for j, k in enumerate(anchors):
                k_next = anchors[(j + 1) % len(anchors)]
                span = (k_next - k) % m or m
                word = tuple(circle[(k + t) % m] for t in range(span))
                label = word[0] if len(word) == 1 else "+".join(word)
                edges[label] = (surface.out_vertex(word[0]),
                                surface.in_vertex(word[-1]), word)
        comps = _components(surface)
        closed = [c for c in comps
                  if not any(positive(e) in c for e in surface.boundary_edges())]
        self.closed_components = len(closed)
        if strict:
            if self.unmarked_circles:
                raise SurfaceError(
                    f"{self.name}: boundary circle without marked point")
            if closed:
                raise SurfaceError(f"{self.name}: closed component has no marked point")
        self.graph = BoundaryGraph(edges, self.marked)

    def euler_characteristic(self):
        return self.surface.euler_characteristic()

    def genus_summary(self):
        chi = self.euler_characteristic()
        b = len(self.surface.boundary_circles())
        # chi = 2 - 2g - b for a connected surface
        return {"euler": chi, "boundary_circles": b,
                "genus_if_connected": (2 - chi - b) / 2}

    def __repr__(self):
        return f"MarkedSurface({self.surface!r}, marked={self.marked})"


def _components(surface):
    adj = {}
    for f in surface.faces:
        for a in f:
            for b in f:
                adj.setdefault(positive(a), set()).add(positive(b))
    comps = []
    seen = set()
    for e in sorted(surface.edges):
        if e in seen:
            continue
        comp = set()
        stack = [e]
        while stack:
            x = stack.pop()
            if x in comp:
                continue
            comp.add(x)
            stack.extend(adj.get(x, ()))
        seen |= comp
        comps.append(comp)
    return comps


def build_marked_surface(faces, strict=True, name="surface"):
    """Construct and validate a marked surface from raw face data."""
    return MarkedSurface(Surface(faces, name=name), strict=strict)


def fuse_boundary_graph(graph: BoundaryGraph, P, Q):
    """Boundary-graph surgery for fusing marked points P and Q (ordered).

    Case 1 (the edge leaving P enters Q): that edge is deleted.
    Case 2: the edge entering Q is composed with the edge leaving P.
    Returns (new_graph, merged_vertex_name, case).
    """
    if P == Q:
        raise SurfaceError("fusion needs distinct marked points")
    e_leave_P = graph.edge_leaving(P)
    e_enter_Q = graph.edge_into(Q)
    merged = f"{P}*{Q}"
    rename = {P: merged, Q: merged}

    def rn(v):
        return rename.get(v, v)

    if e_leave_P == e_enter_Q:
        edges = {lbl: (rn(o), rn(i), w) for lbl, (o, i, w) in graph.edges.items()
                 if lbl != e_leave_P}
        verts = [rn(v) for v in graph.vertices if v != Q]
        verts = list(dict.fromkeys(verts))
        # drop the merged vertex if it became isolated
        used = {o for o, _, _ in edges.values()} | {i for _, i, _ in edges.values()}
        verts = [v for v in verts if v in used]
        return BoundaryGraph(edges, verts), merged, 1
    new_label = f"{e_enter_Q}*{e_leave_P}"
    oQ, _, wQ = graph.edges[e_enter_Q]
    _, iP, wP = graph.edges[e_leave_P]
    edges = {}
    for lbl, (o, i, w) in graph.edges.items():
        if lbl in (e_leave_P, e_enter_Q):
            continue
        edges[lbl] = (rn(o), rn(i), w)
    # traversal order: the arc entering Q first, then the arc leaving P
    edges[new_label] = (rn(oQ), rn(iP), tuple(wQ) + tuple(wP))
    verts = list(dict.fromkeys(rn(v) for v in graph.vertices))
    return BoundaryGraph(edges, verts), merged, 2


class FusedMarkedSurface:
    """Marked surface with an iterated fusion overlay.

    The underlying cell complex and its moduli space are unchanged; only the
    marked-point partition and boundary graph are transformed.  The moduli
    identification M(fused) -> M(original) is the identity on holonomies.
    """

    def __init__(self, base: MarkedSurface, graph=None, partition=None,
                 name=None):
        self.base = base
        self.surface = base.surface
        self.graph = graph if graph is not None else base.graph
        # partition maps original marked point -> fused class name
        self.partition = dict(partition) if partition else \
            {v: v for v in base.marked}
        self.name = name or base.name

    @property
    def marked(self):
        return sorted(set(self.partition.values()))

    def fuse(self, P, Q):
        """Fuse ordered pair of fused-classes (P, Q)."""
        graph, merged, case = fuse_boundary_graph(self.graph, P, Q)
        partition = {v: (merged if c in (P, Q) else c)
                     for v, c in self.partition.items()}
        out = FusedMarkedSurface(self.base, graph, partition,
                                 name=f"{self.name}*({P},{Q})")
        out.last_case = case
        return out


def fuse_surface(ms, P, Q):
    """Fusion of two marked points of a marked surface (ordered pair)."""
    if isinstance(ms, MarkedSurface):
        ms = FusedMarkedSurface(ms)
    return ms.fuse(P, Q)
