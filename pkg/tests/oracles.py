"""Independent numerical oracles used by the test suite.

Nothing here imports the evaluators it checks: the exterior derivative is
chart-based central differencing, and the crossing counter works on dense
polylines in explicit planar realizations of the complexes.
"""

import numpy as np


# ---------------------------------------------------------------------------
# geometric intersection oracle
# ---------------------------------------------------------------------------

class PlanarComplex:
    """Planar realization: a polyline per oriented edge (tail to head).

    Faces must be drawn counterclockwise (positive signed area) so the
    rightward push matches the combinatorial corner order.
    """

    def __init__(self, surface, edge_polylines, samples_per_edge=220):
        self.surface = surface
        self.lines = {}
        for e, pts in edge_polylines.items():
            pts = np.asarray(pts, dtype=float)
            self.lines[e] = _densify(pts, samples_per_edge)
            self.lines["~" + e] = self.lines[e][::-1].copy()

    def face_area(self, face):
        pts = np.vstack([self.lines[e][:-1] for e in face])
        x, y = pts[:, 0], pts[:, 1]
        return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)

    def unperturbed(self, path_edges):
        pts = [self.lines[path_edges[0]][0]]
        for e in path_edges:
            pts.extend(self.lines[e][1:])
        return np.asarray(pts)

    def strand(self, path_edges, delta, ramp=0.12):
        """Dense polyline of the path pushed right of travel by delta,
        pinned at its endpoints; also the fractional edge position per
        sample (edge index plus progress within the edge)."""
        pts = [self.lines[path_edges[0]][0]]
        frac = [0.0]
        for k, e in enumerate(path_edges):
            line = self.lines[e]
            m = len(line) - 1
            pts.extend(line[1:])
            frac.extend(k + (np.arange(1, m + 1) / m))
        pts = np.asarray(pts)
        frac = np.asarray(frac)
        tangents = np.gradient(pts, axis=0)
        norms = np.linalg.norm(tangents, axis=1, keepdims=True)
        tangents = tangents / np.maximum(norms, 1e-12)
        right = np.stack([tangents[:, 1], -tangents[:, 0]], axis=1)
        # arclength-based ramp so strands with different push amounts leave
        # shared endpoints at genuinely different angles
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        bump = np.minimum(1.0, np.minimum(s, s[-1] - s) / ramp)
        out = pts + delta * bump[:, None] * right
        return out, frac

    def crossings(self, path_a, path_b, delta_a=0.09, delta_b=0.045):
        """Brute-force transverse crossings of the two pushed strands.

        Truncation indices round crossings to the nearest visited vertex.
        Shared endpoints of the original paths contribute lam = 1 terms.
        """
        A, fa = self.strand(path_a, delta_a)
        B, fb = self.strand(path_b, delta_b)
        out = []
        q = B[:-1]
        s = B[1:] - B[:-1]
        for i in range(len(A) - 1):
            p, r = A[i], A[i + 1] - A[i]
            denom = _cross2(r[None, :], s)
            ok = np.abs(denom) > 1e-14
            if not ok.any():
                continue
            diff = q - p
            t = np.where(ok, _cross2(diff, s) / np.where(ok, denom, 1.0), -1)
            u = np.where(ok, _cross2(diff, np.broadcast_to(r, s.shape))
                         / np.where(ok, denom, 1.0), -1)
            hits = np.where((t > 1e-9) & (t < 1 - 1e-9)
                            & (u > 1e-9) & (u < 1 - 1e-9))[0]
            for j in hits:
                sign = np.sign(_cross2(s[j][None, :], r[None, :])[0])
                out.append((2, int(sign),
                            int(round(fa[i])), int(round(fb[j]))))
        out += self._boundary_terms(path_a, path_b, A, B)
        return out

    def _boundary_terms(self, path_a, path_b, A, B):
        ends_a = {0: A[1] - A[0], len(path_a): A[-1] - A[-2]}
        ends_b = {0: B[1] - B[0], len(path_b): B[-1] - B[-2]}
        pos_a = {0: A[0], len(path_a): A[-1]}
        pos_b = {0: B[0], len(path_b): B[-1]}
        out = []
        for ka, va in pos_a.items():
            for kb, vb in pos_b.items():
                if np.linalg.norm(va - vb) > 1e-9:
                    continue
                da = ends_a[ka] if ka == 0 else -ends_a[ka]
                db = ends_b[kb] if kb == 0 else -ends_b[kb]
                # directions pointing away from the shared marked point
                det = _cross2(db[None, :], da[None, :])[0]
                if abs(det) < 1e-12:
                    continue
                out.append((1, int(np.sign(det)), ka, kb))
        return out


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def count_polyline_crossings(A, B):
    """Transverse crossings of two explicit polylines: [(point, sign, ta, tb)]
    with ta, tb the arclength fractions along each polyline."""
    A, B = np.asarray(A, float), np.asarray(B, float)
    sa = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(A, axis=0),
                                                         axis=1))])
    sb = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(B, axis=0),
                                                         axis=1))])
    sa, sb = sa / sa[-1], sb / sb[-1]
    out = []
    q = B[:-1]
    s = B[1:] - B[:-1]
    for i in range(len(A) - 1):
        p, r = A[i], A[i + 1] - A[i]
        denom = _cross2(r[None, :], s)
        ok = np.abs(denom) > 1e-14
        if not ok.any():
            continue
        diff = q - p
        t = np.where(ok, _cross2(diff, s) / np.where(ok, denom, 1.0), -1)
        u = np.where(ok, _cross2(diff, np.broadcast_to(r, s.shape))
                     / np.where(ok, denom, 1.0), -1)
        hits = np.where((t > 1e-9) & (t < 1 - 1e-9)
                        & (u > 1e-9) & (u < 1 - 1e-9))[0]
        for j in hits:
            sign = int(np.sign(_cross2(s[j][None, :], r[None, :])[0]))
            out.append((p + t[j] * r, sign, float(sa[i]), float(sb[j])))
    return out


def endpoint_terms(A, B, n_edges_a, n_edges_b):
    """Boundary (lambda = 1) contributions where the two polylines share an
    endpoint, with signs from the outgoing direction determinants."""
    dirs_a = {0: A[1] - A[0], n_edges_a: -(A[-1] - A[-2])}
    dirs_b = {0: B[1] - B[0], n_edges_b: -(B[-1] - B[-2])}
    pos_a = {0: A[0], n_edges_a: A[-1]}
    pos_b = {0: B[0], n_edges_b: B[-1]}
    out = []
    for ka, va in pos_a.items():
        for kb, vb in pos_b.items():
            if np.linalg.norm(np.asarray(va) - np.asarray(vb)) > 1e-9:
                continue
            det = _cross2(np.asarray(dirs_b[kb])[None, :],
                          np.asarray(dirs_a[ka])[None, :])[0]
            if abs(det) < 1e-12:
                raise ValueError("tangential endpoint pair: redraw the curves")
            out.append((1, int(np.sign(det)), ka, kb))
    return out


def _densify(pts, n):
    pts = np.asarray(pts, dtype=float)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    total = seg.sum()
    stations = np.concatenate([[0.0], np.cumsum(seg)]) / total
    t = np.linspace(0.0, 1.0, n)
    out = np.zeros((n, 2))
    for k in range(2):
        out[:, k] = np.interp(t, stations, pts[:, k])
    return out


def pairing_terms_from_geometry(planar, path_a, path_b):
    """Formal-sum terms [(coeff, word)] from the geometric crossing count."""
    from quiltmod.surface import bar

    terms = []
    for lam, sign, ta, tb in planar.crossings(tuple(path_a), tuple(path_b)):
        alpha = tuple(path_a[:ta])
        beta = tuple(path_b[:tb])
        word = beta + tuple(bar(e) for e in reversed(alpha))
        terms.append((lam * sign, word))
    return terms
