"""Dev scratch: pin orientation and sign conventions numerically (not shipped)."""
import numpy as np
from quiltmod.lie_core import sl_algebra, group_exp, ad_matrix

alg = sl_algebra(2)
d = alg.dim
rng = np.random.default_rng(7)


def rand_g(scale=0.3):
    return group_exp(alg, alg.random_element(rng, scale)).value


def Ad(g):
    return ad_matrix(alg, g)


def inner(x, y):
    return float(x @ alg.metric @ y)


# ---- triangle moduli: storage (e1,e2,e3), relation g1 g2 g3 = 1 ----------
# vertices: out(e1)=A in(e2)=A; out(e2)=B in(e3)=B; out(e3)=C in(e1)=C
def triangle_point():
    g1, g2 = rand_g(), rand_g()
    g3 = np.linalg.inv(g1 @ g2)
    return [g1, g2, g3]


def triangle_tangent(gs):
    # left-trivialized (X1,X2,X3), relation Ad_{(g2 g3)^-1} X1 + Ad_{g3^-1} X2 + X3 = 0
    X1, X2 = rng.standard_normal(d), rng.standard_normal(d)
    g2, g3 = gs[1], gs[2]
    X3 = -(Ad(np.linalg.inv(g2 @ g3)) @ X1 + Ad(np.linalg.inv(g3)) @ X2)
    return [X1, X2, X3]


def omega_t(gs, X, Y, idx=(0, 1)):
    """1/2 < g_{e2}^-1 d g_{e2}, d g_{e1} g_{e1}^-1 > with wedge conv, edges idx=(e1,e2)."""
    i1, i2 = idx
    A1 = Ad(gs[i1])
    return 0.5 * (inner(X[i2], A1 @ Y[i1]) - inner(Y[i2], A1 @ X[i1]))


print("== cyclic invariance of omega_t ==")
worst = 0
for _ in range(20):
    gs = triangle_point()
    X, Y = triangle_tangent(gs), triangle_tangent(gs)
    v1 = omega_t(gs, X, Y, (0, 1))
    v2 = omega_t(gs, X, Y, (1, 2))
    v3 = omega_t(gs, X, Y, (2, 0))
    worst = max(worst, abs(v1 - v2), abs(v2 - v3))
print("cyclic residual:", worst)

# ---- splitting-formula omega on the triangle -----------------------------
# boundary graph: in(e1)=C out(e1)=A; in(e2)=A out(e2)=B; in(e3)=B out(e3)=C
IN = {0: "C", 1: "A", 2: "B"}
OUT = {0: "A", 1: "B", 2: "C"}
VERTS = ["A", "B", "C"]


def solve_dirac(gs, Y):
    """xi in g^V with  -Ad_{g_e^-1} xi_in(e) + xi_out(e) = Y_e per edge."""
    rows = []
    rhs = []
    for e in range(3):
        row = np.zeros((d, 3 * d))
        iv, ov = VERTS.index(IN[e]), VERTS.index(OUT[e])
        row[:, iv * d:(iv + 1) * d] -= Ad(np.linalg.inv(gs[e]))
        row[:, ov * d:(ov + 1) * d] += np.eye(d)
        rows.append(row)
        rhs.append(Y[e])
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    xi, res, *_ = np.linalg.lstsq(A, b, rcond=None)
    assert np.abs(A @ xi - b).max() < 1e-9, "anchor not surjective here"
    return xi.reshape(3, d)


def omega_split(gs, Y, X):
    """omega(Y, X) = sum_e 1/2 [ <Ad_g X_e, xi_in> + <X_e, xi_out> ]."""
    xi = solve_dirac(gs, Y)
    tot = 0.0
    for e in range(3):
        iv, ov = VERTS.index(IN[e]), VERTS.index(OUT[e])
        tot += 0.5 * (inner(Ad(gs[e]) @ X[e], xi[iv]) + inner(X[e], xi[ov]))
    return tot


print("== splitting form vs triangle form ==")
for _ in range(5):
    gs = triangle_point()
    X, Y = triangle_tangent(gs), triangle_tangent(gs)
    a = omega_t(gs, X, Y)
    s_yx = omega_split(gs, Y, X)
    s_xy = omega_split(gs, X, Y)
    print(f"omega_t(X,Y)={a:+.6f}  split(Y,X)={s_yx:+.6f}  split(X,Y)={s_xy:+.6f}")

# ---- moment condition (4): iota_{rho(xi)} omega --------------------------
print("== moment condition sign (with omega = omega_t) ==")


def gauge_vec(gs, xi):
    """+ convention: derivative of (h.g)_e = h_in g h_out^-1."""
    out = []
    for e in range(3):
        iv, ov = VERTS.index(IN[e]), VERTS.index(OUT[e])
        out.append(Ad(np.linalg.inv(gs[e])) @ xi[iv] - xi[ov])
    return out


def moment_rhs(gs, xi, X):
    tot = 0.0
    for e in range(3):
        iv, ov = VERTS.index(IN[e]), VERTS.index(OUT[e])
        tot += 0.5 * (inner(X[e], xi[ov]) + inner(Ad(gs[e]) @ X[e], xi[iv]))
    return tot


for _ in range(4):
    gs = triangle_point()
    X = triangle_tangent(gs)
    xi = rng.standard_normal((3, d))
    rho_plus = gauge_vec(gs, xi)
    lhs_plus = omega_t(gs, rho_plus, X)
    rho_minus = [-v for v in rho_plus]
    lhs_minus = omega_t(gs, rho_minus, X)
    print(f"omega(rho+,X)={lhs_plus:+.6f} omega(rho-,X)={lhs_minus:+.6f} rhs={moment_rhs(gs, xi, X):+.6f}")

# ---- kappa: d omega = mu^* gamma on the triangle -------------------------
print("== kappa calibration ==")


def point_from_free(free):
    g1, g2 = free
    return [g1, g2, np.linalg.inv(g1 @ g2)]


def frame_tangent(gs, which, a):
    X = [np.zeros(d), np.zeros(d), None]
    X[which] = np.eye(d)[a]
    g2, g3 = gs[1], gs[2]
    X[2] = -(Ad(np.linalg.inv(g2 @ g3)) @ X[0] + Ad(np.linalg.inv(g3)) @ X[1])
    return X


def flow(free, which, a, t):
    free = [f.copy() for f in free]
    free[which] = free[which] @ group_exp(alg, np.eye(d)[a], t).value
    return free


def omega_frame(free, u, v):
    gs = point_from_free(free)
    return omega_t(gs, frame_tangent(gs, *u), frame_tangent(gs, *v))


def domega(free, u, v, w, h=1e-5):
    # frame formula: sum of directional derivatives minus bracket corrections
    def ddir(fu, f):
        return (f(flow(free, *fu, h)) - f(flow(free, *fu, -h))) / (2 * h)

    t1 = ddir(u, lambda fr: omega_frame(fr, v, w))
    t2 = ddir(v, lambda fr: omega_frame(fr, u, w))
    t3 = ddir(w, lambda fr: omega_frame(fr, u, v))
    # bracket of left-invariant frame fields on same factor
    def brk(p, q):
        if p[0] != q[0]:
            return None
        return p[0], alg.bracket(np.eye(d)[p[1]], np.eye(d)[q[1]])

    def omega_vec(fr, p, vecpair):
        gs = point_from_free(fr)
        which, coef = vecpair
        X = [np.zeros(d), np.zeros(d), None]
        X[which] = coef
        g2, g3 = gs[1], gs[2]
        X[2] = -(Ad(np.linalg.inv(g2 @ g3)) @ X[0] + Ad(np.linalg.inv(g3)) @ X[1])
        return omega_t(gs, X, frame_tangent(gs, *p))

    c1 = brk(u, v)
    c2 = brk(u, w)
    c3 = brk(v, w)
    b1 = -omega_vec(free, w, c1) if c1 else 0.0
    b2 = +omega_vec(free, v, c2) if c2 else 0.0
    b3 = -omega_vec(free, u, c3) if c3 else 0.0
    return t1 - t2 + t3 + b1 + b2 + b3


def gamma_sum(free, u, v, w):
    gs = point_from_free(free)
    U, V, W = frame_tangent(gs, *u), frame_tangent(gs, *v), frame_tangent(gs, *w)
    return sum(inner(alg.bracket(U[e], V[e]), W[e]) for e in range(3))


rat = []
for _ in range(12):
    free = [rand_g(), rand_g()]
    u = (rng.integers(2), rng.integers(d))
    v = (rng.integers(2), rng.integers(d))
    w = (rng.integers(2), rng.integers(d))
    dv = domega(free, u, v, w)
    gv = gamma_sum(free, u, v, w)
    if abs(gv) > 1e-6:
        rat.append(dv / gv)
rat = np.array(rat)
print("kappa ratios:", rat)
print("kappa mean:", rat.mean(), "spread:", rat.ptp() if hasattr(rat, 'ptp') else np.ptp(rat))
