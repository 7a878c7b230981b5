"""Command-line front end: surface-description files in, reports out.

Commands
    build     construct the moduli structure and print dimension/rank data
    verify    run the structure checks; nonzero exit on failure
    evaluate  print omega / bivector matrices at sampled or given points
    catalog   run a named catalog entry's builder-vs-oracle check
    report    machine-readable verify (implies --json)

Exit codes: 0 all checks pass, 1 numerical check failed, 2 invalid spec,
3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import catalog as cat
from .lie_core import (Subalgebra, classify_subalgebra, gl_algebra,
                       sl_algebra, su2_realified)
from .moduli import ModuliSpace, polygon_moduli
from .quasi_ham import QuasiHamStructure, polygon_chart, verify_quasi_ham
from .reduction import (Ambient, ReductionData, ReductionError,
                        intersect_orbits, reduced_two_form, slice_at,
                        subgroup_orbit, trivial_orbit, walk_level_set)
from .surface import MarkedSurface, Surface, annulus, SurfaceError


class SpecError(ValueError):
    pass


ALGEBRA_PRESETS = {
    "double_sl2": lambda: cat.double_sl2()[0],
    "sl2": lambda: sl_algebra(2),
    "gl2": lambda: gl_algebra(2),
    "su2_realified": su2_realified,
}

ORBIT_SHAPES = {
    "diagonal_pair": cat.in_diagonal_pair,
    "dual_pair": cat.in_dual_pair,
    "full": None,
}

CATALOG_CHECKS = {
    "lu_weinstein": cat.check_lu_weinstein,
    "double_groupoid_annulus": cat.check_double_groupoid_annulus,
    "lu_yakimov_groupoid": cat.check_lu_yakimov_groupoid,
    "fission_space": cat.check_fission_space,
    "fission_form": cat.check_fission_form,
    "double_poisson_lie": cat.check_double_poisson_lie,
    "poisson_lie": cat.check_poisson_lie,
    "affine_poisson": cat.check_affine_poisson,
    "lu_yakimov_poisson": cat.check_lu_yakimov_poisson,
    "poisson_homogeneous": cat.check_poisson_homogeneous,
    "dual_group_disk": cat.check_dual_group_disk,
    "double_sphere": cat.check_double_sphere,
}


def load_spec(path):
    try:
        with open(path) as fh:
            spec = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise SpecError(f"cannot parse {path}: {err}")
    if spec.get("version") != 1:
        raise SpecError("spec version must be 1")
    return spec


def named_subalgebras(algebra, preset_name):
    out = {}
    if preset_name == "double_sl2":
        g, e_sub, f_sub = cat.double_sl2()
        out["g_diag"] = Subalgebra(algebra, e_sub.span, "g_diag")
        out["h_std"] = Subalgebra(algebra, f_sub.span, "h_std")
        out["b+sl2"] = cat.lu_yakimov_coisotropic(algebra)
    return out


def build_structure(spec):
    alg_cfg = spec.get("algebra", {})
    preset = alg_cfg.get("preset")
    if preset not in ALGEBRA_PRESETS:
        raise SpecError(f"unknown algebra preset {preset!r}")
    algebra = ALGEBRA_PRESETS[preset]()
    if "metric_scale" in alg_cfg:
        algebra.metric = algebra.metric * float(alg_cfg["metric_scale"])

    surf_cfg = spec.get("surface", {})
    if "polygon" in surf_cfg:
        space = polygon_moduli(int(surf_cfg["polygon"]), algebra)
    elif "annulus" in surf_cfg:
        m, n = surf_cfg["annulus"]
        surf = annulus(int(m), int(n))
        space = ModuliSpace([(MarkedSurface(surf), algebra)])
    elif "faces" in surf_cfg:
        try:
            surf = Surface([tuple(f) for f in surf_cfg["faces"]])
        except SurfaceError as err:
            raise SpecError(str(err))
        space = ModuliSpace([(MarkedSurface(surf,
                                            strict=surf_cfg.get("strict", True)),
                              algebra)])
    else:
        raise SpecError("surface must give polygon, annulus or faces")

    st = QuasiHamStructure(space, name=spec.get("name", "structure"))
    amb = Ambient(space)
    st.ambient = amb
    names = named_subalgebras(algebra, preset)

    rows = []
    orbits = []
    coloured = set()
    for entry in spec.get("colourings", []):
        sub_name = entry.get("subalgebra")
        if isinstance(sub_name, list):
            try:
                sub = Subalgebra(algebra, np.array(sub_name, dtype=float), "raw")
            except Exception as err:
                raise SpecError(f"raw span rejected: {err}")
        elif sub_name in names:
            sub = names[sub_name]
        else:
            raise SpecError(f"unknown subalgebra {sub_name!r}")
        kind = classify_subalgebra(sub, involution=algebra.involution)
        if kind not in ("coisotropic", "lagrangian", "symmetric_lagrangian"):
            raise SpecError(
                f"colouring of {entry.get('edges')} by {sub_name} is not "
                f"coisotropic (classified {kind})")
        shape = entry.get("orbit")
        if shape not in ORBIT_SHAPES:
            raise SpecError(f"unknown orbit shape {shape!r}")
        for edge in entry["edges"]:
            key = (0, edge)
            if key not in [k for k in st.space.graph_edges()]:
                raise SpecError(f"colouring names unknown boundary edge {edge!r}")
            rows.append(amb.pair_colouring_span(key, sub))
            coloured.add(key)
            if ORBIT_SHAPES[shape] is not None:
                orbits.append(subgroup_orbit(key, ORBIT_SHAPES[shape]))
    uncoloured = [k for k in st.space.graph_edges() if k not in coloured]
    if uncoloured:
        rows.append(amb.full_edges_span(uncoloured))
    c = amb.subalgebra(np.vstack(rows) if rows else np.eye(amb.dim), "c_spec")
    orbit = intersect_orbits(*orbits) if orbits else trivial_orbit()
    rdata = ReductionData(amb, c, orbit, name="spec")
    return {"structure": st, "space": space, "rdata": rdata, "orbit": orbit,
            "algebra": algebra, "has_colourings": bool(coloured)}


def fmt_float(x):
    return f"{float(x):.6e}"


def run_verify(spec, seed, samples):
    data = build_structure(spec)
    st, space = data["structure"], data["space"]
    rng = np.random.default_rng(seed)
    report = {"name": spec.get("name", "structure"), "seed": seed,
              "samples": samples, "checks": {}}
    failures = 0

    chart = None
    if "polygon" in spec.get("surface", {}):
        chart = polygon_chart(space)
    base = verify_quasi_ham(st, n_samples=min(samples, 8), seed=seed,
                            chart=chart, d_omega_triples=2)
    report["checks"]["axioms"] = {
        "equivariance": fmt_float(base["equivariance"]),
        "moment_identity": fmt_float(base["moment_identity"]),
        "kernel_rank_violations": base["kernel_rank_violations"],
        "d_omega_vs_gamma": (fmt_float(base["d_omega_vs_gamma"])
                             if base["d_omega_vs_gamma"] is not None else None),
        "pass": bool(base["pass"]),
    }
    if not base["pass"]:
        failures += 1

    if data["has_colourings"]:
        worst_rank_gap = 0
        conds = []
        for _ in range(min(samples, 5)):
            p = walk_level_set(st, data["orbit"], space.identity_point(),
                               rng, steps=3, step_size=0.35)
            slice_rows, _, _ = slice_at(st, data["rdata"], p)
            mat, info = reduced_two_form(st, data["rdata"], p,
                                         slice_rows=slice_rows)
            worst_rank_gap = max(worst_rank_gap, info["dim"] - info["rank"])
            if info["rank"]:
                conds.append(float(np.linalg.cond(mat)))
        ok = worst_rank_gap == 0
        report["checks"]["reduced_form"] = {
            "rank_gap": int(worst_rank_gap),
            "condition_numbers": [fmt_float(c) for c in sorted(conds)],
            "pass": bool(ok),
        }
        if not ok:
            failures += 1
    report["pass"] = failures == 0
    return report, (0 if failures == 0 else 1)


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def main(argv=None):
    parser = argparse.ArgumentParser(prog="quiltmod", description=__doc__)
    parser.add_argument("command",
                        choices=["build", "verify", "evaluate", "catalog",
                                 "report"])
    parser.add_argument("file", nargs="?", help="surface description file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--samples", type=int, default=None)
    parser.add_argument("--tolerance-scale", type=float, default=1.0)
    parser.add_argument("--json", action="store_true")
    parser.add_argument("--entry", help="catalog entry name")
    parser.add_argument("--point", default=None,
                        help="evaluate at 'identity' or a point JSON file")
    args = parser.parse_args(argv)

    try:
        if args.command == "catalog":
            name = args.entry or args.file
            if name not in CATALOG_CHECKS:
                print(f"unknown catalog entry {name!r}; available: "
                      f"{sorted(CATALOG_CHECKS)}", file=sys.stderr)
                return 2
            rng = np.random.default_rng(args.seed or 0)
            result = CATALOG_CHECKS[name](rng)
            printable = {k: (fmt_float(v) if isinstance(v, (float, np.floating))
                             else v) for k, v in result.items()}
            residuals = [float(v) for k, v in result.items()
                         if isinstance(v, (float, np.floating))
                         and k.endswith(("residual", "agreement", "exact"))]
            ok = all(r < 1e-8 * args.tolerance_scale for r in residuals)
            out = {"entry": name, "result": printable, "pass": bool(ok)}
            print(canonical_json(out) if args.json else
                  f"catalog {name}: {'PASS' if ok else 'FAIL'} {printable}")
            return 0 if ok else 1

        if not args.file:
            print("a surface description file is required", file=sys.stderr)
            return 2
        spec = load_spec(args.file)
        seed = args.seed if args.seed is not None else int(spec.get("seed", 0))
        samples = (args.samples if args.samples is not None
                   else int(spec.get("samples", 20)))

        if args.command == "build":
            data = build_structure(spec)
            space = data["space"]
            rng = np.random.default_rng(seed)
            p = space.random_point(rng)
            basis, rep = space.tangent_basis(p, report=True)
            out = {
                "name": spec.get("name", "structure"),
                "edges": len(space.pos_edges),
                "faces": len(space.faces),
                "boundary_arcs": len(space.graph_edges()),
                "tangent_dim": rep["dim"],
                "rank_deficient": rep["rank_deficient"],
                "residual_gauge_dim": data["rdata"].residual_dimension(),
            }
            print(canonical_json(out) if args.json else
                  "\n".join(f"{k}: {v}" for k, v in out.items()))
            return 0

        if args.command in ("verify", "report"):
            report, code = run_verify(spec, seed, samples)
            as_json = args.json or args.command == "report"
            if as_json:
                sys.stdout.write(canonical_json(report))
            else:
                for name, chk in report["checks"].items():
                    status = "PASS" if chk.get("pass") else "FAIL"
                    print(f"{name}: {status} "
                          + " ".join(f"{k}={v}" for k, v in chk.items()
                                     if k != "pass"))
                print("overall:", "PASS" if report["pass"] else "FAIL")
            return code

        if args.command == "evaluate":
            data = build_structure(spec)
            space = data["space"]
            st = data["structure"]
            rng = np.random.default_rng(seed)
            if args.point == "identity":
                p = space.identity_point()
            else:
                p = space.random_point(rng)
            basis = space.tangent_basis(p)
            m = len(basis)
            omega = np.zeros((m, m))
            for i in range(m):
                for j in range(i + 1, m):
                    omega[i, j] = st.omega(p, basis[i], basis[j])
                    omega[j, i] = -omega[i, j]
            pi_mat = st.pi(p).matrix(np.stack([b.coords() for b in basis]))
            out = {"tangent_dim": m,
                   "omega": [[fmt_float(x) for x in row] for row in omega],
                   "bivector": [[fmt_float(x) for x in row] for row in pi_mat]}
            print(canonical_json(out) if args.json else
                  f"omega:\n{np.round(omega, 9)}\nbivector:\n{np.round(pi_mat, 9)}")
            return 0
    except SpecError as err:
        print(f"invalid spec: {err}", file=sys.stderr)
        return 2
    except ReductionError as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return 3
    return 2


if __name__ == "__main__":
    sys.exit(main())
