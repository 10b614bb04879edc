"""helmlab: convergence, pollution, hp, symbol and filter studies on the unit disk."""
import argparse
import json
import math
import os
import sys
from dataclasses import replace

import numpy as np

from . import boundary, fem, filters, study
from .mesh import export_mesh, generate_disk_mesh

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return tuple(out)


def load_config(path):
    """StudyConfig from a TOML file (or defaults when ``path`` is None)."""
    if path is None:
        return study.StudyConfig()
    with open(path, "rb") as fh:
        return study.StudyConfig.from_dict(tomllib.load(fh))


def _apply_flags(cfg, args):
    upd = {}
    if args.k is not None:
        upd["k"] = args.k
    if args.p is not None:
        upd["p"] = args.p
    if args.levels is not None:
        upd["levels"] = args.levels
    if args.eta is not None:
        upd["eta"] = args.eta
    if args.family is not None:
        upd["abc_family"] = args.family
    if args.cutoff is not None:
        upd["dtn_cutoff"] = args.cutoff
    if getattr(args, "example", None) is not None:
        upd["example"] = args.example
    if args.out is not None:
        upd["output"] = replace(cfg.output, out_dir=args.out)
    return replace(cfg, **upd) if upd else cfg


def _out_dir(cfg):
    os.makedirs(cfg.output.out_dir, exist_ok=True)
    return cfg.output.out_dir


def cmd_converge(cfg, args):
    out = _out_dir(cfg)
    recs = study.run_convergence(cfg)
    study.emit_csv(recs, os.path.join(out, cfg.output.csv_name))
    for p in cfg.p:
        rows = [r for r in recs if r.p == p and r.k == cfg.k[0]]
        for key, rate in (("err_l2_rel", p + 1), ("err_energy_rel", p)):
            try:
                print(f"p={p} {key} slope {study.estimate_rate(rows, key, rate):.3f} (expected {rate})")
            except ValueError as exc:
                print(f"p={p} {key} slope unavailable: {exc}")
    slope = args.ref_slope if args.ref_slope is not None else -(max(cfg.p) + 1.0)
    study.emit_svg(recs, os.path.join(out, cfg.output.svg_name), slope)
    if args.save_solutions:
        for p in cfg.p:
            for k in cfg.k:
                for lv in cfg.levels:
                    _, space, uh, _ = study.solve_case(cfg.example, p, lv, k, cfg, keep=True)
                    if uh is not None:
                        name = f"solution_{cfg.example}_p{p}_L{lv}_k{k:g}.csv"
                        fem.write_solution_csv(uh, os.path.join(out, name))
    for r in recs:
        if r.error:
            print(f"failed p={r.p} level={r.level} k={r.k}: {r.error}", file=sys.stderr)
    return 0


def cmd_pollution(cfg, args):
    out = _out_dir(cfg)
    if args.n_lambda is not None:
        cfg = replace(cfg, pollution=replace(cfg.pollution, n_lambda_target=args.n_lambda))
    res = study.run_pollution(cfg)
    study.emit_csv(res.records, os.path.join(out, cfg.output.csv_name))
    with open(os.path.join(out, "growth.json"), "w") as fh:
        json.dump({str(p): g for p, g in res.growth.items()}, fh, indent=2, sort_keys=True)
    for p, g in sorted(res.growth.items()):
        print(f"p={p} growth factor ({res.key}) {g:.4f}")
    return 0


def cmd_hpstudy(cfg, args):
    out = _out_dir(cfg)
    hp = cfg.hp
    if args.c1 is not None:
        hp = replace(hp, c1=args.c1)
    if args.c2 is not None:
        hp = replace(hp, c2=args.c2)
    if args.p_fixed is not None:
        hp = replace(hp, p_fixed=args.p_fixed)
    rows = study.run_hp_study(replace(cfg, hp=hp))
    recs = [r.record for r in rows if r.record is not None]
    if recs:
        study.emit_csv(recs, os.path.join(out, cfg.output.csv_name))
    with open(os.path.join(out, "hp_ratios.csv"), "w", newline="") as fh:
        fh.write("k,p,level,err_energy_rel,best_energy_rel,ratio,skipped\n")
        for row in rows:
            r = row.record
            k = r.k if r else float("nan")
            fh.write(f"{k!r},{r.p if r else ''},{r.level if r else ''},"
                     f"{(r.err_energy_rel if r else float('nan'))!r},{row.best_energy_rel!r},"
                     f"{row.ratio!r},{row.skipped}\n")
            print(f"k={k:g} p={r.p if r else '-'} ratio={row.ratio:.4f} {row.skipped}".rstrip())
    return 0


def cmd_symbols(cfg, args):
    out = _out_dir(cfg)
    ks = cfg.k if args.k is not None else (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
    mode_max = args.modes
    if args.kind == "elastic" and mode_max is None:
        mode_max = int(math.floor(10 * max(ks)))
    rows = boundary.symbol_rows(args.kind, ks, mode_max if mode_max is not None else 200,
                                lam=args.lam, mu=args.mu)
    path = os.path.join(out, f"symbols_{args.kind}.csv")
    boundary.write_symbol_csv(rows, path)
    if args.kind == "helmholtz3d":
        rep = boundary.sphere_bound_report(mode_max if mode_max is not None else 200, ks)
        print(f"sphere bounds: {rep.violations()} violations, min slack {rep.min_slack:.3e}")
    elif args.kind == "elastic":
        for k in ks:
            lo, hi = math.ceil(2 * k), math.floor(10 * k)
            if hi >= lo:
                rep = boundary.check_elastic_symbol_bound(k, args.lam, args.mu)
                status = "PASS" if rep.passed else "FAIL"
                print(f"k={k:g} max_ratio {rep.max_ratio:.4f} bound {rep.bound:.4f} {status}")
    print(f"wrote {path}")
    return 0


def cmd_filters(cfg, args):
    out = _out_dir(cfg)
    level = cfg.levels[0] if args.levels is not None else 2
    p = cfg.p[0] if args.p is not None else 2
    k = cfg.k[0]
    eta = cfg.eta
    space = fem.build_space(generate_disk_mesh(level, study.geometry_degree(p)), p)
    dec = filters.compute_neumann_eigenpairs(space, cfg.n_inner, cfg.n_outer)
    filters.write_spectrum_csv(dec, os.path.join(out, "spectrum.csv"))
    rng = np.random.default_rng(args.seed)
    worst_split = worst_bound = 0.0
    for _ in range(args.samples):
        f = rng.standard_normal(space.n_dof) + 1j * rng.standard_normal(space.n_dof)
        lo, hi = filters.filter_split(dec, f, eta, k)
        worst_split = max(worst_split, float(np.abs(lo + hi - f).max()))
        v = filters.apply_Nk(dec, hi, k, eta)
        worst_bound = max(worst_bound, dec.m_norm(v) / filters.nk_bound(dec.m_norm(hi), k, eta))
    rep = filters.verify_norm_equivalence(dec, space)
    print(f"n_dof={space.n_dof} modes below eta*k: {filters.count_below(dec, eta * k)}")
    print(f"split defect {worst_split:.3e}; N_k bound ratio max {worst_bound:.4f} (<= 1 required)")
    print(f"norm equivalence ratios in [{rep.ratios.min():.4f}, {rep.ratios.max():.4f}], "
          f"c = {rep.c:.4f}: {'PASS' if rep.passed else 'FAIL'}")
    return 0


def cmd_mesh(cfg, args):
    if args.action != "export":
        raise SystemExit(f"unknown mesh action {args.action!r}")
    out = _out_dir(cfg)
    for lv in cfg.levels:
        path = os.path.join(out, f"mesh_L{lv}_q{args.geometry_degree}.txt")
        export_mesh(generate_disk_mesh(lv, args.geometry_degree), path)
        print(f"wrote {path}")
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML file mirroring StudyConfig fields")
    common.add_argument("--out", help="output directory")
    common.add_argument("--k", type=_floats, help="wavenumbers, comma separated")
    common.add_argument("--p", type=_ints, help="polynomial degrees, e.g. 1,2 or 1-4")
    common.add_argument("--levels", type=_ints, help="refinement levels, e.g. 1-5")
    common.add_argument("--eta", type=float, help="filter threshold factor (> 1)")
    common.add_argument("--family", choices=boundary.ABC_FAMILIES, help="second-order ABC family")
    common.add_argument("--cutoff", type=int, help="DtN truncation L")
    common.add_argument("--example", choices=study.EXAMPLES)

    parser = argparse.ArgumentParser(prog="helmlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    c = sub.add_parser("converge", parents=[common], help="h-convergence study")
    c.add_argument("--ref-slope", type=float, help="slope of the dashed reference line")
    c.add_argument("--save-solutions", action="store_true", help="write dof,re,im CSV per run")
    c.set_defaults(func=cmd_converge)
    c = sub.add_parser("pollution", parents=[common], help="errors at fixed N_lambda across k")
    c.add_argument("--n-lambda", type=float, help="target degrees of freedom per wavelength")
    c.set_defaults(func=cmd_pollution)
    c = sub.add_parser("hpstudy", parents=[common], help="quasi-optimality under kh/p <= c1")
    c.add_argument("--c1", type=float)
    c.add_argument("--c2", type=float)
    c.add_argument("--p-fixed", type=int, help="override the degree rule with a fixed p")
    c.set_defaults(func=cmd_hpstudy)
    c = sub.add_parser("symbols", parents=[common], help="DtN symbol tables")
    c.add_argument("kind", choices=("helmholtz3d", "helmholtz2d", "elastic"))
    c.add_argument("--modes", type=int, help="largest mode")
    c.add_argument("--lam", type=float, default=1.0, help="Lame lambda (elastic)")
    c.add_argument("--mu", type=float, default=1.0, help="Lame mu (elastic)")
    c.set_defaults(func=cmd_symbols)
    c = sub.add_parser("filters", parents=[common], help="spectral filter checks")
    c.add_argument("--samples", type=int, default=20)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_filters)
    c = sub.add_parser("mesh", parents=[common], help="mesh utilities")
    c.add_argument("action", choices=("export",))
    c.add_argument("--geometry-degree", type=int, default=2)
    c.set_defaults(func=cmd_mesh)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_flags(load_config(args.config), args)
    except (ValueError, OSError) as exc:
        print(f"helmlab: {exc}", file=sys.stderr)
        return 2
    return args.func(cfg, args)


if __name__ == "__main__":
    sys.exit(main())
