"""Command-line front end.

Subcommands: jacobi, theta, layered, bco (certify / t0 / alpha1 / scan),
classify2d, argmin-shift, sweep.  Lattice specs are either preset:NAME[:p1,p2]
or a JSON object {"basis": [[...], ...]} whose rows list the generator
columns in row-major order.  CSV output starts with a provenance comment
line; floats are printed with 12 significant digits.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .bco import BcoPoint, alpha1, certify_increasing, e_tilde, k_alpha, rho_t, t0, thm14_scan
from .jacobi import jacobi_theta
from .lattice import BravaisLattice, make_preset, normalize_density
from .layered import layered_theta, preset_layered
from .theta_sum import theta
from .translation import argmin_shift_grid, classify_asymptotic_2d

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3


def fmt(x: float) -> str:
    return f"{x:.12g}"


def parse_lattice_spec(spec: str) -> BravaisLattice:
    if spec.startswith("preset:"):
        parts = spec.split(":")
        name = parts[1]
        params = [float(p) for p in parts[2].split(",")] if len(parts) > 2 else []
        return make_preset(name, params)
    obj = json.loads(spec)
    basis = np.asarray(obj["basis"], dtype=float)
    return BravaisLattice(basis.T)  # rows of the JSON are the generators


def _csv_header(out, seed: int, rtol: float) -> None:
    out.write(f"# seed={seed}, rtol={fmt(rtol)}, version={__version__}\n")


def _read_config(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    return values


def _apply_config(args: argparse.Namespace) -> None:
    if getattr(args, "config", None):
        defaults = _read_config(args.config)
        for key, val in defaults.items():
            attr = key.replace("-", "_")
            if getattr(args, attr, None) in (None, False):
                setattr(args, attr, val)


def cmd_jacobi(args) -> int:
    res = jacobi_theta(int(args.kind), float(args.x), int(args.deriv), float(args.rtol))
    payload = {"value": res.value, "abs_error": res.abs_error, "terms_used": res.terms_used}
    if args.format == "json":
        print(json.dumps(payload))
    else:
        print(f"theta_{args.kind}^({args.deriv})({fmt(float(args.x))}) = {fmt(res.value)} "
              f"+- {fmt(res.abs_error)}")
    return EXIT_OK


def cmd_theta(args) -> int:
    L = parse_lattice_spec(args.lattice)
    if args.normalize:
        L = normalize_density(L)
    shift = np.zeros(L.dim)
    if args.shift:
        shift = np.asarray([float(s) for s in args.shift.split(",")], dtype=float)
    res = theta(L, shift, float(args.alpha), float(args.rtol))
    payload = {"value": res.value, "abs_error": res.abs_error,
               "method": res.method, "points_summed": res.points_summed}
    print(json.dumps(payload))
    return EXIT_OK


def cmd_layered(args) -> int:
    seed = int(args.seed)
    rtol = float(args.rtol)
    alphas = [float(a) for a in args.alphas.split(",")]
    if args.preset != "fcc-hcp":
        print("only the fcc-hcp comparison preset is available", file=sys.stderr)
        return EXIT_USAGE
    out = sys.stdout
    _csv_header(out, seed, rtol)
    out.write("alpha,theta_fcc,theta_hcp,gap\n")
    fcc = preset_layered("fcc")
    hcp = preset_layered("hcp")

    def row(a: float) -> str:
        tf = layered_theta(fcc, a, rtol)
        th = layered_theta(hcp, a, rtol)
        from .layered import layered_theta_gap

        gap = layered_theta_gap(hcp, fcc, a, rtol)
        return f"{fmt(a)},{fmt(tf.value)},{fmt(th.value)},{fmt(gap.value)}\n"

    rows = _fanout(row, alphas, int(args.jobs))
    for r in rows:
        out.write(r)
    return EXIT_OK


def _fanout(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def cmd_bco(args) -> int:
    rtol = float(args.rtol)
    if args.bco_op == "certify":
        cert = certify_increasing(float(args.alpha), float(args.t), rtol)
        if args.format == "json":
            print(json.dumps({
                "alpha": cert.alpha, "t": cert.t, "verdict": cert.verdict,
                "k_alpha": cert.k_alpha, "reason": cert.reason,
                "steps": [[y, a, b] for y, a, b in cert.steps],
            }))
        else:
            print(f"#  K_alpha = {fmt(cert.k_alpha)}")
            print(f"{'y':>10s} {'a':>10s} {'b':>10s}")
            for y, a, b in cert.steps:
                print(f"{y:10.4f} {a:10.4f} {b:10.4f}")
            print("certified" if cert.verdict == "certified_increasing"
                  else f"inconclusive: {cert.reason}")
        return EXIT_OK if cert.verdict == "certified_increasing" else EXIT_INCONCLUSIVE
    if args.bco_op == "alpha1":
        a1 = alpha1(1e-6)
        print(f"alpha1 = {a1:.4f}  (1/alpha1 = {1.0 / a1:.4f})")
        return EXIT_OK
    if args.bco_op == "t0":
        lo, hi = (float(x) for x in args.range.split(","))
        n = int(args.points)
        seed = int(args.seed)
        _csv_header(sys.stdout, seed, rtol)
        print("alpha,t0")
        alphas = np.geomspace(lo, hi, n)
        rows = _fanout(lambda a: f"{fmt(a)},{fmt(t0(float(a)))}\n", alphas, int(args.jobs))
        for r in rows:
            sys.stdout.write(r)
        return EXIT_OK
    # scan: one thm14 family along a t grid
    lo, hi = (float(x) for x in args.range.split(","))
    n = int(args.points)
    grid = np.linspace(lo, hi, n)
    c_list = [float(c) for c in args.c.split(",")]
    vals = thm14_scan(c_list, float(args.alpha), args.family, grid)
    _csv_header(sys.stdout, int(args.seed), rtol)
    print("t,value")
    for tt, v in vals:
        print(f"{fmt(tt)},{fmt(v)}")
    return EXIT_OK


def cmd_classify2d(args) -> int:
    L = parse_lattice_spec(args.lattice)
    res = classify_asymptotic_2d(L)
    cpts = "; ".join("(" + ", ".join(fmt(x) for x in c) + ")" for c in res.C)
    print(f"case: {res.case_label}")
    print(f"C (lattice coords): {cpts}")
    print(f"deciding shell: {res.deciding_shell}")
    return EXIT_OK


def cmd_argmin_shift(args) -> int:
    L = parse_lattice_spec(args.lattice)
    rep = argmin_shift_grid(L, float(args.alpha), int(args.grid), int(args.refine))
    print(json.dumps({
        "minimizers": [[float(x) for x in c] for c in rep.minimizers],
        "value": rep.value, "alpha": rep.alpha, "resolution": rep.resolution,
    }))
    return EXIT_OK


_SWEEP_QUANTITIES = ("theta", "rho_t", "e_tilde", "k_alpha")


def cmd_sweep(args) -> int:
    lo, hi = (float(x) for x in args.range.split(","))
    n = int(args.points)
    rtol = float(args.rtol)
    grid = np.geomspace(lo, hi, n) if args.log else np.linspace(lo, hi, n)
    q = args.quantity
    if q not in _SWEEP_QUANTITIES:
        print(f"unknown sweep quantity {q!r}", file=sys.stderr)
        return EXIT_USAGE
    if q == "theta":
        L = parse_lattice_spec(args.lattice)
        shift = np.zeros(L.dim)
        if args.shift:
            shift = np.asarray([float(s) for s in args.shift.split(",")])
        fn = lambda a: theta(L, shift, float(a), rtol).value
    elif q == "rho_t":
        fn = lambda a: rho_t(float(args.t), float(a), rtol)
    elif q == "e_tilde":
        fn = lambda a: e_tilde(BcoPoint(float(args.y), float(args.t), float(a)), 0, rtol)
    else:
        fn = lambda a: k_alpha(float(a), rtol)
    _csv_header(sys.stdout, int(args.seed), rtol)
    print(f"alpha,{q}")
    rows = _fanout(lambda a: f"{fmt(a)},{fmt(fn(a))}\n", grid, int(args.jobs))
    for r in rows:
        sys.stdout.write(r)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lattheta", description=__doc__)
    p.add_argument("--config", help="flat key=value file supplying defaults")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--rtol", default="1e-13")
        sp.add_argument("--seed", default="0")
        sp.add_argument("--jobs", default="1", type=int)
        sp.add_argument("--format", default="table", choices=("table", "json", "csv"))
        sp.add_argument("--config", help="flat key=value file supplying defaults")

    sp = sub.add_parser("jacobi", help="evaluate a Jacobi theta function")
    sp.add_argument("--kind", required=True, choices=("2", "3", "4"))
    sp.add_argument("--x", required=True)
    sp.add_argument("--deriv", default="0")
    common(sp)
    sp.set_defaults(fn=cmd_jacobi)

    sp = sub.add_parser("theta", help="evaluate a lattice theta function")
    sp.add_argument("action", choices=("eval",))
    sp.add_argument("--lattice", required=True)
    sp.add_argument("--alpha", required=True)
    sp.add_argument("--shift", help="translation vector x,y[,z]")
    sp.add_argument("--normalize", action="store_true", help="rescale to covolume 1")
    common(sp)
    sp.set_defaults(fn=cmd_theta)

    sp = sub.add_parser("layered", help="layered stacking comparisons")
    sp.add_argument("action", choices=("compare",))
    sp.add_argument("--preset", default="fcc-hcp")
    sp.add_argument("--alphas", default="0.5,1,2,4")
    common(sp)
    sp.set_defaults(fn=cmd_layered)

    sp = sub.add_parser("bco", help="body-centred-orthorhombic family")
    sp.add_argument("bco_op", choices=("certify", "t0", "alpha1", "scan"))
    sp.add_argument("--alpha", default="1.0")
    sp.add_argument("--t", default="1.0")
    sp.add_argument("--range", default="0.1,10")
    sp.add_argument("--points", default="50")
    sp.add_argument("--c", default="2,0.5", help="c-vector for thm14 scans")
    sp.add_argument("--family", default="U4", choices=("U2", "U3", "U4", "Q", "P34", "P23"))
    common(sp)
    sp.set_defaults(fn=cmd_bco)

    sp = sub.add_parser("classify2d", help="asymptotic minimizer classification")
    sp.add_argument("--lattice", required=True)
    common(sp)
    sp.set_defaults(fn=cmd_classify2d)

    sp = sub.add_parser("argmin-shift", help="grid argmin of the shifted theta")
    sp.add_argument("--lattice", required=True)
    sp.add_argument("--alpha", required=True)
    sp.add_argument("--grid", default="64")
    sp.add_argument("--refine", default="2")
    common(sp)
    sp.set_defaults(fn=cmd_argmin_shift)

    sp = sub.add_parser("sweep", help="parameter sweeps emitting CSV")
    sp.add_argument("--quantity", required=True)
    sp.add_argument("--range", required=True)
    sp.add_argument("--points", default="50")
    sp.add_argument("--log", action="store_true")
    sp.add_argument("--lattice")
    sp.add_argument("--shift")
    sp.add_argument("--t", default="1.0")
    sp.add_argument("--y", default="1.0")
    common(sp)
    sp.set_defaults(fn=cmd_sweep)
    return p


def run(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    _apply_config(args)
    try:
        return args.fn(args)
    except (ValueError, RuntimeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
