"""Command-line entry point: ``qszego <subcommand> [options]``.

Exit status is 0 when every battery passes, 1 when one fails and 2 on
usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import fields

import numpy as np

from . import atoms as at
from . import batteries as bt
from . import tiling as tl
from .errors import QszegoError
from .kernel import KernelContext, kernel_upper, s_quat
from .report import RunConfig, clean, dumps, read_config_file, write_csv, write_outputs

CONFIG_KEYS = {f.name for f in fields(RunConfig)}


class UsageError(Exception):
    pass


def _floats(text, length=None):
    try:
        vals = [float(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise UsageError(f"expected numbers, got {text!r}") from exc
    if length is not None and len(vals) != length:
        raise UsageError(f"expected {length} numbers, got {len(vals)}")
    return np.array(vals)


def _ints(text, length=None):
    vals = _floats(text, length)
    if np.any(vals != np.round(vals)):
        raise UsageError(f"expected integers, got {text!r}")
    return vals.astype(int)


def _common(parser):
    g = parser.add_argument_group("run options")
    g.add_argument("--config", help="flat key = value file; flags override it")
    g.add_argument("--n", type=int)
    g.add_argument("--c", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--samples", type=int)
    g.add_argument("--tol-scale", dest="tol_scale", type=float)
    g.add_argument("--out")
    g.add_argument("--threads", type=int)
    g.add_argument("--json", action="store_true", help="print the full JSON report")
    g.add_argument("--csv", action="store_true", default=None, help="also write CSV series under --out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qszego", description="Quaternionic Cauchy-Szego kernel verification")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, **kw):
        p = sub.add_parser(name, **kw)
        _common(p)
        return p

    add("group-audit", help="group axioms and field commutators")
    p = add("kernel-eval", help="evaluate the kernel, or run the oracle comparison without arguments")
    p.add_argument("--sigma", help="quaternion argument x1,x2,x3,x4 of the profile")
    p.add_argument("--s", type=float, help="height for the upper kernel")
    p.add_argument("--g", help="group point of the first argument")
    p.add_argument("--gp", help="group point of the second argument")
    add("invariance", help="translation, dilation and rotation invariance")
    add("regularity", help="regularity system, heat equation and subharmonicity")
    p = add("decay", help="decay slopes of kernel derivatives")
    p.add_argument("--index", help="multi-index as comma separated integers")
    add("min-sphere", help="minimum of |K| on the unit sphere")

    p = add("tile", help="tile addressing and audits")
    p.add_argument("action", choices=["locate", "children", "audit", "sign-search"])
    p.add_argument("--j", type=int, default=0)
    p.add_argument("--gamma", help="lattice point b1,b2,b3,a1,... or 0")
    p.add_argument("--point", help="group point for locate")

    p = add("atom", help="atom construction, checks, projection and scans")
    p.add_argument("action", choices=["make", "check", "project", "hp-scan"])
    p.add_argument("--atom", help="atom JSON file")
    p.add_argument("--center")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--alpha", type=int)
    p.add_argument("--nodes", type=int, default=1 << 13)
    p.add_argument("--template", default="bump-poly", choices=list(at.TEMPLATES))
    p.add_argument("--s", type=float, default=1.0, help="projection height")
    p.add_argument("--g", help="projection point")
    p.add_argument("--eps", help="heights for hp-scan")

    p = add("commutator", help="discretised commutator with a symbol")
    p.add_argument("--symbol", default="const", choices=sorted(bt.SYMBOLS))
    p.add_argument("--height", type=float, default=1.0)
    p.add_argument("--nodes", type=int, default=500)

    add("all", help="every battery")
    return parser


def make_config(args) -> RunConfig:
    values = {}
    if args.config:
        raw = read_config_file(args.config)
        unknown = set(raw) - CONFIG_KEYS
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        types = {"n": int, "c": float, "seed": int, "samples": int, "tol_scale": float, "threads": int,
                 "out": str, "csv": lambda v: v.lower() in ("1", "true", "yes")}
        try:
            values = {k: types[k](v) for k, v in raw.items()}
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    for key in ("n", "c", "seed", "samples", "tol_scale", "out", "threads", "csv"):
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    cfg = RunConfig(**values)
    if cfg.n < 2:
        raise UsageError("--n must be at least 2")
    return cfg


def _emit(cfg, args, results, stem):
    report = write_outputs(cfg, results, stem)
    if args.json:
        sys.stdout.write(dumps(report))
    else:
        for r in results:
            print(f"{r.name:18s} {r.status:5s} {r.runtime:8.2f}s  {r.claim}")
        print(f"overall {report['status']}")
    return 0 if report["status"] == "pass" else 1


def _print(obj, cfg=None, name=None):
    text = json.dumps(clean(obj), sort_keys=True, indent=2) + "\n"
    sys.stdout.write(text)
    if cfg is not None and cfg.out and name:
        from pathlib import Path

        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        (Path(cfg.out) / f"{name}.json").write_text(text)
    return 0


def _gamma(text, n):
    dim_t = 4 * n - 1
    if text is None or text.strip() == "0":
        return np.zeros(4 * n - 4, dtype=int), np.zeros(3, dtype=int)
    vals = _ints(text, dim_t)
    return vals[3:], vals[:3]


def _atom_from(args, cfg):
    if args.atom:
        with open(args.atom) as fh:
            return at.Atom.from_json(json.load(fh))
    center = _floats(args.center, 4 * cfg.n - 1) if args.center else np.zeros(4 * cfg.n - 1)
    return at.make_atom(center, args.radius, args.p, args.alpha, cfg.seed, n=cfg.n, nodes=args.nodes,
                        template=args.template)


def _run(args) -> int:
    cfg = make_config(args)
    cmd = args.command
    n = cfg.n
    ctx = KernelContext.for_n(n, cfg.c, cfg.tol)

    if cmd == "group-audit":
        return _emit(cfg, args, [bt.REGISTRY["group"](cfg), bt.REGISTRY["commutator-table"](cfg)], cmd)
    if cmd == "kernel-eval":
        if args.sigma:
            return _print({"argument": _floats(args.sigma, 4), "value": s_quat(ctx, _floats(args.sigma, 4))})
        if args.g or args.gp:
            if args.s is None:
                raise UsageError("--s is required with --g/--gp")
            g = _floats(args.g, 4 * n - 1) if args.g else np.zeros(4 * n - 1)
            gp = _floats(args.gp, 4 * n - 1) if args.gp else np.zeros(4 * n - 1)
            return _print({"s": args.s, "g": g, "gp": gp, "value": kernel_upper(ctx, args.s, g, gp)})
        return _emit(cfg, args, [bt.REGISTRY["oracle"](cfg)], cmd)
    if cmd == "invariance":
        return _emit(cfg, args, [bt.REGISTRY["invariance"](cfg)], cmd)
    if cmd == "regularity":
        return _emit(cfg, args, [bt.REGISTRY["regularity"](cfg), bt.REGISTRY["subharmonic"](cfg)], cmd)
    if cmd == "decay":
        index = _ints(args.index, 4 * n - 1) if args.index else None
        return _emit(cfg, args, [bt.REGISTRY["decay"](cfg, index=index)], cmd)
    if cmd == "min-sphere":
        return _emit(cfg, args, [bt.REGISTRY["min-sphere"](cfg)], cmd)
    if cmd == "tile":
        return _tile(args, cfg, ctx)
    if cmd == "atom":
        return _atom(args, cfg, ctx)
    if cmd == "commutator":
        res = bt.REGISTRY["commutator"](cfg, symbol=args.symbol, nodes=args.nodes, height=args.height)
        return _emit(cfg, args, [res], cmd)
    if cmd == "all":
        return _emit(cfg, args, bt.run_all(cfg), "report")
    raise UsageError(f"unknown command {cmd}")


def _tile(args, cfg, ctx):
    n = cfg.n
    if args.action == "locate":
        if not args.point:
            raise UsageError("tile locate needs --point")
        addr = tl.locate(_floats(args.point, 4 * n - 1), args.j)
        return _print(addr.to_json())
    if args.action == "children":
        a, b = _gamma(args.gamma, n)
        kids = tl.children(tl.TileAddress(args.j, a, b))
        return _print([k.to_json() for k in kids], cfg, "children")
    if args.action == "audit":
        return _emit(cfg, args, [bt.REGISTRY["tiling"](cfg)], "tile-audit")
    if args.gamma is None:
        return _emit(cfg, args, [bt.REGISTRY["sign-tiles"](cfg)], "sign-tiles")
    a, b = _gamma(args.gamma, n)
    try:
        found = tl.sign_tile_search(ctx, tl.TileAddress(args.j, a, b))
    except tl.NoCandidateFound as exc:
        _print({"found": False, "near_miss": str(exc.near_miss)})
        return 1
    return _print({"found": True, **clean(found)}, cfg, "sign-search")


def _atom(args, cfg, ctx):
    atom = _atom_from(args, cfg)
    if args.action == "make":
        return _print(atom.to_json(), cfg, "atom")
    if args.action == "check":
        rep = at.check_atom(atom)
        _print({"passed": rep.passed, "support": rep.support_ok, "linf": rep.linf_ok, "moments": rep.moments_ok,
                "linf_ratio": rep.linf_ratio,
                "moment_residuals": {",".join(map(str, k)): v for k, v in rep.moment_residuals.items()}},
               cfg, "atom-check")
        return 0 if rep.passed else 1
    if args.action == "project":
        g = _floats(args.g, 4 * cfg.n - 1) if args.g else np.asarray(atom.center)
        val, err = at.project_atom(ctx, atom, args.s, g, error=True)
        return _print({"s": args.s, "g": g, "value": val, "error_estimate": err}, cfg, "atom-project")
    eps = _floats(args.eps) if args.eps else atom.radius**2 * np.geomspace(1.0, 1e4, 5)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        scan = at.hp_scan(ctx, atom, eps)
    rows = scan.rows()
    if cfg.out and cfg.csv:
        from pathlib import Path

        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        write_csv(Path(cfg.out) / "hp-scan.csv", rows)
    _print({"rows": rows, "warnings": [str(w.message) for w in caught]}, cfg, "hp-scan")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except (UsageError, QszegoError, ValueError) as exc:
        print(f"qszego: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"qszego: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
