"""Command-line interface.

Verbs: ``run <config>``, ``convergence <case>``, ``list-cases``,
``validate <config>``.  Output goes to ``$ADERNET_OUTPUT_DIR`` (default
``./adernet-output``).  Exit codes: 0 success, 2 configuration error,
3 solver failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .cases import CASES, builtin_case, list_cases
from .config import ConfigError, load_config
from .engine import SolverFailure
from .lpm import lump_regions
from .harness import REFERENCE_CELLS, REFERENCE_ORDER, convergence_study, run
from .junction import JunctionError
from .network import NetworkError, build_network
from .swe import InadmissibleState, SonicState

OUTPUT_ENV = "ADERNET_OUTPUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "adernet-output"))


def _int_list(text: str) -> list:
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _load(target: str):
    """A TOML file path or the name of a built-in case."""
    if target in CASES and not Path(target).exists():
        return builtin_case(target)
    return load_config(target)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adernet", description="ADER finite volume solver for hyperbolic networks")
    sub = p.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", help="simulate a configuration file or built-in case and write CSV output")
    r.add_argument("config")
    r.add_argument("--cells", type=int, default=None, help="cells on every edge")
    r.add_argument("--order", type=int, default=None)
    r.add_argument("--solver", choices=("tt", "heoc"), default=None)
    r.add_argument("--t-end", type=float, default=None)
    c = sub.add_parser("convergence", help="convergence table of a built-in case against a fine reference")
    c.add_argument("case", choices=sorted(CASES))
    c.add_argument("--solver", choices=("tt", "heoc"), default="tt")
    c.add_argument("--orders", type=_int_list, default=[2, 4])
    c.add_argument("--grids", type=_int_list, default=[50, 100, 200, 400])
    c.add_argument("--ref-order", type=int, default=REFERENCE_ORDER)
    c.add_argument("--ref-cells", type=int, default=REFERENCE_CELLS)
    c.add_argument("--jobs", type=int, default=None)
    sub.add_parser("list-cases", help="list the built-in cases")
    v = sub.add_parser("validate", help="check a configuration file without running it")
    v.add_argument("config")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.verb == "list-cases":
            for name, desc in list_cases().items():
                print(f"{name:14s} {desc}")
            return EXIT_OK
        if args.verb == "validate":
            cfg = _load(args.config)
            net = build_network(cfg)
            if net.lumped_edges or net.lumped_vertices:
                lump_regions(net, net.lumped_edges, net.lumped_vertices)
            print(f"ok: {len(net.edges)} edges, {len(net.vertices)} vertices")
            return EXIT_OK
        if args.verb == "run":
            cfg = _load(args.config)
            if args.cells is not None:
                cfg = cfg.with_cells(args.cells)
            overrides = {"order": args.order, "solver": args.solver, "t_end": args.t_end}
            overrides = {k: v for k, v in overrides.items() if v is not None}
            if overrides:
                cfg = cfg.with_run(**overrides)
            build_network(cfg)
            paths = run(cfg, output_dir())
            for path in paths:
                print(path)
            return EXIT_OK
        if args.verb == "convergence":
            rep = convergence_study(args.case, args.solver, args.orders, args.grids,
                                    ref_order=args.ref_order, ref_cells=args.ref_cells, jobs=args.jobs)
            path = rep.write(output_dir() / f"convergence_{args.case}_{args.solver}.csv")
            for r in rep.rows:
                print(f"k={r['order']} N={r['N']:5d} steps={r['steps']:5d} L1={r['L1']:.3e} ({r['O_L1']:.2f}) "
                      f"Linf={r['Linf']:.3e} ({r['O_Linf']:.2f}) ODE={r['L2_ode']:.3e} ({r['O_L2_ode']:.2f})")
            print(path)
            return EXIT_OK
    except (ConfigError, NetworkError, InadmissibleState) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverFailure, JunctionError, SonicState) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
