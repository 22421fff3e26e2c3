"""Command-line front end: ``mesh``, ``solve``, ``study`` and ``diag``.

Options may also come from a ``key = value`` file given with ``--config``;
flags on the command line override the file.  The thread count of the
numerical libraries is read from ``PLATEPARADOX_THREADS``.
"""
import argparse
import logging
import math
import os
import re
import sys
from contextlib import nullcontext
from pathlib import Path

from . import bench, export
from .argyris import BcMode
from .dg import DgParams
from .errors import ArgumentError, PlateError
from .export import fmt
from .fields import polynomial_field
from .mesh import MAX_LEVEL, build_disk_mesh

log = logging.getLogger("plateparadox")

THREADS_ENV = "PLATEPARADOX_THREADS"
CURVATURE_RATE = (1.75, 2.25)
ENERGY_IDENTITY_TOL = 1e-10
DET_ZERO_TOL = 1e-9


def read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ArgumentError(f"{path}:{n}: expected key = value")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


def parse_levels(text):
    m = re.fullmatch(r"\s*(\d+)\s*(?:\.\.\s*(\d+))?\s*", str(text))
    if not m:
        raise argparse.ArgumentTypeError(f"levels must look like A..B, got {text!r}")
    a = int(m.group(1))
    b = int(m.group(2)) if m.group(2) is not None else a
    if b < a:
        raise argparse.ArgumentTypeError(f"empty level range {text!r}")
    return range(a, b + 1)


def _level(text):
    v = int(text)
    if not 0 <= v <= MAX_LEVEL:
        raise argparse.ArgumentTypeError(f"level must lie in 0..{MAX_LEVEL}")
    return v


def _add_common(p):
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--deterministic", action="store_true",
                   help="single-threaded numerics for byte-identical output")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _add_problem(p):
    p.add_argument("--method", choices=bench.METHODS, default="argyris")
    p.add_argument("--bc", choices=BcMode.KINDS, default=None,
                   help="argyris boundary treatment (default: nodal)")
    p.add_argument("--sigma", type=float, default=0.0, help="Poisson ratio in [0, 1)")
    p.add_argument("--gamma0", type=float, default=None, help="DG value penalty (default 10)")
    p.add_argument("--gamma1", type=float, default=None, help="DG gradient penalty (default 10)")
    p.add_argument("--degree", type=int, default=None, help="DG polynomial degree (default 2)")
    p.add_argument("--epsilon", type=float, default=None, help="fixed penalty parameter")
    p.add_argument("--epsilon-power", type=float, default=None,
                   help="penalty parameter h_max**power when --epsilon is absent (default 3)")
    p.add_argument("--quad-degree", type=int, default=10, help="volume quadrature degree")


def build_parser():
    parser = argparse.ArgumentParser(prog="plateparadox",
                                     description="Kirchhoff plate finite elements on the unit disk")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh", help="write the level-L disk mesh as text and VTU")
    _add_common(p)
    p.add_argument("--level", type=_level, required=True)

    p = sub.add_parser("solve", help="solve once; write a VTU and a one-row CSV")
    _add_common(p)
    _add_problem(p)
    p.add_argument("--level", type=_level, required=True)

    p = sub.add_parser("study", help="convergence study over a level range")
    _add_common(p)
    _add_problem(p)
    p.add_argument("--levels", type=parse_levels, default=range(1, 6), help="A..B (default 1..5)")

    p = sub.add_parser("diag", help="curvature and energy diagnostics")
    _add_common(p)
    p.add_argument("--check", choices=("curvature", "energy-identity", "det-zero"), required=True)
    p.add_argument("--level", type=_level, required=True)
    p.add_argument("--sigma", type=float, default=0.3,
                   help="Poisson ratio for the energy identity (default 0.3)")
    return parser, sub


def parse_args(argv=None):
    parser, sub = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = read_config(args.config)
        except (OSError, ArgumentError) as exc:
            parser.error(str(exc))
        subp = sub.choices[args.command]
        known = {a.dest for a in subp._actions}
        unknown = sorted(set(cfg) - known - {"config", "command"})
        if unknown:
            subp.error(f"unknown config keys: {', '.join(unknown)}")
        flags = []
        for k, v in cfg.items():
            action = next(a for a in subp._actions if a.dest == k)
            opt = action.option_strings[-1]
            if action.nargs == 0:
                if v.lower() in ("1", "true", "yes", "on"):
                    flags.append(opt)
            else:
                flags += [opt, v]
        # config first, command line second: later flags win
        argv = list(sys.argv[1:] if argv is None else argv)
        args = parser.parse_args([args.command] + flags + argv[1:])
    return parser, sub, args


def make_problem(args):
    if args.method != "argyris" and (args.bc or args.epsilon is not None
                                     or args.epsilon_power is not None):
        raise ArgumentError("--bc/--epsilon/--epsilon-power apply to --method argyris only")
    if args.method != "dg" and any(x is not None for x in (args.gamma0, args.gamma1, args.degree)):
        raise ArgumentError("--gamma0/--gamma1/--degree apply to --method dg only")
    if args.method == "dg" and args.sigma != 0.0:
        raise ArgumentError("--method dg requires --sigma 0")
    bc = dg_params = None
    if args.method == "argyris":
        kind = args.bc or "nodal"
        power = 3.0 if args.epsilon_power is None else args.epsilon_power
        if kind not in ("penalty", "penalty_vq") and (args.epsilon is not None
                                                      or args.epsilon_power is not None):
            raise ArgumentError("--epsilon/--epsilon-power need a penalty boundary mode")
        bc = BcMode(kind, args.epsilon, power)
    if args.method == "dg":
        dg_params = DgParams(10.0 if args.gamma0 is None else args.gamma0,
                             10.0 if args.gamma1 is None else args.gamma1,
                             2 if args.degree is None else args.degree)
    return bench.PlateProblem(args.method, args.sigma, 1.0, bc, dg_params, args.quad_degree)


def thread_limit(args):
    n = 1 if args.deterministic else os.environ.get(THREADS_ENV)
    if n is None:
        return nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=int(n))


def cmd_mesh(args, out):
    mesh = build_disk_mesh(args.level)
    a = export.write_mesh_text(out / f"mesh-L{args.level}.txt", mesh)
    b = export.write_vtu(out / f"mesh-L{args.level}.vtu", mesh)
    st = mesh.stats()
    print(f"level {args.level}: {mesh.nv} vertices, {mesh.nt} triangles, {mesh.ns} sides, "
          f"h_max {st.h_max:.6g}")
    print(f"wrote {a}\nwrote {b}")
    return 0


def cmd_solve(args, out):
    problem = make_problem(args)
    mesh = build_disk_mesh(args.level)
    sol = bench.solve_problem(problem, mesh)
    exact = bench.ExactDiskSolution(problem.sigma)
    target = "incorrect" if problem.method == "splitting" else "exact"
    d_h2 = math.nan if problem.method == "splitting" else bench.h2_error(sol, exact)
    row = bench.ConvergenceRow(args.level, mesh.h_max, int(sol.ndof), bench.midpoint_value(sol),
                               bench.midpoint_error(sol, exact, target), d_h2, float(sol.energy()))
    stem = f"{problem.label}-L{args.level}"
    export.write_vtu(out / f"{stem}.vtu", mesh, {"u": bench.vertex_values(sol)})
    path = export.write_csv(out / f"{stem}.csv", [row])
    print(f"{problem.label} level {args.level}: u_h(0) = {row.midpoint:.12g}, "
          f"delta_mp = {row.delta_mp:.3e}, delta_h2 = {row.delta_h2:.3e}")
    print(f"wrote {path}")
    return 0


def cmd_study(args, out):
    problem = make_problem(args)
    rows = bench.convergence_study(problem, args.levels)
    path = export.write_csv(out / f"study-{problem.label}.csv", rows)
    for r in rows:
        status = r.error or f"u_h(0) = {r.midpoint:.12g}"
        print(f"level {r.level}: {status}")
    print(f"wrote {path}")
    return 0 if all(r.ok for r in rows) else 1


def _curvature_report(level):
    lines = []
    v1 = polynomial_field({(0, 0): 1.0, (2, 0): -1.0, (0, 2): -1.0}, "1-r^2")
    c = bench.curvature_identity_check(v1, level)
    bound = 4.0 * (math.pi - c.area)
    ok1 = abs(c.lhs - 4 * math.pi) <= bound * (1 + 1e-9) + 1e-13
    lines += [f"v1_lhs={fmt(c.lhs)}", f"v1_rhs={fmt(c.rhs)}", f"v1_defect={fmt(abs(c.lhs - 4 * math.pi))}",
              f"v1_bound={fmt(bound)}", f"v1_pass={ok1}"]
    v2 = polynomial_field({(1, 0): 1.0, (3, 0): -1.0, (1, 2): -1.0}, "(1-r^2)x")
    c2 = bench.curvature_identity_check(v2, level)
    lines += [f"v2_lhs={fmt(c2.lhs)}", f"v2_rhs={fmt(c2.rhs)}", f"v2_gap={fmt(c2.gap)}"]
    ok2 = True
    if level >= 1:
        prev = bench.curvature_identity_check(v2, level - 1)
        rate = math.log2(prev.gap / c2.gap)
        ok2 = CURVATURE_RATE[0] <= rate <= CURVATURE_RATE[1]
        lines.append(f"v2_rate={fmt(rate)}")
    lines.append(f"v2_pass={ok2}")
    return ok1 and ok2, lines


def cmd_diag(args, out):
    if args.check == "curvature":
        ok, lines = _curvature_report(args.level)
    elif args.check == "energy-identity":
        gap = bench.energy_identity_gap(args.level, args.sigma)
        ok = gap <= ENERGY_IDENTITY_TOL
        lines = [f"sigma={fmt(args.sigma)}", f"relative_gap={fmt(gap)}", f"tolerance={fmt(ENERGY_IDENTITY_TOL)}"]
    else:
        ratio = bench.det_zero_ratio(args.level)
        ok = ratio <= DET_ZERO_TOL
        lines = [f"det_ratio={fmt(ratio)}", f"tolerance={fmt(DET_ZERO_TOL)}"]
    lines = [f"check={args.check}", f"level={args.level}"] + lines + [f"status={'PASS' if ok else 'FAIL'}"]
    path = export.atomic_write_text(out / f"diag-{args.check}-L{args.level}.txt", "\n".join(lines) + "\n")
    print("\n".join(lines))
    print(f"wrote {path}")
    return 0 if ok else 1


COMMANDS = {"mesh": cmd_mesh, "solve": cmd_solve, "study": cmd_study, "diag": cmd_diag}


def main(argv=None):
    parser, sub, args = parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    try:
        with thread_limit(args):
            return COMMANDS[args.command](args, out)
    except ArgumentError as exc:
        sub.choices[args.command].print_usage(sys.stderr)
        print(f"plateparadox {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except PlateError as exc:
        print(f"plateparadox: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
