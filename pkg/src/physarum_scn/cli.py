"""Command-line entry point.

Exit codes: 0 success, 2 invalid instance, 3 engine hit ``max_iters``
without converging, 4 I/O or parse error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .engine import run_solver
from .instances import builtin_example
from .io import InstanceParseError, dump_instance, parse_instance, write_solution, write_trajectory
from .model import InvalidInstanceError, NetworkInstance
from .oracle import compare, frank_wolfe_solve
from .pressure import PressureSolveError

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3
EXIT_IO = 4


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _add_source(p: argparse.ArgumentParser, allow_example=True):
    if allow_example:
        g = p.add_mutually_exclusive_group(required=True)
        g.add_argument("instance", nargs="?", help="instance file (TOML)")
        g.add_argument("--example", type=int, choices=(1, 2, 3), help="built-in example")
    else:
        p.add_argument("instance", help="instance file (TOML)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="physarum-scn", description="Physarum-inspired supply-chain network design")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run the Physarum engine")
    _add_source(s)
    s.add_argument("--out", type=Path, help="write the solution table here")
    s.add_argument("--trajectory", type=Path, help="write per-iteration |Q| here")
    s.add_argument("--seed", type=int)
    s.add_argument("--mode", choices=("replace", "accumulate"), help="link cost update")
    s.add_argument("--cond", choices=("semi-implicit", "raw"), help="conductivity update")
    s.add_argument("--length", choices=("marginal", "total"), help="length model")
    s.add_argument("--capacity", choices=("cumulative", "ratio"), help="capacity multiplier")
    s.add_argument("--undirected", action="store_true", help="reinforce conductivity with |Q| instead of max(Q, 0)")
    s.add_argument("--delta", type=float)
    s.add_argument("--max-iters", type=int)

    o = sub.add_parser("oracle", help="run the Frank-Wolfe reference solver")
    _add_source(o)
    o.add_argument("--tol", type=float, default=1e-6)
    o.add_argument("--max-iters", type=int, default=10_000)

    c = sub.add_parser("compare", help="run both solvers and report differences")
    _add_source(c)
    c.add_argument("--seed", type=int)
    c.add_argument("--tol", type=float, default=1e-6)

    v = sub.add_parser("validate", help="check an instance file")
    _add_source(v, allow_example=False)

    e = sub.add_parser("export", help="print a built-in example as an instance file")
    e.add_argument("example", type=int, choices=(1, 2, 3))
    return parser


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from exc


def _write_text(path: Path, text: str):
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from exc


def _load(args) -> NetworkInstance:
    if getattr(args, "example", None) is not None:
        return builtin_example(args.example)
    text = _read_text(args.instance)
    try:
        return parse_instance(text)
    except InstanceParseError as exc:
        raise CliError(f"{args.instance}: {exc}", EXIT_IO) from exc
    except InvalidInstanceError as exc:
        raise CliError("\n".join(f"{args.instance}: {v}" for v in exc.violations), EXIT_INVALID) from exc


def _solver_overrides(args) -> dict:
    kw = {}
    if getattr(args, "seed", None) is not None:
        kw["seed"] = args.seed
    for attr, target in (
        ("mode", "cost_update_mode"),
        ("cond", "conductivity_update_mode"),
        ("length", "length_model"),
        ("capacity", "capacity_mode"),
        ("delta", "delta"),
        ("max_iters", "max_iters"),
    ):
        val = getattr(args, attr, None)
        if val is not None:
            kw[target] = val
    if getattr(args, "trajectory", None) is not None:
        kw["record_trajectory"] = True
    if getattr(args, "undirected", False):
        kw["directed"] = False
    return kw


def _run_engine(inst: NetworkInstance):
    try:
        return run_solver(inst)
    except InvalidInstanceError as exc:
        raise CliError("\n".join(str(v) for v in exc.violations), EXIT_INVALID) from exc
    except PressureSolveError as exc:
        raise CliError(f"pressure solve failed: {exc}", EXIT_NOT_CONVERGED) from exc


def cmd_solve(args, out) -> int:
    inst = _load(args)
    inst = replace(inst, params=replace(inst.params, **_solver_overrides(args)))
    sol = _run_engine(inst)
    table = write_solution(sol)
    if args.out is not None:
        _write_text(args.out, table)
    else:
        out.write(table)
    if args.trajectory is not None:
        _write_text(args.trajectory, write_trajectory(sol))
    out.write(f"objective {sol.objective:.6f}\n")
    out.write(f"iterations {sol.iterations}\n")
    out.write(f"converged {'true' if sol.converged else 'false'}\n")
    if sol.removed_links:
        out.write("removed " + " ".join(str(a) for a in sol.removed_links) + "\n")
    if sol.reverse_flux_links:
        print("warning: reverse flux on links " + " ".join(map(str, sol.reverse_flux_links)), file=sys.stderr)
    return EXIT_OK if sol.converged else EXIT_NOT_CONVERGED


def cmd_oracle(args, out) -> int:
    inst = _load(args)
    res = frank_wolfe_solve(inst, tol=args.tol, max_iters=args.max_iters)
    out.write("link,flow\n")
    for i, f in enumerate(res.flows):
        out.write(f"{i},{f:.6f}\n")
    out.write(f"objective {res.objective:.6f}\n")
    out.write(f"kkt_gap {res.kkt_gap:.6e}\n")
    out.write(f"iterations {res.iterations}\n")
    out.write(f"converged {'true' if res.converged else 'false'}\n")
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_compare(args, out) -> int:
    inst = _load(args)
    inst = replace(inst, params=replace(inst.params, **_solver_overrides(args)))
    sol = _run_engine(inst)
    res = frank_wolfe_solve(inst, tol=args.tol)
    out.write(compare(sol, res).format())
    return EXIT_OK if sol.converged else EXIT_NOT_CONVERGED


def cmd_validate(args, out) -> int:
    text = _read_text(args.instance)
    try:
        parse_instance(text)
    except InstanceParseError as exc:
        raise CliError(f"{args.instance}: {exc}", EXIT_IO) from exc
    except InvalidInstanceError as exc:
        raise CliError("\n".join(f"{args.instance}: {v}" for v in exc.violations), EXIT_INVALID) from exc
    out.write("ok\n")
    return EXIT_OK


def cmd_export(args, out) -> int:
    out.write(dump_instance(builtin_example(args.example)))
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "oracle": cmd_oracle,
    "compare": cmd_compare,
    "validate": cmd_validate,
    "export": cmd_export,
}


def main(argv=None, out=None) -> int:
    out = out if out is not None else sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args, out)
    except CliError as exc:
        print(exc, file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
