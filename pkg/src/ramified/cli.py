"""Command-line entry point ``ramified``.

Exit status is 0 on success, 1 on a domain error (its class name is
printed on stderr) and 2 on a usage or input error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import io
from .errors import RamifiedError
from .eulerian import cancel_cycles_counted, check_kirchhoff, divergence, gilbert_energy
from .lagrangian import (
    full_energy,
    gilbert_energy_plan,
    irrigation_cost,
    is_simple,
    marginals,
    total_length,
)
from .optimize import SolveConfig, dyadic_tree_cost, solve_discrete
from .svg import flow_to_svg
from .transform import flow_to_plan, plan_to_flow, verify_equivalence


def fmt(x: float) -> str:
    return f"{x:.12f}"


def _atoms(measure) -> str:
    if measure.is_empty:
        return "{}"
    return ", ".join(f"({', '.join(fmt(c) for c in p)}): {fmt(m)}" for p, m in measure)


def _emit(text: str, out: str | None) -> list[str]:
    if out is None:
        sys.stdout.write(text)
        return []
    Path(out).write_text(text, encoding="utf-8")
    return [out]


def _manifest(args, command: str, config: dict, inputs: list[str], outputs: list[str], t0: float):
    manifest = {
        "command": command,
        "config": config,
        "inputs": {p: io.digest(p) for p in inputs},
        "outputs": {p: io.digest(p) for p in outputs},
        "wall_time": time.perf_counter() - t0,
    }
    if args.out:
        io.write(args.manifest or args.out + ".manifest.json", manifest)
    elif args.manifest:
        io.write(args.manifest, manifest)
    else:
        sys.stderr.write(io.dumps(manifest))


def cmd_eval(args) -> int:
    v = io.read_flow(args.flow)
    div = divergence(v)
    _, cycles = cancel_cycles_counted(v)
    print(f"E_alpha = {fmt(gilbert_energy(v, args.alpha))}")
    print(f"divergence_plus = {_atoms(div.positive)}")
    print(f"divergence_minus = {_atoms(div.negative)}")
    print(f"cycles = {cycles}")
    return 0


def cmd_eval_plan(args) -> int:
    p = io.read_plan(args.plan)
    simple = is_simple(p)
    mu, nu = marginals(p)
    print(f"I_alpha = {fmt(irrigation_cost(p, args.alpha))}")
    print(f"E_alpha = {fmt(gilbert_energy_plan(p, args.alpha))}")
    print(f"full_E_alpha = {fmt(full_energy(p, args.alpha))}")
    print(f"length = {fmt(total_length(p))}")
    print(f"simple = {str(simple.all_simple).lower()}")
    print(f"essentially_simple = {str(simple.all_essentially_simple).lower()}")
    print(f"mu = {_atoms(mu)}")
    print(f"nu = {_atoms(nu)}")
    return 0


def cmd_convert(args) -> int:
    t0 = time.perf_counter()
    inputs = [args.input]
    if args.to == "plan":
        if not (args.mu and args.nu):
            raise ValueError("convert --to plan needs --mu and --nu")
        v = io.read_flow(args.input)
        mu, nu = io.read_measure(args.mu), io.read_measure(args.nu)
        inputs += [args.mu, args.nu]
        dec = flow_to_plan(v, mu, nu)
        data = dec.plan.to_dict()
        data["residual"] = dec.cycle_residual.to_dict()
    else:
        proj = plan_to_flow(io.read_plan(args.input))
        data = proj.flow.to_dict()
        data["intensity"] = proj.intensity.tolist()
    outputs = _emit(io.dumps(data), args.out)
    _manifest(args, "convert", {"to": args.to}, inputs, outputs, t0)
    return 0


def cmd_verify(args) -> int:
    p = io.read_plan(args.plan)
    v = io.read_flow(args.flow) if args.flow else None
    report = verify_equivalence(p, v, args.alpha)
    for key, value in report.to_dict().items():
        if value is None:
            continue
        shown = str(value).lower() if isinstance(value, bool) else fmt(value)
        print(f"{key} = {shown}")
    return 0


def cmd_solve(args) -> int:
    t0 = time.perf_counter()
    cfg = SolveConfig(
        alpha=args.alpha,
        max_steiner=args.max_steiner,
        relax_tol=args.relax_tol,
        relax_max_iters=args.relax_max_iters,
        moves_budget=args.moves_budget,
        rng_seed=args.seed,
    )
    mu = io.read_measure(args.mu, require_probability=True)
    nu = io.read_measure(args.nu, require_probability=True)
    res = solve_discrete(mu, nu, cfg, mode=args.mode)
    report = check_kirchhoff(res.flow, mu, nu, 1e-9)
    data = res.flow.to_dict()
    data["cost"] = res.cost
    outputs = _emit(io.dumps(data), args.out)
    if args.out:
        print(f"E_alpha = {fmt(res.cost)}")
        print(f"kirchhoff_residual = {fmt(report.max_residual)}")
        print(f"converged = {str(res.converged).lower()}")
    config = cfg.to_dict()
    config["mode"] = args.mode
    _manifest(args, "solve", config, [args.mu, args.nu], outputs, t0)
    return 0


def cmd_dyadic(args) -> int:
    res = dyadic_tree_cost(args.dim, args.alpha, args.levels)
    print(f"{'level':>5}  {'cost':>16}  {'ratio':>16}")
    for j, c in enumerate(res.level_costs):
        ratio = fmt(res.ratios[j - 1]) if j else "-"
        print(f"{j:>5}  {fmt(c):>16}  {ratio:>16}")
    print(f"total = {fmt(res.cost)}")
    print(f"predicted_ratio = {fmt(res.predicted_ratio)}")
    print(f"threshold = {fmt(res.threshold)}")
    return 0


def cmd_export_svg(args) -> int:
    v = io.read_flow(args.flow)
    Path(args.out).write_text(flow_to_svg(v, args.alpha), encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ramified", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="Gilbert energy, divergence and cycles of a flow")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("flow")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("eval-plan", help="costs, simplicity and marginals of a plan")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("plan")
    p.set_defaults(func=cmd_eval_plan)

    p = sub.add_parser("convert", help="flow -> plan decomposition or plan -> flow")
    p.add_argument("--to", choices=("plan", "flow"), required=True)
    p.add_argument("--mu")
    p.add_argument("--nu")
    p.add_argument("-o", "--out")
    p.add_argument("--manifest")
    p.add_argument("input")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("verify", help="compare a plan's cost with its flow's energy")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--flow")
    p.add_argument("plan")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("solve", help="minimum energy tree from mu to nu")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--mode", choices=("exhaustive", "local"), default="exhaustive")
    p.add_argument("--max-steiner", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--moves-budget", type=int, default=500)
    p.add_argument("--relax-tol", type=float, default=1e-10)
    p.add_argument("--relax-max-iters", type=int, default=10000)
    p.add_argument("-o", "--out")
    p.add_argument("--manifest")
    p.add_argument("mu")
    p.add_argument("nu")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("dyadic", help="level costs of the dyadic tree")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--levels", type=int, required=True)
    p.set_defaults(func=cmd_dyadic)

    p = sub.add_parser("export-svg", help="draw a planar flow")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("-o", "--out", required=True)
    p.add_argument("flow")
    p.set_defaults(func=cmd_export_svg)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RamifiedError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError, TypeError) as exc:
        # unreadable or malformed input, or an invalid option value
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
