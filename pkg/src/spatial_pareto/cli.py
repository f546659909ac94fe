"""Command-line interface.

Exit status is 0 on success, 1 when a solver fails and 2 for configuration
errors (bad flags, unknown presets, invalid specs).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .aggregate import ReductionError, reduce_to_aggregate, solve_bang_bang
from .ascent import AscentConfig, DirectionError, solve_model_I, trace_pareto_frontier
from .constrained import ORIENTATIONS, EpsConstraintConfig, solve_model_II
from .goal import GoalProgramError, GpSpec, discretize_gp, restore_efficiency, solve_model_III
from .io import (PRESETS, load_preset, load_spec, write_cloud_csv, write_field_csv,
                 write_frontier_csv, write_json, write_log_csv)
from .model import SpecError, make_grids
from .oracle import ControlClass, EnumerationCapError, cloud_rows, enumerate_criteria
from .pde import InstabilityError

DEFAULT_OUT = "pareto_out"


class ConfigError(ValueError):
    pass


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _blocks(text):
    try:
        s, t = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected SPACExTIME block counts, got {text!r}")
    return s, t


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spatial-pareto", description="Bi-criteria spatial growth solver.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, default_preset="paper-baseline", grids=True):
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--preset", default=None,
                         help=f"named model ({', '.join(PRESETS)}; default {default_preset})")
        src.add_argument("--spec", help="path to a model JSON file")
        sp.set_defaults(default_preset=default_preset)
        sp.add_argument("--out", help=f"output directory (default $PARETO_OUT or {DEFAULT_OUT})")
        if grids:
            sp.add_argument("--nx", type=int, default=101)
            sp.add_argument("--nt", type=int, default=200)
        return sp

    s = common(sub.add_parser("solve-scalar", help="maximize J1 + theta*J2"))
    s.add_argument("--theta", type=float, default=0.0)
    s.add_argument("--no-polish", action="store_true")

    s = common(sub.add_parser("frontier", help="sweep theta and write the frontier"))
    s.add_argument("--theta", type=_floats, default=[0, 0.05, 0.1, 0.2, 0.5, 1])
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--no-polish", action="store_true")

    s = common(sub.add_parser("solve-eps", help="epsilon-constraint problem"))
    s.add_argument("--epsilon", type=float, default=1.3)
    s.add_argument("--orientation", choices=ORIENTATIONS, default="utility_primary")

    s = common(sub.add_parser("solve-aggregate", help="aggregate bang-bang problem"),
               "paper-linear", grids=False)
    s.add_argument("--epsilon", type=float, default=0.0)

    s = common(sub.add_parser("solve-gp", help="goal program on the discrete aggregate model"),
               "paper-linear", grids=False)
    s.add_argument("--g1", type=float, required=True)
    s.add_argument("--g2", type=float, required=True)
    s.add_argument("--steps", type=int, default=1)
    s.add_argument("--weights", type=_floats, default=[1.0, 1.0, 1.0, 1.0],
                   help="theta1+,theta1-,theta2+,theta2-")
    s.add_argument("--no-restore", action="store_true")

    s = common(sub.add_parser("oracle", help="enumerate a piecewise-constant control class"))
    s.set_defaults(nx=21, nt=40)
    s.add_argument("--blocks", type=_blocks, default=(2, 2), help="SPACExTIME, e.g. 2x2")
    s.add_argument("--levels", type=_floats, default=[0, 0.75, 1.5, 2.25, 3.0])
    return p


def _spec(args):
    if args.spec:
        return load_spec(args.spec), {"spec": args.spec}
    name = args.preset or args.default_preset
    return load_preset(name), {"preset": name}


def _outdir(args) -> Path:
    out = Path(args.out or os.environ.get("PARETO_OUT") or DEFAULT_OUT)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    return out


def _meta(args, spec, source, **extra):
    meta = {"command": args.command, **source, "version": __version__, "rho": spec.rho}
    if getattr(args, "nx", None) is not None:
        meta.update(nx=args.nx, nt=args.nt)
    meta.update(extra)
    return meta


def _ascent_meta(cfg: AscentConfig):
    return {"stop_tol": "1e-4*|J0|" if cfg.stop_tol is None else cfg.stop_tol,
            "max_iterations": cfg.max_iterations, "delta_max": cfg.delta_max,
            "stepper": cfg.scheme.stepper, "polish": cfg.polish}


def _label(theta):
    return repr(float(theta))


def cmd_solve_scalar(args, spec, source, out):
    cfg = AscentConfig(theta=args.theta, polish=not args.no_polish)
    meta = _meta(args, spec, source, theta=args.theta, **_ascent_meta(cfg))
    res = solve_model_I(spec, cfg, make_grids(spec, args.nx, args.nt))
    write_log_csv(out / "iterations.csv", res.log, meta)
    write_field_csv(out / "capital.csv", res.capital, meta)
    write_field_csv(out / "consumption.csv", res.consumption, meta)
    write_json(out / "scalar_result.json", {
        "theta": args.theta, "J1": res.criteria.j1, "J2": res.criteria.j2,
        "objective": res.objective, "iterations": res.iterations,
        "termination_reason": res.termination_reason, "polished": res.polished}, meta)
    return (f"theta={args.theta} J1={res.criteria.j1:.6g} J2={res.criteria.j2:.6g} "
            f"iterations={res.iterations} ({res.termination_reason})")


def cmd_frontier(args, spec, source, out):
    cfg = AscentConfig(polish=not args.no_polish)
    thetas = sorted(args.theta)
    meta = _meta(args, spec, source, theta=",".join(_label(t) for t in thetas), **_ascent_meta(cfg))
    front = trace_pareto_frontier(spec, thetas, cfg, make_grids(spec, args.nx, args.nt),
                                  workers=args.workers)
    write_frontier_csv(out / "frontier.csv", front, meta)
    for p in front.points:
        if p.result is not None:
            write_log_csv(out / f"iterations_theta_{_label(p.theta)}.csv", p.result.log,
                          {**meta, "theta": p.theta})
    failed = [p.theta for p in front.points if p.criteria is None]
    if failed:
        raise _SolverFailure(f"frontier points failed at theta={failed}")
    return f"frontier with {len(front.points)} points, {len(front.undominated())} undominated"


def cmd_solve_eps(args, spec, source, out):
    cfg = EpsConstraintConfig(args.orientation, args.epsilon)
    meta = _meta(args, spec, source, epsilon=args.epsilon, orientation=args.orientation,
                 mu0=cfg.mu0, growth=cfg.growth, feasibility_tol=cfg.feasibility_tol,
                 **_ascent_meta(cfg.inner))
    res = solve_model_II(spec, cfg, make_grids(spec, args.nx, args.nt))
    write_json(out / "eps_result.json", res.to_dict(), meta)
    write_field_csv(out / "capital.csv", res.capital, meta)
    write_field_csv(out / "consumption.csv", res.consumption, meta)
    return (f"{args.orientation} eps={args.epsilon} J1={res.criteria.j1:.6g} "
            f"J2={res.criteria.j2:.6g} feasible={res.feasible}")


def cmd_solve_aggregate(args, spec, source, out):
    agg = reduce_to_aggregate(spec, args.epsilon)
    sol = solve_bang_bang(agg)
    meta = _meta(args, spec, source, epsilon=args.epsilon, g=agg.g, K_M0=agg.K_M0)
    write_json(out / "aggregate_result.json", sol.to_dict(), meta)
    return (f"switch_points={list(sol.switch_points)} c={list(sol.c_values)} "
            f"payoff={sol.payoff:.6g} feasible={sol.feasible}")


def cmd_solve_gp(args, spec, source, out):
    if len(args.weights) != 4:
        raise ConfigError("--weights needs four values")
    agg = reduce_to_aggregate(spec)
    gp = GpSpec.from_aggregate(agg, args.g1, args.g2, args.steps, tuple(args.weights))
    meta = _meta(args, spec, source, g1=args.g1, g2=args.g2, steps=args.steps,
                 weights=",".join(_label(w) for w in args.weights))
    (out / "gp_lp.txt").write_text(discretize_gp(gp).dump())
    res = solve_model_III(gp)
    payload = res.to_dict()
    if not args.no_restore:
        payload["restored"] = restore_efficiency(gp, res).to_dict()
    write_json(out / "gp_result.json", payload, meta)
    return f"objective={res.objective:.6g} J1={res.criteria.j1:.6g} J2={res.criteria.j2:.6g}"


def cmd_oracle(args, spec, source, out):
    cls = ControlClass(args.blocks[0], args.blocks[1], tuple(args.levels))
    meta = _meta(args, spec, source, blocks=f"{cls.space_blocks}x{cls.time_blocks}",
                 levels=",".join(_label(v) for v in cls.levels))
    pts = enumerate_criteria(spec, cls, make_grids(spec, args.nx, args.nt))
    rows = cloud_rows(pts)
    write_cloud_csv(out / "cloud.csv", cls, rows, meta)
    return f"{len(rows)} controls, {sum(r[-1] for r in rows)} nondominated"


class _SolverFailure(RuntimeError):
    pass


COMMANDS = {
    "solve-scalar": cmd_solve_scalar,
    "frontier": cmd_frontier,
    "solve-eps": cmd_solve_eps,
    "solve-aggregate": cmd_solve_aggregate,
    "solve-gp": cmd_solve_gp,
    "oracle": cmd_oracle,
}

CONFIG_ERRORS = (ConfigError, SpecError, ReductionError, EnumerationCapError, FileNotFoundError,
                 ValueError)
SOLVER_ERRORS = (_SolverFailure, InstabilityError, DirectionError, GoalProgramError,
                 RuntimeError, ArithmeticError)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        if args.preset is not None and args.preset not in PRESETS:
            raise ConfigError(f"unknown preset {args.preset!r}; choose from {', '.join(PRESETS)}")
        if getattr(args, "nx", 3) < 3 or getattr(args, "nt", 1) < 1:
            raise ConfigError("grids need nx >= 3 and nt >= 1")
        spec, source = _spec(args)
        out = _outdir(args)
        summary = COMMANDS[args.command](args, spec, source, out)
    except SOLVER_ERRORS as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(summary)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
