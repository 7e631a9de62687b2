"""
Command-line front end

    catalog list [--tag TAG]
    construct --recipe FILE [--out FILE]
    verify (--id ID | --recipe FILE) [--samples N] [--tol T] [--seed S] [--perturb EPS] [--box VAR=LO:HI] [--fd]
    solve --config FILE --out-dir DIR
    ode --A A --B B [--f0 ..] [--eta-range LO HI] [--step H]

JSON goes to stdout with sorted keys; logs go to stderr.
Exit codes: 0 pass, 1 verification failure, 2 usage or config error,
3 empty or degenerate result.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from src.analytic.sexpr import to_sexpr
from src.catalog import build_catalog
from src.config import config
from src.errors import EXIT_FAIL, EXIT_OK, EXIT_USAGE, FastDiffError, UsageError
from src.models import Recipe, SolveConfig, load_model
from src.solver.convergence import run_ladder, summarize
from src.solver.ode import check_printed_reduction, integrate_ode22, self_convergence_ratio
from src.verify import fd_residual, run_sweep

logger = logging.getLogger(__name__)


def _dump(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2)


def _emit(payload: Any, out: Optional[str] = None) -> None:
    text = _dump(payload)
    if out:
        Path(out).write_text(text + "\n")
        logger.info(f"✅ Written {out}")
    else:
        print(text)


def _parse_boxes(items: Optional[Sequence[str]]) -> Dict[str, tuple]:
    boxes = {}
    for item in items or ():
        try:
            name, bounds = item.split("=", 1)
            lo, hi = (float(b) for b in bounds.split(":", 1))
        except ValueError:
            raise UsageError(f"--box expects VAR=LO:HI, got '{item}'") from None
        boxes[name.strip()] = (lo, hi)
    return boxes


# ================================
# COMMANDS
# ================================

def cmd_catalog_list(args) -> int:
    _emit(build_catalog().list(args.tag))
    return EXIT_OK


def cmd_construct(args) -> int:
    recipe = load_model(Recipe, args.recipe)
    entry = recipe.build()
    field = entry.field
    _emit({
        "equation_tag": entry.equation_tag,
        "expression": to_sexpr(field.expr),
        "variables": list(field.variables),
        "provenance": list(field.provenance),
        "singular_set": field.singular_set.describe(),
    }, args.out)
    return EXIT_OK


def _resolve_target(args):
    if args.recipe:
        recipe = load_model(Recipe, args.recipe)
        entry = recipe.build()
        return entry, recipe.sample.box, recipe.sample.count, recipe.sample.seed
    return build_catalog().get(args.id), None, None, None


def cmd_verify(args) -> int:
    entry, recipe_box, recipe_count, recipe_seed = _resolve_target(args)
    box = dict(recipe_box or entry.domain)
    box.update(_parse_boxes(args.box))
    seed = args.seed if args.seed is not None else recipe_seed
    spec = entry.sample_spec(recipe_count, seed, box)
    if args.samples:
        spec = spec.with_count(args.samples)

    field = entry.field.perturbed(args.perturb) if args.perturb else entry.field
    equation = entry.equation()
    report = fd_residual(equation, field, spec) if args.fd else run_sweep(equation, field, spec)
    print(report.to_json())

    tol = config.RESIDUAL_THRESHOLD if args.tol is None else args.tol
    if report.passed(tol):
        logger.info(f"✅ {entry.id}: max_rel={report.max_rel:.3e} < {tol:g}")
        return EXIT_OK
    if report.n_nonfinite:
        logger.warning(f"❌ {entry.id}: {report.n_nonfinite} samples undefined outside the singular set")
    else:
        logger.warning(f"❌ {entry.id}: max_rel={report.max_rel:.3e} >= {tol:g}")
    return EXIT_FAIL


def cmd_solve(args) -> int:
    solve = load_model(SolveConfig, args.config)
    plan, exact = solve.resolve()
    runs = run_ladder(plan, exact, solve.ladder)
    report = summarize(plan, [level for level, _ in runs])

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _, finest = runs[-1]
    finest.to_frame().to_csv(out_dir / "grid.csv", index=False)
    (out_dir / "convergence_report.json").write_text(report.to_json() + "\n")
    print(report.to_json())
    logger.info(f"✅ Grid and report written to {out_dir}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_ode(args) -> int:
    initial = [args.f0, args.df0, args.psi0, args.dpsi0, args.phi0, args.dphi0]
    trajectory = integrate_ode22(initial, args.A, args.B, tuple(args.eta_range), args.step)
    payload: Dict[str, Any] = {"A": args.A, "B": args.B, "trajectory": trajectory.report()}
    if not trajectory.blew_up:
        payload["self_convergence_ratio"] = self_convergence_ratio(
            initial, args.A, args.B, tuple(args.eta_range), args.step)
    if args.B == -args.A:
        check = check_printed_reduction(args.A, args.f0, args.df0, tuple(args.eta_range), args.step)
        payload["reduction"] = check.model_dump()
    _emit(payload)
    return EXIT_FAIL if trajectory.blew_up else EXIT_OK


# ================================
# PARSER
# ================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fastdiff",
        description="Exact solutions of fast diffusion and Liouville equations, residual oracles and solvers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    catalog = sub.add_parser("catalog", help="catalog queries")
    catalog_sub = catalog.add_subparsers(dest="action", required=True)
    listing = catalog_sub.add_parser("list", help="list catalog entries as JSON")
    listing.add_argument("--tag", help="only entries with this equation tag")
    listing.set_defaults(handler=cmd_catalog_list)

    construct = sub.add_parser("construct", help="build a solution from a recipe")
    construct.add_argument("--recipe", required=True, help="recipe JSON file")
    construct.add_argument("--out", help="write the result here instead of stdout")
    construct.set_defaults(handler=cmd_construct)

    verify = sub.add_parser("verify", help="residual sweep of a catalog entry or recipe")
    target = verify.add_mutually_exclusive_group(required=True)
    target.add_argument("--id", help="catalog id")
    target.add_argument("--recipe", help="recipe JSON file")
    verify.add_argument("--samples", type=int, help="number of samples")
    verify.add_argument("--tol", type=float, help="pass threshold on max_rel")
    verify.add_argument("--seed", type=int, help="sampling seed (default: env FASTDIFF_SEED)")
    verify.add_argument("--perturb", type=float, default=0.0, help="add EPS to the field (negative control)")
    verify.add_argument("--box", action="append", metavar="VAR=LO:HI", help="override one sampling interval")
    verify.add_argument("--fd", action="store_true", help="finite-difference derivatives")
    verify.set_defaults(handler=cmd_verify)

    solve = sub.add_parser("solve", help="manufactured-solution solver run")
    solve.add_argument("--config", required=True, help="solver config JSON file")
    solve.add_argument("--out-dir", required=True, help="directory for grid.csv and convergence_report.json")
    solve.set_defaults(handler=cmd_solve)

    ode = sub.add_parser("ode", help="integrate the charge-transfer ODE system")
    ode.add_argument("--A", type=float, required=True)
    ode.add_argument("--B", type=float, required=True)
    for name, default in (("f0", 0.0), ("df0", 0.0), ("psi0", 0.0), ("dpsi0", 0.0), ("phi0", 0.0), ("dphi0", 1.0)):
        ode.add_argument(f"--{name}", type=float, default=default)
    ode.add_argument("--eta-range", type=float, nargs=2, default=(0.0, 1.0), metavar=("LO", "HI"))
    ode.add_argument("--step", type=float, default=1e-2)
    ode.set_defaults(handler=cmd_ode)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(
        level=logging.DEBUG if config.DEBUG else config.LOG_LEVEL,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except FastDiffError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        print(f"error: invalid input: {e.errors()[0]['msg']}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
