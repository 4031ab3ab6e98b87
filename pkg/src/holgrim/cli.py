"""Command-line entry point.

Exit codes: 0 success (for ``run``, the accuracy criterion holds at the
returned approximation), 1 any error, 2 ``run`` used every step without
meeting the criterion.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import io
from .algorithm import Config, run
from .bench import format_table, run_bench, scaling_ratios
from .errors import HolgrimError
from .geometry import (
    EXACT_PACKING_MAX,
    ThresholdQuery,
    closed_form_r,
    exact_packing,
    greedy_packing,
    grid_cover,
    solve_r,
    volumetric_bound,
)
from .problems import GeneratorSpec, gen_problem

EXIT_OK, EXIT_ERROR, EXIT_MAX_STEPS = 0, 1, 2


def _int_list(text: str) -> list[int] | int:
    parts = [p for p in text.replace(",", " ").split() if p]
    try:
        vals = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None
    return vals[0] if len(vals) == 1 else vals


def cmd_gen(args) -> int:
    spec = GeneratorSpec(
        kind=args.kind,
        n=args.n,
        d=args.d,
        c=args.c,
        gamma=args.gamma,
        size=args.size,
        cover_delta=args.cover_delta,
        width_range=(args.width_min, args.width_max),
        degree=args.degree,
        coefficients=args.coefficients,
        scaling=args.scaling,
        seed=args.seed,
    )
    problem = gen_problem(spec)
    io.save_dataset(args.out, problem)
    print(f"wrote {args.out}: n={problem.n} size={problem.domain.size} d={problem.d} c={problem.c} "
          f"gamma={problem.gamma} C={problem.C:.17g}")
    return EXIT_OK


def cmd_validate(args) -> int:
    problem = io.load_dataset(args.dataset)
    print(f"dataset ok: n={problem.n} size={problem.domain.size} d={problem.d} c={problem.c} gamma={problem.gamma}")
    if args.result:
        result = io.load_result(args.result)
        check = io.rescore(problem, result)
        reported = result["certificates"]["final_residual"]
        print(f"re-scored final residual {check['final_residual']:.17g} (reported {reported:.17g}), "
              f"max discrepancy {check['max_discrepancy']:.3g}")
        if check["max_discrepancy"] > 1e-12:
            print("error: re-scored residuals differ from the reported ones", file=sys.stderr)
            return EXIT_ERROR
    return EXIT_OK


def cmd_run(args) -> int:
    problem = io.load_dataset(args.dataset)
    cfg = Config(
        epsilon=args.epsilon,
        epsilon0=args.epsilon0,
        q=args.order_level,
        max_steps=args.max_steps,
        shuffles=args.shuffles,
        budgets=args.budgets,
        rng_seed=args.seed,
    )
    result = run(problem, cfg)
    if args.out:
        io.save_result(args.out, result, cfg, dataset=str(args.dataset))
    print(f"steps {result.steps_completed} ({result.stop_reason}), support {len(result.support)}, "
          f"final residual {result.final_residual:.6g}, "
          f"criterion {cfg.epsilon / (problem.c * problem.d ** cfg.q):.6g}")
    print(f"coefficient sum {result.coefficient_sum:.17g} vs C {result.C:.17g}")
    print(f"final max Lambda^q {result.final_lambda_q:.6g}, min separation {result.min_separation:.6g}")
    for rep in result.reports:
        print(f"warning: step {rep['step']} recombination residual {rep['achieved_residual']:.3g} "
              f"above floor {rep['floor']:.3g}", file=sys.stderr)
    return EXIT_OK if result.criterion_met else EXIT_MAX_STEPS


def cmd_cover(args) -> int:
    dom = grid_cover(args.d, args.delta)
    if args.out:
        io.save_points(args.out, dom)
    print(f"{dom.size} points, spacing {1 / round(dom.size ** (1 / args.d)):.6g}")
    return EXIT_OK


def cmd_pack(args) -> int:
    dom = io.load_domain(args.dataset)
    print(f"greedy {len(greedy_packing(dom, args.r))}")
    if dom.size <= EXACT_PACKING_MAX:
        print(f"exact {exact_packing(dom, args.r)}")
    else:
        print(f"exact skipped (size {dom.size} > {EXACT_PACKING_MAX})")
    inside = np.all((dom.points >= 0) & (dom.points <= 1))
    if inside and args.r < 1:
        print(f"volumetric {volumetric_bound(dom.d, args.r):.17g}")
    return EXIT_OK


def cmd_rsolve(args) -> int:
    query = ThresholdQuery(args.C, args.gamma, args.epsilon, args.epsilon0, args.c, args.d, args.q)
    r = solve_r(query)
    print(f"r {r:.17g}")
    if args.epsilon0 == 0:
        print(f"closed form {closed_form_r(query):.17g}")
    return EXIT_OK


def cmd_bench(args) -> int:
    rows = run_bench(
        feature_counts=args.features,
        point_counts=args.points,
        fixed_size=args.fixed_size,
        fixed_n=args.fixed_n,
        steps=args.steps,
        budget=args.budget,
        repeats=args.repeats,
        seed=args.seed,
    )
    print(format_table(rows))
    if args.features:
        print("features time/linear: " + " ".join(f"{v:.2f}" for v in scaling_ratios(rows, "features")))
    if args.points:
        print("points time/linear:   " + " ".join(f"{v:.2f}" for v in scaling_ratios(rows, "points")))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1; code 2 is reserved for max-steps exits."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="holgrim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--kind", choices=["gaussian", "polynomial"], default="gaussian")
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--c", type=int, default=1)
    p.add_argument("--gamma", type=float, default=2.0)
    p.add_argument("--size", type=int, default=100, help="number of random points")
    p.add_argument("--cover-delta", type=float, default=None, help="use a grid cover of [0,1]^d instead")
    p.add_argument("--width-min", type=float, default=0.2)
    p.add_argument("--width-max", type=float, default=0.6)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--coefficients", choices=["signed", "positive"], default="signed")
    p.add_argument("--scaling", choices=["lip", "analytic"], default="lip")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("validate", help="check a dataset and optionally re-score a result")
    p.add_argument("dataset")
    p.add_argument("--result", default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run the selection algorithm on a dataset")
    p.add_argument("dataset")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--epsilon0", type=float, default=0.0)
    p.add_argument("--order-level", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=10)
    p.add_argument("--shuffles", type=_int_list, default=1, help="one count, or one per step")
    p.add_argument("--budgets", type=_int_list, default=1, help="one count, or one per step")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("cover", help="grid cover of [0,1]^d")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_cover)

    p = sub.add_parser("pack", help="packing sizes of a point set")
    p.add_argument("dataset", help="dataset or point-set file")
    p.add_argument("--r", type=float, required=True)
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("rsolve", help="separation radius threshold")
    p.add_argument("--C", type=float, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--epsilon0", type=float, default=0.0)
    p.add_argument("--c", type=int, default=1)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--q", type=int, default=0)
    p.set_defaults(func=cmd_rsolve)

    p = sub.add_parser("bench", help="fixed-step timing sweep")
    p.add_argument("--features", type=lambda s: [int(x) for x in s.split(",") if x], default=[1000, 2000, 4000])
    p.add_argument("--points", type=lambda s: [int(x) for x in s.split(",") if x], default=[50, 100, 200])
    p.add_argument("--fixed-size", type=int, default=400)
    p.add_argument("--fixed-n", type=int, default=1000)
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--budget", type=int, default=2)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (HolgrimError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
