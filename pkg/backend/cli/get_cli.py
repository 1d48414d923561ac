# backend/cli/get_cli.py

import argparse
import json
import logging
import sys
from typing import List, Optional

from config import LOG_LEVEL
from errors import (
    ConfigError,
    DefinitionError,
    OptimizationError,
    ProjectionError,
    SingularSystemError,
)
from optimizer.history import STAGES
from postprocess.evaluation import DesignEvaluation
from problems.benchmarks import BENCHMARK_NAMES
from runner.bench import STUDIES, run_study
from runner.orchestrate import evaluate_design, post_from_design, run_from_config
from runner.settings import (
    EXPORT_NAMES,
    RunConfig,
    apply_overrides,
    load_config,
    optimizer_settings,
    parse_mesh,
    projection_params,
    resolve_problem,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _print_timing(means: dict, shares: dict) -> None:
    print("\n--- Stage Timing (mean per iteration) ---")
    for stage in STAGES:
        print(f"{stage.upper():16s}: {means[stage]:.4f} s ({100 * shares[stage]:.2f}%)")


def _print_evaluation(evaluation: DesignEvaluation) -> None:
    d = evaluation.to_dict()
    print(f"Mesh            : {'x'.join(map(str, d['resolution']))}")
    print(f"Objective       : {d['objective']:.6g}")
    print(f"V_f             : {d['volume_fraction']:.6f}")
    print(f"M_nd            : {d['nondiscreteness']:.4f}%")
    print(f"Binary objective: {d['binary_objective']:.6g}")
    print(f"Binary V_f      : {d['binary_volume_fraction']:.6f}")


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.config:
        config = load_config(args.config)
    elif args.benchmark:
        config = RunConfig(benchmark=args.benchmark)
    else:
        raise ConfigError("give --benchmark or --config")
    return apply_overrides(
        config,
        benchmark=args.benchmark if args.config else None,
        iters=args.iters,
        epsilon=args.epsilon,
        threshold=args.threshold,
        layout=args.layout,
        mesh=args.mesh,
        out=args.out,
        exports=args.export,
    )


def cmd_run(args: argparse.Namespace) -> int:
    """Optimize one problem and write its artifacts."""
    config = _config_from_args(args)
    outcome = run_from_config(config)
    result = outcome.result
    state = result.final_state

    print("\n=== GET Run ===")
    print(f"Problem         : {result.context.full_problem.name}")
    print(f"Mesh            : {'x'.join(map(str, result.context.mesh.resolution))}")
    print(f"Fields (active) : {len(result.ensemble)} ({result.active_count})")
    print(f"Iterations      : {result.iterations}{' (converged)' if result.converged else ''}")
    if state is not None:
        print(f"Objective       : {state.objective:.6g}")
        print(f"V_f             : {state.volume_fraction:.6f}")
    print(f"Output          : {config.out}")
    for name in sorted(outcome.paths):
        print(f"  {name:14s}: {outcome.paths[name]}")

    if result.history.has_timing:
        _print_timing(result.history.mean_stage_times(), result.history.stage_shares())

    for evaluation in outcome.evaluations:
        print("\n--- Cross-mesh Evaluation ---")
        _print_evaluation(evaluation)
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    """Re-evaluate a saved design on another mesh."""
    resolution = parse_mesh(args.mesh) if args.mesh else None
    evaluation = evaluate_design(args.design, resolution)
    print("\n=== Design Evaluation ===")
    print(f"Design          : {args.design}")
    _print_evaluation(evaluation)
    return EXIT_OK


def cmd_post(args: argparse.Namespace) -> int:
    """Regenerate exports from design.json."""
    exports = args.export or [e for e in EXPORT_NAMES if e != "stress"]
    paths = post_from_design(args.design, args.out, exports, threshold=args.threshold)
    print("\n=== Post-processing ===")
    for name in sorted(paths):
        print(f"{name:16s}: {paths[name]}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    """Run one or all parameter studies."""
    config = _config_from_args(args)
    problem = resolve_problem(config)
    params = projection_params(config)
    settings = optimizer_settings(config)
    meshes = [parse_mesh(m) for m in args.meshes] if args.meshes else None

    names = list(STUDIES) if args.study == "all" else [args.study]
    for name in names:
        frame, path = run_study(name, problem, config.out, params, settings, meshes)
        print(f"\n=== Study: {name} ===")
        print(frame.to_string(index=False))
        print(f"Written         : {path}")
    return EXIT_OK


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--benchmark",
        choices=BENCHMARK_NAMES,
        help="Named benchmark problem",
    )
    p.add_argument(
        "--config",
        help="JSON run configuration (flags override its keys)",
    )
    p.add_argument(
        "--iters",
        type=int,
        help="Maximum optimizer iterations",
    )
    p.add_argument(
        "--epsilon",
        type=float,
        help="Heaviside band half-width (default: 0.02)",
    )
    p.add_argument(
        "--threshold",
        type=float,
        help="Cut-off threshold T (default: 0.5)",
    )
    p.add_argument(
        "--layout",
        help="Initial layout NXxNYxK (2D) or NXxNYxNZxK (3D), K fields per cell",
    )
    p.add_argument(
        "--mesh",
        help="Mesh resolution NXxNY or NXxNYxNZ",
    )
    p.add_argument(
        "--out",
        help="Output directory (default: runs/get)",
    )
    p.add_argument(
        "--export",
        nargs="+",
        choices=EXPORT_NAMES,
        help="Artifacts to write (default: all but stress)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="get",
        description="Gaussian ensemble topology optimization",
    )

    subparsers = parser.add_subparsers(dest="command", required=True)

    # -------
    # run cmd
    # -------
    p_run = subparsers.add_parser(
        "run",
        help="Optimize a benchmark or configured problem",
    )
    _add_run_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    # ------------
    # evaluate cmd
    # ------------
    p_eval = subparsers.add_parser(
        "evaluate",
        help="Re-evaluate a saved design.json on another mesh",
    )
    p_eval.add_argument(
        "design",
        help="Path to design.json",
    )
    p_eval.add_argument(
        "--mesh",
        help="Evaluation mesh NXxNY[xNZ] (default: the design's own mesh)",
    )
    p_eval.set_defaults(func=cmd_evaluate)

    # --------
    # post cmd
    # --------
    p_post = subparsers.add_parser(
        "post",
        help="Regenerate exports from a saved design.json",
    )
    p_post.add_argument(
        "design",
        help="Path to design.json",
    )
    p_post.add_argument(
        "--out",
        help="Output directory (default: next to design.json)",
    )
    p_post.add_argument(
        "--threshold",
        type=float,
        help="Re-project at another threshold T",
    )
    p_post.add_argument(
        "--export",
        nargs="+",
        choices=EXPORT_NAMES,
        help="Artifacts to write (default: all but stress)",
    )
    p_post.set_defaults(func=cmd_post)

    # ---------
    # bench cmd
    # ---------
    p_bench = subparsers.add_parser(
        "bench",
        help="Parameter studies: Gaussian count, epsilon, threshold, mesh independence, timing",
    )
    p_bench.add_argument(
        "study",
        choices=list(STUDIES) + ["all"],
        help="Study to run",
    )
    _add_run_flags(p_bench)
    p_bench.add_argument(
        "--meshes",
        nargs="+",
        help="Meshes for the mesh and timing studies (default: 100x50 200x100 1000x500)",
    )
    p_bench.set_defaults(func=cmd_bench, benchmark_default="cantilever2d")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=LOG_LEVEL, format="%(asctime)s - %(levelname)s - %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "bench" and not args.benchmark and not args.config:
        args.benchmark = args.benchmark_default

    try:
        return args.func(args)
    except (ConfigError, DefinitionError, ProjectionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OptimizationError as exc:
        print(f"error: optimization failed at {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SingularSystemError as exc:
        print(f"error: singular system: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
