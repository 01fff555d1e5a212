"""Command-line entry point: spaces, verify, tune, compare, plot."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .harness import Budget, KernelObjective, MeasureProtocol, SyntheticObjective, run_tuning
from .kernels import SIZE_NAMES, KernelCase, NumericalFailure, normalize_kernel, residual
from .persist import TraceParseError, best_of, format_config, read_trace, summarize, write_summary
from .plots import plot_min, plot_trace
from .space import all_configs, build_space, config_at, format_space, space_size
from .tuners import TUNER_KINDS

VERIFY_TOL = 1e-10
KERNEL_CHOICES = ("lu", "cholesky", "3mm", "mm3")


def _kernel_size(args) -> tuple[str, str]:
    kernel = args.kernel_opt or args.kernel
    size = args.size_opt or args.size
    if kernel is None:
        raise UsageError("a kernel is required (positional or --kernel)")
    return normalize_kernel(kernel), size or "large"


class UsageError(Exception):
    pass


def _add_target(p: argparse.ArgumentParser) -> None:
    p.add_argument("kernel", nargs="?", choices=KERNEL_CHOICES)
    p.add_argument("size", nargs="?", choices=SIZE_NAMES)
    p.add_argument("--kernel", dest="kernel_opt", choices=KERNEL_CHOICES)
    p.add_argument("--size", dest="size_opt", choices=SIZE_NAMES)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-evals", type=int, default=100)
    p.add_argument("--max-seconds", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--synthetic", action="store_true", help="use the analytic pseudo-runtime instead of timing kernels")
    p.add_argument("--reproducible", action="store_true",
                   help="zero timestamps; with --synthetic also use a simulated clock")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tiletuner", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spaces", help="print a search space and its size")
    _add_target(p)

    p = sub.add_parser("verify", help="check tiled kernels against the reference")
    _add_target(p)
    p.add_argument("--samples", type=int, default=64, help="configs to check; all when the space is smaller")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("tune", help="run one tuner")
    _add_target(p)
    p.add_argument("--tuner", choices=TUNER_KINDS, default="bayesopt")
    _add_run_flags(p)
    p.add_argument("--out", type=Path, default=None, help="trace file (default: <kernel>-<size>-<tuner>-seed<N>.csv)")

    p = sub.add_parser("compare", help="run all five tuners and write traces, summary and plots")
    _add_target(p)
    _add_run_flags(p)
    p.add_argument("--out", type=Path, default=Path("results"), help="output directory")

    p = sub.add_parser("plot", help="re-render plots from stored traces")
    p.add_argument("traces", nargs="+", type=Path)
    p.add_argument("--out", type=Path, required=True, help="scatter SVG path; the minimum chart goes next to it")
    return ap


def cmd_spaces(args) -> int:
    kernel, size = _kernel_size(args)
    print(format_space(build_space(kernel, size)))
    return 0


def cmd_verify(args) -> int:
    if args.samples < 1:
        raise UsageError("--samples must be positive")
    kernel, size = _kernel_size(args)
    space = build_space(kernel, size)
    total = space_size(space)
    if total <= args.samples:
        configs = all_configs(space)
    else:
        rng = np.random.default_rng(args.seed)
        picks = rng.choice(total, size=args.samples, replace=False)
        configs = [config_at(space, int(k)) for k in sorted(picks)]
    case = KernelCase.of(kernel, size, args.seed)
    inputs = case.inputs()
    failed = 0
    for cfg in configs:
        try:
            err = residual(kernel, inputs, case.run(cfg, inputs))
        except NumericalFailure:
            err = float("inf")
        ok = err <= VERIFY_TOL
        failed += not ok
        print(f"{kernel} {size} {format_config(cfg)} {err:.3e} {'PASS' if ok else 'FAIL'}")
    return 1 if failed else 0


def _objective(args, kernel, size, space):
    if args.synthetic:
        return SyntheticObjective(space)
    return KernelObjective(KernelCase.of(kernel, size, args.seed), MeasureProtocol.from_env())


def _run(args, kernel, size, tuner, out):
    space = build_space(kernel, size)
    return run_tuning(
        tuner,
        space,
        _objective(args, kernel, size, space),
        Budget(args.max_evals, args.max_seconds),
        args.seed,
        simulated_clock=args.reproducible and args.synthetic,
        reproducible=args.reproducible,
        trace_path=out,
    )


def _print_best(trace) -> None:
    cfg, rt = best_of(trace)
    print(f"{trace.tuner}: best {format_config(cfg)} runtime_s={rt:.6g} "
          f"evals={len(trace.records)} total_process_s={trace.total_process_s:.6g}")


def cmd_tune(args) -> int:
    if args.max_evals < 1:
        raise UsageError("--max-evals must be positive")
    kernel, size = _kernel_size(args)
    out = args.out or Path(f"{kernel}-{size}-{args.tuner}-seed{args.seed}.csv")
    trace = _run(args, kernel, size, args.tuner, out)
    _print_best(trace)
    print(f"trace written to {out}")
    return 0


def cmd_compare(args) -> int:
    if args.max_evals < 1:
        raise UsageError("--max-evals must be positive")
    kernel, size = _kernel_size(args)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    traces = []
    for tuner in TUNER_KINDS:
        path = out / f"{kernel}-{size}-{tuner}-seed{args.seed}.csv"
        traces.append(_run(args, kernel, size, tuner, path))
        _print_best(traces[-1])
    summary = summarize(traces)
    write_summary(summary, out / "summary.txt")
    plot_trace(traces, out / "process.svg")
    plot_min(summary, out / "minimum.svg")
    print(f"results written to {out}")
    return 0


def cmd_plot(args) -> int:
    traces = [read_trace(p) for p in args.traces]
    out: Path = args.out
    out.parent.mkdir(parents=True, exist_ok=True)
    plot_trace(traces, out)
    min_path = out.with_name(out.stem + "-min.svg")
    plot_min(summarize(traces), min_path)
    print(f"wrote {out} and {min_path}")
    return 0


COMMANDS = {
    "spaces": cmd_spaces,
    "verify": cmd_verify,
    "tune": cmd_tune,
    "compare": cmd_compare,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"tiletuner: error: {exc}", file=sys.stderr)
        return 2
    except (KeyError, ValueError, ArithmeticError, RuntimeError, TraceParseError, OSError) as exc:
        print(f"tiletuner: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
