"""Command-line interface.

Subcommands:

    distributions   bright/dark count tables, threshold and error rates
    errors          threshold and misidentification probabilities only
    benchmark       ensemble tomography comparison (fuzzy vs standard model)

Flag names spell out the underlying symbols: --lambda is the dark-level decay
intensity (1/T1), --lambda-b the bright fluorescence intensity, --lambda-d the
detector dark/background intensity, --t the detection time. Defaults are the
reference operating point t=1, lambda=0.001, lambda_d=0.2, lambda_b=25.

Report-writing paths also render a PNG figure next to the data file unless
--no-plot is given. Relative output paths resolve under $IONTOMO_OUTPUT_DIR
when that variable is set. Outputs are byte-identical across repeated runs
with the same flags; --timestamp opts into embedding a generation time.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from .bench import (
    BenchmarkConfig,
    run_distribution_study,
    run_tomography_benchmark,
    write_benchmark_csv,
)
from .photon_stats import FluorescenceParams, IndistinguishableError

__all__ = ["main", "build_parser"]

OUTPUT_DIR_ENV = "IONTOMO_OUTPUT_DIR"


def _add_fluorescence_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--t", type=float, default=1.0, help="detection time (default 1)")
    parser.add_argument("--lambda", dest="lam", type=float, default=0.001,
                        help="dark-level decay intensity 1/T1 (default 0.001)")
    parser.add_argument("--lambda-d", dest="lam_d", type=float, default=0.2,
                        help="detector dark/background intensity (default 0.2)")
    parser.add_argument("--lambda-b", dest="lam_b", type=float, default=25.0,
                        help="bright fluorescence intensity (default 25)")


def _add_output_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--output", type=str, default=None, help="output file path")
    parser.add_argument("--digits", type=int, default=6,
                        help="significant digits for printed floats (default 6)")
    parser.add_argument("--no-plot", action="store_true",
                        help="skip rendering the companion figure")
    parser.add_argument("--timestamp", action="store_true",
                        help="embed the generation time in JSON reports")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iontomo",
        description="Fluorescence-readout statistics and fuzzy-measurement tomography")
    sub = parser.add_subparsers(dest="command", required=True)

    p_dist = sub.add_parser("distributions",
                            help="bright/dark count distributions, threshold, error rates")
    _add_fluorescence_flags(p_dist)
    p_dist.add_argument("--format", choices=("json", "csv"), default="json",
                        help="output format (default json)")
    p_dist.add_argument("--bright-includes-noise", action="store_true",
                        help="add detector noise counts to the bright channel")
    _add_output_flags(p_dist)

    p_err = sub.add_parser("errors", help="threshold and misidentification probabilities")
    _add_fluorescence_flags(p_err)
    p_err.add_argument("--bright-includes-noise", action="store_true",
                       help="add detector noise counts to the bright channel")
    _add_output_flags(p_err)

    p_bench = sub.add_parser("benchmark", help="ensemble tomography benchmark")
    p_bench.add_argument("--qubits", type=int, default=2, help="number of qubits (default 2)")
    p_bench.add_argument("--states", type=int, default=50,
                         help="number of Haar-random states (default 50)")
    p_bench.add_argument("--shots", type=int, default=10**6,
                         help="sample size (default 1e6)")
    p_bench.add_argument("--shots-mode", choices=("total", "per_basis"), default="total",
                         help="split --shots over all bases, or use it per basis (default total)")
    p_bench.add_argument("--p10", type=float, default=None,
                         help="bright-read-as-dark probability; omit to derive from the "
                              "fluorescence flags")
    p_bench.add_argument("--p01", type=float, default=None,
                         help="dark-read-as-bright probability")
    p_bench.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p_bench.add_argument("--rank", type=int, default=1,
                         help="reconstruction rank; 0 means full rank (default 1, pure states)")
    _add_fluorescence_flags(p_bench)
    _add_output_flags(p_bench)
    return parser


def _resolve_output(path_str: str) -> Path:
    path = Path(path_str)
    if not path.is_absolute():
        base = os.environ.get(OUTPUT_DIR_ENV)
        if base:
            path = Path(base) / path
    return path


def _fmt(value: float, digits: int) -> str:
    return f"{value:.{digits}g}"


def _timestamp(enabled: bool) -> str | None:
    return datetime.now(timezone.utc).isoformat() if enabled else None


def _write_json(payload: dict, path: Path, timestamp: str | None) -> None:
    if timestamp is not None:
        payload = dict(payload, generated_at=timestamp)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n")


def _cmd_distributions(args) -> int:
    params = FluorescenceParams(t=args.t, lam=args.lam, lam_b=args.lam_b, lam_d=args.lam_d)
    study = run_distribution_study(params, bright_includes_noise=args.bright_includes_noise)
    em = study.error_model
    print(f"k0={em.k0} p10={_fmt(em.p10, args.digits)} p01={_fmt(em.p01, args.digits)}")
    if args.output is None:
        return 0
    out = _resolve_output(args.output)
    if args.format == "json":
        _write_json(study.to_dict(), out, _timestamp(args.timestamp))
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        n = max(study.bright.pmf.size, study.dark.pmf.size)
        with out.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "p_bright", "p_dark"])
            for k in range(n):
                pb = study.bright.pmf[k] if k < study.bright.pmf.size else 0.0
                pd = study.dark.pmf[k] if k < study.dark.pmf.size else 0.0
                writer.writerow([k, repr(float(pb)), repr(float(pd))])
    if not args.no_plot:
        from .plots import save_distribution_figure
        save_distribution_figure(study, out.with_suffix(".png"))
    return 0


def _cmd_errors(args) -> int:
    params = FluorescenceParams(t=args.t, lam=args.lam, lam_b=args.lam_b, lam_d=args.lam_d)
    study = run_distribution_study(params, bright_includes_noise=args.bright_includes_noise)
    em = study.error_model
    print(f"k0={em.k0} p10={_fmt(em.p10, args.digits)} p01={_fmt(em.p01, args.digits)}")
    if args.output is not None:
        out = _resolve_output(args.output)
        _write_json({"params": params.to_dict(), **em.to_dict()}, out, _timestamp(args.timestamp))
        if not args.no_plot:
            from .plots import save_distribution_figure
            save_distribution_figure(study, out.with_suffix(".png"))
    return 0


def _cmd_benchmark(args) -> int:
    fluorescence = None
    if args.p10 is None and args.p01 is None:
        fluorescence = FluorescenceParams(t=args.t, lam=args.lam, lam_b=args.lam_b,
                                          lam_d=args.lam_d)
    out = _resolve_output(args.output) if args.output else None
    config = BenchmarkConfig(
        n_qubits=args.qubits,
        n_states=args.states,
        shots=args.shots,
        shots_mode=args.shots_mode,
        p10=args.p10,
        p01=args.p01,
        fluorescence=fluorescence,
        master_seed=args.seed,
        output_path=None,  # writing handled here so --timestamp/--no-plot apply
        rank=None if args.rank == 0 else args.rank,
    )
    report = run_tomography_benchmark(config)
    s = report.summary
    print(f"mean_infidelity_standard={_fmt(s['standard']['mean'], args.digits)} "
          f"mean_infidelity_fuzzy={_fmt(s['fuzzy']['mean'], args.digits)} "
          f"ratio={_fmt(s['ratio'], args.digits)}")
    if out is not None:
        report.save(out, timestamp=_timestamp(args.timestamp))
        write_benchmark_csv(report, out.with_suffix(".csv"))
        if not args.no_plot:
            from .plots import save_benchmark_figure
            save_benchmark_figure(report, out.with_suffix(".png"))
    return 0


_COMMANDS = {
    "distributions": _cmd_distributions,
    "errors": _cmd_errors,
    "benchmark": _cmd_benchmark,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, IndistinguishableError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
