"""Command-line entry point: generate, bench, verify, compare, phase.

Every command is deterministic given its flags (wall-clock columns aside).
Machine-readable output goes to stdout; ``--out DIR`` additionally writes
the same payload to files and renders the matching figure.

Exit codes: 0 success, 1 usage or config error, 2 infeasible degree
selection, 3 verification violations.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .errors import ConfigError, InsufficientData, RangeTooLarge, VarfastError
from .pipeline import ExecutionMode, run_end_to_end
from .scaling import BENCH_STAGES, bench_sweep, phase_sweep
from .tensors import TokenMap, inf_norm_diff
from .verify import verify_all

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_RANGE = 2
EXIT_VIOLATIONS = 3


def write_image_f64(image: TokenMap, path: Path):
    """ASCII `h w c` header line, then raw little-endian float64 entries."""
    with open(path, "wb") as fh:
        fh.write(f"{image.height} {image.width} {image.channels}\n".encode("ascii"))
        fh.write(image.data.astype("<f8").tobytes())


def read_image_f64(path: Path) -> TokenMap:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        h, w, c = (int(v) for v in header)
        data = np.frombuffer(fh.read(), dtype="<f8").reshape(h, w, c)
    return TokenMap(data)


def _json_dumps(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2)


def _bench_csv_lines(result):
    lines = ["K,n,L_K,mode,stage,mults,adds,exps,wall_ms"]
    for row in result.rows:
        lines.append(
            f"{row['K']},{row['n']},{row['L_K']},{row['mode']},{row['stage']},"
            f"{row['mults']},{row['adds']},{row['exps']},{row['wall_ms']:.3f}"
        )
    for stage in BENCH_STAGES:
        for mode in ("exact", "fast"):
            if (stage, mode) in result.slopes:
                lines.append(f"slope,{stage},{mode},{result.slopes[(stage, mode)].slope:.6f}")
    return lines


def _phase_csv_lines(rows):
    lines = ["c,R,b,g,status,err"]
    for r in rows:
        g = "" if r.degree is None else str(r.degree)
        err = "" if r.err is None else f"{r.err:.6e}"
        lines.append(f"{r.c:.6g},{r.r_bound:.6g},{r.score_bound:.6g},{g},{r.status},{err}")
    return lines


def cmd_generate(config: RunConfig, out_dir: Path) -> int:
    try:
        result = run_end_to_end(config)
    except RangeTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RANGE
    out_dir.mkdir(parents=True, exist_ok=True)
    write_image_f64(result.image, out_dir / "image.f64")
    (out_dir / "trace.json").write_text(_json_dumps(result.trace.as_dict()) + "\n")
    from .plots import plot_image

    plot_image(result.image, out_dir / "image.png")
    print(f"wrote {out_dir / 'image.f64'}, {out_dir / 'trace.json'}, {out_dir / 'image.png'}")
    return EXIT_OK


def cmd_bench(config: RunConfig, k_min: int, k_max: int, out_dir: Path | None) -> int:
    try:
        result = bench_sweep(config, k_min, k_max)
    except RangeTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RANGE
    except InsufficientData as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    csv_text = "\n".join(_bench_csv_lines(result)) + "\n"
    sys.stdout.write(csv_text)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "bench.csv").write_text(csv_text)
        from .plots import plot_bench

        plot_bench(result, out_dir / "bench_scaling.png")
    return EXIT_OK


def cmd_verify(config: RunConfig, trials: int, out_dir: Path | None) -> int:
    reports = verify_all(trials=trials, seed=config.seed, config=config)
    payload = {lemma: rep.as_dict() for lemma, rep in reports.items()}
    text = _json_dumps(payload) + "\n"
    sys.stdout.write(text)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "verify.json").write_text(text)
        from .plots import plot_verify

        plot_verify(reports, out_dir / "verify_ratios.png")
    if any(rep.violations for rep in reports.values()):
        return EXIT_VIOLATIONS
    return EXIT_OK


def cmd_compare(config: RunConfig, out_dir: Path | None) -> int:
    try:
        fast = run_end_to_end(config, ExecutionMode.FAST)
    except RangeTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RANGE
    exact = run_end_to_end(config, ExecutionMode.EXACT)
    diff = inf_norm_diff(fast.image, exact.image)
    bound = fast.trace.composed_bound
    payload = {
        "inf_norm_diff": diff,
        "composed_bound": bound,
        "pass": bool(diff <= bound),
    }
    text = _json_dumps(payload) + "\n"
    sys.stdout.write(text)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "compare.json").write_text(text)
    return EXIT_OK if payload["pass"] else EXIT_ERROR


def cmd_phase(config: RunConfig, n: int, c_list, out_dir: Path | None) -> int:
    try:
        rows = phase_sweep(n, c_list, config.delta, config.g_max, d=config.d, seed=config.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    csv_text = "\n".join(_phase_csv_lines(rows)) + "\n"
    sys.stdout.write(csv_text)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "phase.csv").write_text(csv_text)
        from .plots import plot_phase

        plot_phase(rows, out_dir / "phase_frontier.png")
    return EXIT_OK


def _add_config_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=Path, default=None, help="flat key=value config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--mode", choices=("exact", "fast"), default=None)
    parser.add_argument("--alpha", type=int, default=None)
    parser.add_argument("--num-scales", "-K", dest="num_scales", type=int, default=None)
    parser.add_argument("--d", type=int, default=None)
    parser.add_argument("--r-bound", dest="r_bound", type=float, default=None)
    parser.add_argument("--delta", type=float, default=None)
    parser.add_argument("--g-max", dest="g_max", type=int, default=None)
    parser.add_argument("--kernel", choices=("bspline", "catmullrom"), default=None)
    parser.add_argument("--decoder", choices=("default", "attn-only", "conv-only"), default=None)
    parser.add_argument("--out", type=Path, default=None, help="directory for files and figures")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="varfast",
        description="Next-scale autoregressive pipeline with exact and low-rank attention",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="run the pipeline, write image.f64 and trace.json")
    _add_config_flags(p_gen)

    p_bench = sub.add_parser("bench", help="op-count scaling sweep over pyramid depths")
    _add_config_flags(p_bench)
    p_bench.add_argument("--k-min", type=int, default=3)
    p_bench.add_argument("--k-max", type=int, default=6)

    p_verify = sub.add_parser("verify", help="run the error-bound suites")
    _add_config_flags(p_verify)
    p_verify.add_argument("--trials", type=int, default=1000)

    p_cmp = sub.add_parser("compare", help="fast vs exact end-to-end difference")
    _add_config_flags(p_cmp)

    p_phase = sub.add_parser("phase", help="degree feasibility frontier over the entry bound")
    _add_config_flags(p_phase)
    p_phase.add_argument("--n", type=int, default=4096)
    p_phase.add_argument(
        "--c-list",
        type=str,
        default=",".join(f"{0.05 * i:.2f}" for i in range(1, 41)),
        help="comma-separated ascending c values",
    )
    return parser


def _config_from_args(args, bench_command: bool = False) -> RunConfig:
    overrides = {
        "seed": args.seed,
        "alpha": args.alpha,
        "num_scales": args.num_scales,
        "d": args.d,
        "r_bound": args.r_bound,
        "delta": args.delta,
        "g_max": args.g_max,
        "kernel": args.kernel,
        "mode": args.mode,
        "decoder": args.decoder,
    }
    if bench_command and overrides["decoder"] is None and args.config is None:
        # the bench isolates the attention-driven decoder scaling by default
        overrides["decoder"] = "attn-only"
    return load_config(args.config, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            config = _config_from_args(args)
            return cmd_generate(config, args.out or Path("."))
        if args.command == "bench":
            config = _config_from_args(args, bench_command=True)
            if args.k_min < 2:
                print("error: --k-min must be at least 2", file=sys.stderr)
                return EXIT_ERROR
            return cmd_bench(config, args.k_min, args.k_max, args.out)
        if args.command == "verify":
            config = _config_from_args(args)
            if args.trials < 1:
                print("error: --trials must be positive", file=sys.stderr)
                return EXIT_ERROR
            return cmd_verify(config, args.trials, args.out)
        if args.command == "compare":
            config = _config_from_args(args)
            return cmd_compare(config, args.out)
        if args.command == "phase":
            config = _config_from_args(args)
            c_list = [float(v) for v in args.c_list.split(",") if v.strip()]
            return cmd_phase(config, args.n, c_list, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except VarfastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
