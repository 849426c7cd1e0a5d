"""Command-line entry point for the full pipeline.

Subcommands: synth, process, profile, inspect, reconstruct, agree, quality,
serve.  Every subcommand is deterministic given its flags and seed, exits 0
on success, and prints a one-line diagnostic to stderr on failure.
"""

from __future__ import annotations

import argparse
import sys

from .codebook import open_codebook, write_codebook
from .dedup import BlockSpec, deduplicate
from .errors import EnsbookError
from .metrics import compare_codebook
from .model import load_manifest, write_volume
from .profiler import default_parameter_grid, profile
from .reduction import ReductionConfig
from .report import profile_table, quality_table, write_profile_report, write_quality_report
from .runtime import WorkingSet, compute_agreement
from .synth import generate_synthetic_ensemble


def _triple(text: str) -> tuple[int, int, int]:
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected XxYxZ, got {text!r}")
    try:
        dims = tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers in {text!r}")
    if any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError(f"dims must be >= 1, got {text!r}")
    return dims


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ensbook",
        description="Deduplicating codebook storage and streaming "
        "reconstruction for ensemble volume data.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log telemetry")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic ensemble")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--timesteps", type=int, required=True)
    p.add_argument("--dims", type=_triple, required=True, metavar="XxYxZ")
    p.add_argument("--dup-rate", type=float, required=True,
                   help="fraction of block-aligned regions identical across runs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--perturb", type=float, default=0.1,
                   help="per-run perturbation amplitude")

    p = sub.add_parser("process", help="deduplicate an ensemble into a codebook")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="codebook file to write")
    p.add_argument("--block-size", type=_triple, required=True, metavar="XxYxZ")
    p.add_argument("--decimals", type=int, required=True,
                   help="decimal places rounded before hashing (may be negative)")
    p.add_argument("--reduce", choices=("none", "pca", "wavelet"), default="none")
    p.add_argument("--components", type=int, help="PCA components kept")
    p.add_argument("--quality", type=float, help="wavelet quality in [0, 100]")
    p.add_argument("--fill-value", type=float, default=0.0)

    p = sub.add_parser("profile", help="estimate codebook sizes from samples")
    p.add_argument("--manifest", required=True)
    p.add_argument("--coverage", type=float, default=0.10)
    p.add_argument("--best", type=int, default=3)
    p.add_argument("--grid", choices=("default",), default="default")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reduce", choices=("none", "pca", "wavelet"), default="pca")
    p.add_argument("--report", help="directory for profile.csv + figure")

    p = sub.add_parser("inspect", help="print codebook header and sizes")
    p.add_argument("--codebook", required=True)

    p = sub.add_parser("reconstruct", help="rebuild one volume to a raw file")
    p.add_argument("--codebook", required=True)
    p.add_argument("--run", type=int, required=True)
    p.add_argument("--timestep", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("agree", help="write the agreement grid for a timestep")
    p.add_argument("--codebook", required=True)
    p.add_argument("--run", type=int, required=True, help="reference run")
    p.add_argument("--timestep", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("quality", help="compare a codebook against its source")
    p.add_argument("--manifest", required=True)
    p.add_argument("--codebook", required=True)
    p.add_argument("--sample", type=int, help="number of volumes to compare")
    p.add_argument("--report", help="directory for quality.csv + figure")

    p = sub.add_parser("serve", help="serve a codebook over HTTP")
    p.add_argument("--codebook", required=True)
    p.add_argument("--port", type=int, default=8797)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--budget-mb", type=float, help="per-session block byte budget")
    p.add_argument("--max-sessions", type=int, default=64)
    p.add_argument("--static", help="directory with the viewer bundle")

    return parser


def _reduction_from_args(args) -> ReductionConfig:
    if args.components is not None and args.reduce != "pca":
        raise ValueError("--components only applies with --reduce pca")
    if args.quality is not None and args.reduce != "wavelet":
        raise ValueError("--quality only applies with --reduce wavelet")
    if args.reduce == "pca":
        if args.components is None:
            raise ValueError("--reduce pca needs --components")
        return ReductionConfig("pca", components=args.components)
    if args.reduce == "wavelet":
        if args.quality is None:
            raise ValueError("--reduce wavelet needs --quality")
        return ReductionConfig("wavelet", quality=args.quality)
    return ReductionConfig("none")


def _cmd_synth(args) -> int:
    manifest = generate_synthetic_ensemble(
        args.out,
        runs=args.runs,
        timesteps=args.timesteps,
        dims=args.dims,
        duplication_rate=args.dup_rate,
        perturbation=args.perturb,
        seed=args.seed,
    )
    print(f"wrote {manifest.shape.volume_count} volumes to {args.out}")
    print(f"manifest: {manifest.source_path}")
    print(f"value_peak: {manifest.shape.value_peak:.6g}")
    return 0


def _cmd_process(args) -> int:
    config = _reduction_from_args(args)
    spec = BlockSpec(args.block_size, args.decimals, args.fill_value)
    config.check_block_dims(spec.block_dims)
    manifest = load_manifest(args.manifest)
    total = manifest.shape.volume_count

    def progress(done: int, b_rem: int) -> None:
        if args.verbose:
            print(f"  volume {done}/{total}, unique blocks {b_rem}", file=sys.stderr)

    dedup = deduplicate(manifest, spec, progress=progress)
    summary = write_codebook(dedup, config, args.out)
    gd = dedup.grid
    print(f"codebook: {summary.path}")
    print(f"volume dims: {'x'.join(map(str, manifest.shape.dims))}")
    print(f"block size: {'x'.join(map(str, spec.block_dims))}, decimals {spec.decimals}")
    print(f"grid dims: {gd[0]}x{gd[1]}x{gd[2]}")
    print(f"reduction: {config.label}")
    print(f"blocks: {dedup.b_rem} unique of {dedup.b_tot} "
          f"({dedup.b_rem / dedup.b_tot:.4f})")
    for name, size in summary.sections().items():
        print(f"{name} bytes: {size}")
    print(f"file bytes: {summary.file_size}")
    return 0


def _cmd_profile(args) -> int:
    manifest = load_manifest(args.manifest)
    estimates = profile(
        manifest,
        parameter_grid=default_parameter_grid(args.reduce),
        coverage=args.coverage,
        seed=args.seed,
        n_best=None,
        reduction_kind=args.reduce,
    )
    print(profile_table(estimates[: args.best]))
    if args.report:
        paths = write_profile_report(estimates, args.report)
        print(f"report: {paths['csv']} {paths['figure']}")
    return 0


def _cmd_inspect(args) -> int:
    with open_codebook(args.codebook) as reader:
        h = reader.header
        print(f"codebook: {args.codebook}")
        print(f"version: {1}")
        print(f"runs x timesteps: {h.shape.runs} x {h.shape.timesteps}")
        print(f"volume dims: {'x'.join(map(str, h.shape.dims))}")
        print(f"value_peak: {h.shape.value_peak:.6g}")
        print(f"block size: {'x'.join(map(str, h.spec.block_dims))}, "
              f"decimals {h.spec.decimals}, fill {h.spec.fill_value:g}")
        print(f"grid dims: {'x'.join(map(str, h.grid))}")
        print(f"reduction: {h.reduction.label}")
        print(f"blocks: {h.b_rem} unique of {h.b_tot} ({h.b_rem / h.b_tot:.4f})")
        print(f"grid section bytes: {h.grid_size}")
        print(f"index bytes: {h.index_size}")
        print(f"metadata bytes: {h.meta_size}")
        print(f"payload bytes: {h.payload_size}")
        print(f"file bytes: {h.payload_off + h.payload_size}")
    return 0


def _cmd_reconstruct(args) -> int:
    with open_codebook(args.codebook) as reader:
        ws = WorkingSet(reader)
        volume, _ = ws.switch_to(args.run, args.timestep)
        write_volume(args.out, volume)
        print(f"wrote {volume.size * 4} bytes to {args.out}")
    return 0


def _cmd_agree(args) -> int:
    with open_codebook(args.codebook) as reader:
        agreement = compute_agreement(reader, args.run, args.timestep)
        with open(args.out, "wb") as fh:
            fh.write(agreement.values.astype("<f4").tobytes(order="F"))
        print(f"agreement min {agreement.minimum:.4f} mean {agreement.mean:.4f}")
        print(f"wrote {agreement.values.size * 4} bytes to {args.out}")
    return 0


def _cmd_quality(args) -> int:
    manifest = load_manifest(args.manifest)
    with open_codebook(args.codebook) as reader:
        report = compare_codebook(manifest, reader, sample=args.sample)
        label = reader.header.reduction.label
    print(quality_table(report))
    if args.report:
        paths = write_quality_report(report, args.report, label=label)
        print(f"report: {paths['csv']} {paths['figure']}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    reader = open_codebook(args.codebook)
    budget = int(args.budget_mb * 2**20) if args.budget_mb else None
    app = create_app(
        reader,
        byte_budget=budget,
        max_sessions=args.max_sessions,
        static_dir=args.static,
    )
    print(f"serving {args.codebook} on http://{args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "process": _cmd_process,
    "profile": _cmd_profile,
    "inspect": _cmd_inspect,
    "reconstruct": _cmd_reconstruct,
    "agree": _cmd_agree,
    "quality": _cmd_quality,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        import logging

        logging.basicConfig(level=logging.INFO, format="%(name)s %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except (EnsbookError, ValueError, FileNotFoundError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
