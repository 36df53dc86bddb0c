"""Command-line entry point.

Exit codes: 0 on success, 2 for input or configuration errors, 3 when the
solver produces non-finite values.
"""

import argparse
import json
import logging
import sys

from . import io
from .errors import InvalidInputError, NumericalError
from .pipeline import PipelineConfig, benchmark, render_overlay, segment

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

# flag dest -> config key
_FLAG_KEYS = {
    "k": "k_superpixels",
    "ratio": "unit_ratio",
    "lambda1": "lambda1",
    "lambda2": "lambda2",
    "rho": "rho",
    "max_iters": "max_iters",
    "tol": "tol",
    "seed": "seed",
    "br_tol": "br_tolerance",
    "min_size_ratio": "min_size_ratio",
}


def _parse_color(text):
    text = text.lstrip("#")
    if len(text) != 6:
        raise argparse.ArgumentTypeError("color must be a hex triplet like ff0000")
    try:
        return tuple(int(text[i : i + 2], 16) / 255.0 for i in (0, 2, 4))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _parse_k_list(text):
    try:
        ks = [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad K list {text!r}") from exc
    if not ks or min(ks) < 1:
        raise argparse.ArgumentTypeError("K values must be positive integers")
    return ks


def _add_config_flags(p):
    p.add_argument("--config", help="JSON file with pipeline settings")
    p.add_argument("--ratio", type=float, help="raw units per superpixel (default 3)")
    p.add_argument("--lambda1", type=float, help="l1 weight (default 1e-6)")
    p.add_argument("--lambda2", type=float, help="spatial weight (default 1e-4)")
    p.add_argument("--rho", type=float, help="penalty growth factor (default 1.1)")
    p.add_argument("--max-iters", type=int, help="ADMM iteration cap (default 20)")
    p.add_argument("--tol", type=float, help="primal residual tolerance (default 1e-3)")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--br-tol", type=int, help="boundary recall tolerance in pixels (default 2)")
    p.add_argument("--min-size-ratio", type=float,
                   help="merge regions below this fraction of H*W/K (default 0.1)")
    for group in ("color", "spatial", "edge", "texture"):
        p.add_argument(f"--no-{group}", action="store_true", help=f"drop {group} features")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="subspace-superpixels",
        description="Superpixels from spatially constrained sparse subspace clustering.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="segment one image")
    seg.add_argument("--image", required=True)
    seg.add_argument("--k", type=int, help="desired number of superpixels")
    seg.add_argument("--out", required=True, help="label map path (.png or .csv)")
    seg.add_argument("--overlay", help="write a boundary overlay image here")
    seg.add_argument("--overlay-color", type=_parse_color, default=(1.0, 0.0, 0.0))
    seg.add_argument("--gt", action="append", default=[], help="ground-truth label map")
    seg.add_argument("--plot", action="store_true", help="write a convergence figure")
    _add_config_flags(seg)

    bench = sub.add_parser("benchmark", help="score a directory of images")
    bench.add_argument("--dataset", required=True)
    bench.add_argument("--k-list", type=_parse_k_list, required=True)
    bench.add_argument("--out", required=True, help="output directory")
    bench.add_argument("--workers", type=int, default=1)
    bench.add_argument("--no-plot", action="store_true")
    _add_config_flags(bench)

    ov = sub.add_parser("overlay", help="draw an existing label map over its image")
    ov.add_argument("--image", required=True)
    ov.add_argument("--labels", required=True)
    ov.add_argument("--out", required=True)
    ov.add_argument("--color", type=_parse_color, default=(1.0, 0.0, 0.0))
    return parser


def resolve_config(args, k_default=None):
    """Merge built-in defaults, an optional config file and explicit flags."""
    settings = {}
    if args.config:
        try:
            with open(args.config) as fh:
                settings.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInputError(f"cannot read config {args.config}: {exc}") from exc
    for dest, key in _FLAG_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            settings[key] = value
    for group in ("color", "spatial", "edge", "texture"):
        if getattr(args, f"no_{group}", False):
            settings[f"{group}_features"] = False
    if "k_superpixels" not in settings:
        if k_default is None:
            raise InvalidInputError("--k is required (or k_superpixels in --config)")
        settings["k_superpixels"] = k_default
    return PipelineConfig.from_dict(settings)


def _run(args):
    if args.command == "segment":
        config = resolve_config(args)
        art = segment(
            args.image,
            config,
            args.out,
            overlay_path=args.overlay,
            gt_paths=args.gt,
            plot=args.plot,
            overlay_color=args.overlay_color,
        )
        print(
            f"{args.out}: {art.labeling.realized_k} superpixels from {art.n_units} units, "
            f"{art.report.iterations_run} ADMM iterations"
            + (" (converged)" if art.report.converged else " (iteration cap)")
        )
        if art.metrics is not None:
            m = art.metrics
            print(f"ASA {m.asa:.4f}  BR {m.br:.4f}  USE {m.use:.4f}")
    elif args.command == "benchmark":
        # K comes from --k-list; the placeholder only satisfies validation
        config = resolve_config(args, k_default=max(args.k_list))
        result = benchmark(
            args.dataset,
            config,
            args.k_list,
            args.out,
            workers=max(1, args.workers),
            plot=not args.no_plot,
        )
        for s in result["mean"]:
            if s["n_images"]:
                print(f"K={s['k']}: ASA {s['asa']:.4f}  BR {s['br']:.4f}  USE {s['use']:.4f}"
                      f"  ({s['n_images']} images)")
        for name in result["skipped"]:
            print(f"skipped {name}: no ground truth", file=sys.stderr)
    elif args.command == "overlay":
        render_overlay(args.image, io.read_labels(args.labels), args.out, color=args.color)
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _run(args)
    except NumericalError as exc:
        print(f"error [{exc.stage or 'solve'}]: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InvalidInputError, OSError) as exc:
        stage = getattr(exc, "stage", None) or "input"
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
