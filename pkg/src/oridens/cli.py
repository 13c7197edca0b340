"""Command-line toolchain for orientation densities.

Subcommands: encode, decode, region-prior, grid-train, grid-query,
fuse, eval, radar. Angles are degrees on the CLI; densities are raw
reals in the shared text format. All randomness flows from --seed.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

import argparse
import contextlib
import math
import sys
from pathlib import Path

from . import figures, formats
from .core import ConversionConfig, decode as core_decode, encode as core_encode, fuse as core_fuse
from .dataset import load_annotations, split_folds, synthetic_predict
from .evaluate import evaluate_pipeline, pipeline_errors, population_report, render_text, report_json
from .priors import RegionPriorConfig, grid_query, grid_train, region_prior

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    """Bad flag values detected after argparse (maps to exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@contextlib.contextmanager
def _open_text(path, mode):
    if path == "-":
        yield sys.stdin if mode == "r" else sys.stdout
    else:
        with open(path, mode, encoding="utf-8") as fh:
            yield fh


def _conversion_config(args) -> ConversionConfig:
    try:
        return ConversionConfig(
            n_bins=args.n_bins,
            sigma=math.radians(args.sigma_deg),
            decode_step=math.radians(args.decode_step_deg),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _region_config(args) -> RegionPriorConfig:
    try:
        return RegionPriorConfig(k_r=args.kr, radial_step=args.radial_step)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_encode(args) -> int:
    cfg = _conversion_config(args)
    with _open_text(args.input, "r") as fh:
        angles = formats.read_angles_deg(fh, source=args.input)
    densities = [core_encode(math.radians(a), cfg) for a in angles]
    with _open_text(args.output, "w") as fh:
        formats.write_densities(fh, densities)
    return EXIT_OK


def cmd_decode(args) -> int:
    cfg = _conversion_config(args)
    with _open_text(args.input, "r") as fh:
        densities = formats.read_densities(fh, source=args.input)
    lines = []
    for d in densities:
        if d.n_bins != cfg.n_bins:
            raise ValueError(
                f"{args.input}: densities have {d.n_bins} bins but --n-bins is "
                f"{cfg.n_bins}"
            )
        lines.append(f"{math.degrees(core_decode(d, cfg)):.6f}")
    with _open_text(args.output, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_fuse(args) -> int:
    with _open_text(args.input, "r") as fh:
        densities = formats.read_densities(fh, source=args.input)
    fused = core_fuse(densities)
    with _open_text(args.output, "w") as fh:
        formats.write_densities(fh, [fused])
    return EXIT_OK


def cmd_region_prior(args) -> int:
    from .priors import HandBox

    region_cfg = _region_config(args)
    mask = formats.read_pgm(args.mask)
    try:
        box = HandBox(cx=args.cx, cy=args.cy, half_size=args.half_size)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = region_prior(mask, box, region_cfg, args.n_bins)
    comments = {0: "fallback=uniform"} if result.fallback else None
    with _open_text(args.output, "w") as fh:
        formats.write_densities(fh, [result.density], trailing_comments=comments)
    return EXIT_OK


def _clamped_positions(annotations):
    """Training positions clamped into the image (boxes may straddle edges)."""
    return [
        (
            min(max(ann.box.cx, 0.0), float(ann.image_w)),
            min(max(ann.box.cy, 0.0), float(ann.image_h)),
            ann.theta_gt,
        )
        for ann in annotations
    ]


def _image_size(annotations):
    sizes = {(ann.image_w, ann.image_h) for ann in annotations}
    if len(sizes) != 1:
        raise ValueError(
            f"annotations mix image sizes {sorted(sizes)}; a grid needs one frame"
        )
    return next(iter(sizes))


def cmd_grid_train(args) -> int:
    cfg = _conversion_config(args)
    annotations = load_annotations(args.annotations)
    image_w, image_h = _image_size(annotations)
    grid = grid_train(
        _clamped_positions(annotations), args.grid_w, args.grid_h,
        image_w, image_h, cfg,
    )
    formats.write_grid(args.output, grid)
    return EXIT_OK


def cmd_grid_query(args) -> int:
    grid = formats.read_grid(args.grid)
    density = grid_query(grid, args.cx, args.cy)
    with _open_text(args.output, "w") as fh:
        formats.write_densities(fh, [density])
    return EXIT_OK


def cmd_radar(args) -> int:
    with _open_text(args.input, "r") as fh:
        densities = formats.read_densities(fh, source=args.input)
    svg = figures.radar_svg(
        densities[0], size=args.size, min_radius_frac=args.min_radius
    )
    with _open_text(args.output, "w") as fh:
        fh.write(svg)
    return EXIT_OK


def _synthetic_predictions(annotations, args, cfg):
    return [
        synthetic_predict(
            ann, math.radians(args.noise_sigma_deg), args.bimodal_rate,
            args.seed, cfg,
        )
        for ann in annotations
    ]


def _relative_mask_loader(base_dir):
    def load(ann):
        if not ann.mask_path:
            raise ValueError(
                f"sample {ann.sample_id!r}: no mask_path in its annotation"
            )
        path = Path(ann.mask_path)
        if not path.is_absolute():
            path = base_dir / path
        try:
            return formats.read_pgm(path)
        except OSError as exc:
            raise ValueError(
                f"sample {ann.sample_id!r}: cannot read mask: {exc}"
            ) from None
    return load


def cmd_eval(args) -> int:
    cfg = _conversion_config(args)
    region_cfg = _region_config(args)
    annotations = load_annotations(args.annotations)
    mask_loader = _relative_mask_loader(Path(args.annotations).resolve().parent)

    if args.predictions:
        predictions = formats.read_predictions(args.predictions)
    else:
        if not 0.0 <= args.bimodal_rate <= 1.0:
            raise UsageError(f"--bimodal-rate must be in [0, 1], got {args.bimodal_rate}")
        if args.noise_sigma_deg < 0.0:
            raise UsageError(f"--noise-sigma-deg must be >= 0, got {args.noise_sigma_deg}")
        predictions = _synthetic_predictions(annotations, args, cfg)

    method = args.method_name or (
        "density"
        + ("+region" if args.region_prior else "")
        + ("+position" if args.position_prior else "")
    )
    common = dict(
        cfg=cfg, use_region_prior=args.region_prior,
        region_cfg=region_cfg, mask_loader=mask_loader, workers=args.workers,
    )

    per_fold = None
    if args.position_prior and not args.grid:
        # grids are trained only on the other folds, then queried on the
        # held-out fold; errors from all folds pool into one report
        if args.folds < 2:
            raise UsageError("--position-prior without --grid needs --folds >= 2")
        by_id = {ann.sample_id: ann for ann in annotations}
        for rec in predictions:
            if rec.sample_id not in by_id:
                raise ValueError(f"prediction {rec.sample_id!r} has no annotation")
        split = split_folds([rec.sample_id for rec in predictions],
                            args.folds, args.seed)
        image_w, image_h = _image_size(annotations)
        all_errors = []
        all_failures = 0
        per_fold = []
        for fold in range(args.folds):
            train_anns = [by_id[s] for s in split.train_ids(fold)]
            grid = grid_train(
                _clamped_positions(train_anns), args.grid_w, args.grid_h,
                image_w, image_h, cfg,
            )
            held_out = set(split.test_ids(fold))
            fold_preds = [rec for rec in predictions if rec.sample_id in held_out]
            errors, failures = pipeline_errors(
                annotations, fold_preds, use_position_prior=True, grid=grid,
                **common,
            )
            all_errors.extend(errors)
            all_failures += failures
            per_fold.append(population_report(
                errors, f"{method}/fold{fold}", n_fusion_failures=failures,
            ))
        report = population_report(all_errors, method, n_fusion_failures=all_failures)
    else:
        grid = formats.read_grid(args.grid) if args.grid else None
        report = evaluate_pipeline(
            annotations, predictions,
            use_position_prior=args.position_prior, grid=grid,
            method_name=method, **common,
        )

    with _open_text(args.output, "w") as fh:
        fh.write(render_text([report]))
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(report_json(report, per_fold=per_fold))
    if args.figure:
        figures.population_chart([report], args.figure)
    return EXIT_OK


def build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("shared options")
    group.add_argument("--n-bins", type=int, default=16,
                       help="number of density bins (default 16)")
    group.add_argument("--sigma-deg", type=float, default=10.0,
                       help="acceptance width of the encoding, degrees (default 10)")
    group.add_argument("--decode-step-deg", type=float, default=0.1,
                       help="decode search resolution, degrees (default 0.1)")
    group.add_argument("--kr", type=float, default=4.0,
                       help="outer radius multiplier of the region prior (default 4.0)")
    group.add_argument("--seed", type=int, default=0,
                       help="seed for every random choice (default 0)")

    parser = _Parser(
        prog="oridens",
        description="Orientation densities: encode, decode, fuse, priors, "
                    "evaluation, and radar charts.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("encode", parents=[common],
                       help="convert angles (degrees, one per line) to densities")
    p.add_argument("--input", "-i", default="-", help="angle file or - for stdin")
    p.add_argument("--output", "-o", default="-", help="density file or - for stdout")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", parents=[common],
                       help="convert densities to angles (degrees, one per line)")
    p.add_argument("--input", "-i", default="-", help="density file or - for stdin")
    p.add_argument("--output", "-o", default="-", help="angle file or - for stdout")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("fuse", parents=[common],
                       help="fuse all densities in the input into one")
    p.add_argument("--input", "-i", default="-", help="density file or - for stdin")
    p.add_argument("--output", "-o", default="-", help="density file or - for stdout")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("region-prior", parents=[common],
                       help="orientation density from mask mass along rays")
    p.add_argument("--mask", required=True, help="binary PGM mask (nonzero = region)")
    p.add_argument("--cx", type=float, required=True, help="box center x, pixels")
    p.add_argument("--cy", type=float, required=True, help="box center y, pixels")
    p.add_argument("--half-size", type=float, required=True,
                   help="half the box side, pixels")
    p.add_argument("--radial-step", type=float, default=1.0,
                   help="ray sampling step, pixels (default 1.0)")
    p.add_argument("--output", "-o", default="-", help="density file or - for stdout")
    p.set_defaults(func=cmd_region_prior)

    p = sub.add_parser("grid-train", parents=[common],
                       help="train a position-conditioned density grid from annotations")
    p.add_argument("--annotations", required=True, help="annotation CSV")
    p.add_argument("--grid-w", type=int, default=5,
                   help="lattice points along x (default 5)")
    p.add_argument("--grid-h", type=int, default=4,
                   help="lattice points along y (default 4)")
    p.add_argument("--output", "-o", required=True, help="grid file to write")
    p.set_defaults(func=cmd_grid_train)

    p = sub.add_parser("grid-query", parents=[common],
                       help="interpolate a trained grid at a position")
    p.add_argument("--grid", required=True, help="grid file from grid-train")
    p.add_argument("--cx", type=float, required=True, help="query x, pixels")
    p.add_argument("--cy", type=float, required=True, help="query y, pixels")
    p.add_argument("--output", "-o", default="-", help="density file or - for stdout")
    p.set_defaults(func=cmd_grid_query)

    p = sub.add_parser("eval", parents=[common],
                       help="score predictions against annotations, with optional "
                            "prior fusion")
    p.add_argument("--annotations", required=True, help="annotation CSV")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--predictions", help="prediction density file")
    src.add_argument("--synthetic", action="store_true",
                     help="generate predictions from the ground truth instead")
    p.add_argument("--noise-sigma-deg", type=float, default=0.0,
                   help="synthetic angular noise, degrees (default 0)")
    p.add_argument("--bimodal-rate", type=float, default=0.0,
                   help="synthetic probability of a two-peak prediction (default 0)")
    p.add_argument("--region-prior", action="store_true",
                   help="fuse the mask-ray prior (annotations must carry mask paths, "
                        "resolved relative to the annotation file)")
    p.add_argument("--position-prior", action="store_true",
                   help="fuse the position grid prior")
    p.add_argument("--grid", help="pretrained grid file (skips per-fold training)")
    p.add_argument("--grid-w", type=int, default=5,
                   help="lattice points along x for fold training (default 5)")
    p.add_argument("--grid-h", type=int, default=4,
                   help="lattice points along y for fold training (default 4)")
    p.add_argument("--folds", type=int, default=10,
                   help="folds for held-out grid training (default 10)")
    p.add_argument("--split-by", choices=["sample"], default="sample",
                   help="fold grouping unit; only per-sample splitting exists")
    p.add_argument("--radial-step", type=float, default=1.0,
                   help="region-prior ray step, pixels (default 1.0)")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel evaluation threads (default 1); the report is "
                        "identical regardless")
    p.add_argument("--method-name", help="label for the report row")
    p.add_argument("--output", "-o", default="-", help="text report or - for stdout")
    p.add_argument("--json", help="also write the report as JSON here")
    p.add_argument("--figure", help="also render the error-population chart here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("radar", parents=[common],
                       help="render the first input density as a radar-chart SVG")
    p.add_argument("--input", "-i", default="-", help="density file or - for stdin")
    p.add_argument("--output", "-o", default="-", help="SVG file or - for stdout")
    p.add_argument("--size", type=int, default=400,
                   help="SVG width/height in px (default 400)")
    p.add_argument("--min-radius", type=float, default=0.01,
                   help="radius floor as a fraction of full scale (default 0.01)")
    p.set_defaults(func=cmd_radar)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
