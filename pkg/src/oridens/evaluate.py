"""Angular errors, error-population reports, and the fused pipeline.

A report counts the fraction of samples whose angular error falls under
the 10/20/30 degree thresholds and over the 90/120/150 degree ones
(strict inequalities on both sides; a sample at exactly 10 degrees is
not "< 10"), plus the mean and median error in degrees.
"""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import formats
from .core import ConversionConfig, FusionError, angular_distance, decode, fuse
from .priors import RegionPriorConfig, grid_query, region_prior

BELOW_THRESHOLDS = (10, 20, 30)
ABOVE_THRESHOLDS = (90, 120, 150)


def angular_error(pred: float, gt: float) -> float:
    """Geodesic error between two orientations, in degrees (0 to 180)."""
    return math.degrees(angular_distance(pred, gt))


@dataclass(frozen=True)
class ErrorPopulationReport:
    method_name: str
    below_thresholds: dict
    above_thresholds: dict
    n_samples: int
    mean_error: float
    median_error: float
    n_fusion_failures: int = 0

    def __post_init__(self):
        below = [self.below_thresholds[t] for t in BELOW_THRESHOLDS]
        above = [self.above_thresholds[t] for t in ABOVE_THRESHOLDS]
        for v in below + above:
            if not 0.0 <= v <= 100.0:
                raise ValueError(f"percentage {v!r} outside [0, 100]")
        if not all(a <= b for a, b in zip(below, below[1:])):
            raise ValueError(f"below-threshold percentages must be nondecreasing: {below}")
        if not all(a >= b for a, b in zip(above, above[1:])):
            raise ValueError(f"above-threshold percentages must be nonincreasing: {above}")
        if self.n_samples < 1:
            raise ValueError("a report needs at least one sample")

    def as_dict(self) -> dict:
        return {
            "method_name": self.method_name,
            "n_samples": self.n_samples,
            "below_thresholds": {str(t): self.below_thresholds[t]
                                 for t in BELOW_THRESHOLDS},
            "above_thresholds": {str(t): self.above_thresholds[t]
                                 for t in ABOVE_THRESHOLDS},
            "mean_error": self.mean_error,
            "median_error": self.median_error,
            "n_fusion_failures": self.n_fusion_failures,
        }


def population_report(errors, method_name: str,
                      n_fusion_failures: int = 0) -> ErrorPopulationReport:
    """Bucket angular errors (degrees) into an error-population report.

    The error list is sorted internally, so the result is independent
    of accumulation order.
    """
    errs = np.sort(np.asarray(list(errors), dtype=float))
    if errs.size == 0:
        raise ValueError("population_report needs at least one error value")
    n = errs.size
    below = {t: 100.0 * float(np.count_nonzero(errs < t)) / n
             for t in BELOW_THRESHOLDS}
    above = {t: 100.0 * float(np.count_nonzero(errs > t)) / n
             for t in ABOVE_THRESHOLDS}
    return ErrorPopulationReport(
        method_name=method_name,
        below_thresholds=below,
        above_thresholds=above,
        n_samples=int(n),
        mean_error=float(np.mean(errs)),
        median_error=float(np.median(errs)),
        n_fusion_failures=n_fusion_failures,
    )


def _default_mask_loader(ann):
    if not ann.mask_path:
        raise ValueError(f"sample {ann.sample_id!r}: no mask_path in its annotation")
    try:
        return formats.read_pgm(ann.mask_path)
    except OSError as exc:
        raise ValueError(f"sample {ann.sample_id!r}: cannot read mask: {exc}") from None


def pipeline_errors(annotations, predictions, cfg: ConversionConfig,
                    use_region_prior: bool = False,
                    use_position_prior: bool = False,
                    grid=None, region_cfg: RegionPriorConfig | None = None,
                    mask_loader=None, workers: int = 1):
    """Per-sample fused angular errors, in prediction order.

    Returns (errors_deg, n_fusion_failures). A zero-product fusion is
    scored as the maximal 180-degree error rather than dropped, so
    irreconcilable samples still count against the method.
    """
    by_id = {ann.sample_id: ann for ann in annotations}
    if len(by_id) != len(annotations):
        raise ValueError("annotations contain duplicate sample ids")
    if use_position_prior and grid is None:
        raise ValueError("use_position_prior requires a trained grid")
    if region_cfg is None:
        region_cfg = RegionPriorConfig()
    if mask_loader is None:
        mask_loader = _default_mask_loader

    for rec in predictions:
        if rec.sample_id not in by_id:
            raise ValueError(f"prediction {rec.sample_id!r} has no annotation")

    def score(rec):
        ann = by_id[rec.sample_id]
        parts = [rec.density]
        if use_region_prior:
            mask = mask_loader(ann)
            parts.append(region_prior(mask, ann.box, region_cfg, cfg.n_bins).density)
        if use_position_prior:
            parts.append(grid_query(grid, ann.box.cx, ann.box.cy))
        try:
            fused = fuse(parts)
        except FusionError:
            return 180.0, True
        return angular_error(decode(fused, cfg), ann.theta_gt), False

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(score, predictions))
    else:
        results = [score(rec) for rec in predictions]

    errors = [e for e, _ in results]
    failures = sum(1 for _, failed in results if failed)
    return errors, failures


def evaluate_pipeline(annotations, predictions, cfg: ConversionConfig,
                      use_region_prior: bool = False,
                      use_position_prior: bool = False,
                      grid=None, region_cfg: RegionPriorConfig | None = None,
                      mask_loader=None, method_name: str = "density",
                      workers: int = 1) -> ErrorPopulationReport:
    """Fuse the enabled densities per sample, decode, and report errors.

    With both prior options off this evaluates the raw predictions
    alone. Deterministic: identical inputs give identical reports, and
    the accumulation is order-independent.
    """
    errors, failures = pipeline_errors(
        annotations, predictions, cfg,
        use_region_prior=use_region_prior,
        use_position_prior=use_position_prior,
        grid=grid, region_cfg=region_cfg, mask_loader=mask_loader,
        workers=workers,
    )
    return population_report(errors, method_name, n_fusion_failures=failures)


def render_text(reports) -> str:
    """Aligned plain-text table over one or more reports."""
    reports = list(reports)
    if not reports:
        raise ValueError("need at least one report to render")
    headers = (
        ["method"]
        + [f"<{t}°" for t in BELOW_THRESHOLDS]
        + ["mean°", "median°"]
        + [f">{t}°" for t in ABOVE_THRESHOLDS]
        + ["n"]
    )
    rows = []
    for r in reports:
        rows.append(
            [r.method_name]
            + [f"{r.below_thresholds[t]:.3f}" for t in BELOW_THRESHOLDS]
            + [f"{r.mean_error:.3f}", f"{r.median_error:.3f}"]
            + [f"{r.above_thresholds[t]:.3f}" for t in ABOVE_THRESHOLDS]
            + [str(r.n_samples)]
        )
    widths = [max(len(h), *(len(row[i]) for row in rows))
              for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(w) if i == 0 else h.rjust(w)
                  for i, (h, w) in enumerate(zip(headers, widths))),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(
            c.ljust(w) if i == 0 else c.rjust(w)
            for i, (c, w) in enumerate(zip(row, widths))
        ))
    failures = sum(r.n_fusion_failures for r in reports)
    if failures:
        lines.append(f"# {failures} fusion failure(s) scored as 180.000")
    return "\n".join(lines) + "\n"


def report_json(report: ErrorPopulationReport, per_fold=None) -> str:
    """Machine-readable JSON for a report, optionally with per-fold details."""
    payload = report.as_dict()
    if per_fold is not None:
        payload["n_folds"] = len(per_fold)
        payload["folds"] = [r.as_dict() for r in per_fold]
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"
