"""Annotation ingestion, fold splitting, and the synthetic predictor.

Annotation files are UTF-8 CSV with the header
``sample_id,image_w,image_h,cx,cy,half_size,theta_deg,mask_path``;
angles live in degrees on disk and in canonical radians in memory.
``mask_path`` may be empty and is stored as given (callers decide what
it is relative to).
"""

import csv
import math
import zlib
from dataclasses import dataclass

import numpy as np

from .core import ConversionConfig, Density, canonical_angle, encode
from .priors import HandBox

ANNOTATION_FIELDS = (
    "sample_id", "image_w", "image_h", "cx", "cy", "half_size",
    "theta_deg", "mask_path",
)


@dataclass(frozen=True)
class HandAnnotation:
    sample_id: str
    image_w: int
    image_h: int
    box: HandBox
    theta_gt: float
    mask_path: str | None = None


@dataclass(frozen=True)
class PredictionRecord:
    sample_id: str
    density: Density


@dataclass(frozen=True)
class FoldSplit:
    """Partition of sample ids into n_folds folds of near-equal size."""

    n_folds: int
    assignment: dict

    def fold_of(self, sample_id: str) -> int:
        return self.assignment[sample_id]

    def test_ids(self, fold: int) -> list:
        return [s for s, f in self.assignment.items() if f == fold]

    def train_ids(self, fold: int) -> list:
        return [s for s, f in self.assignment.items() if f != fold]


def load_annotations(path) -> list[HandAnnotation]:
    """Read an annotation CSV, validating every row.

    Raises ValueError naming the line number and field for malformed
    rows, and naming the offending id for duplicates.
    """
    annotations = []
    seen = set()
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty annotation file") from None
        if tuple(header) != ANNOTATION_FIELDS:
            raise ValueError(
                f"{path}: line 1: expected header "
                f"{','.join(ANNOTATION_FIELDS)!r}, got {','.join(header)!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(ANNOTATION_FIELDS):
                missing = ANNOTATION_FIELDS[min(len(row), len(ANNOTATION_FIELDS) - 1)]
                raise ValueError(
                    f"{path}: line {lineno}: expected {len(ANNOTATION_FIELDS)} "
                    f"fields, got {len(row)} (near field {missing!r})"
                )
            fields = dict(zip(ANNOTATION_FIELDS, row))
            sample_id = fields["sample_id"].strip()
            if not sample_id:
                raise ValueError(f"{path}: line {lineno}: field 'sample_id' is empty")
            if sample_id in seen:
                raise ValueError(f"{path}: duplicate sample_id {sample_id!r}")
            seen.add(sample_id)

            def parse(field, conv, check=None, what=""):
                try:
                    value = conv(fields[field])
                except (TypeError, ValueError):
                    raise ValueError(
                        f"{path}: line {lineno}: field {field!r}: "
                        f"cannot parse {fields[field]!r}"
                    ) from None
                if check is not None and not check(value):
                    raise ValueError(
                        f"{path}: line {lineno}: field {field!r}: "
                        f"{value!r} is not {what}"
                    )
                return value

            image_w = parse("image_w", int, lambda v: v >= 1, "a positive size")
            image_h = parse("image_h", int, lambda v: v >= 1, "a positive size")
            cx = parse("cx", float, math.isfinite, "finite")
            cy = parse("cy", float, math.isfinite, "finite")
            half_size = parse("half_size", float, lambda v: v > 0, "positive")
            theta_deg = parse("theta_deg", float, math.isfinite, "finite")
            mask_path = fields["mask_path"].strip() or None

            annotations.append(HandAnnotation(
                sample_id=sample_id,
                image_w=image_w,
                image_h=image_h,
                box=HandBox(cx=cx, cy=cy, half_size=half_size),
                theta_gt=canonical_angle(math.radians(theta_deg)),
                mask_path=mask_path,
            ))
    return annotations


def save_annotations(path, annotations) -> None:
    """Write annotations back to CSV (angles converted to degrees)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ANNOTATION_FIELDS)
        for ann in annotations:
            writer.writerow([
                ann.sample_id,
                ann.image_w,
                ann.image_h,
                repr(ann.box.cx),
                repr(ann.box.cy),
                repr(ann.box.half_size),
                repr(math.degrees(ann.theta_gt)),
                ann.mask_path or "",
            ])


def split_folds(ids, n_folds: int, seed: int) -> FoldSplit:
    """Deterministically partition ids into folds of near-equal size.

    The ids are shuffled under the seed and assigned round-robin, so
    fold sizes differ by at most one and the same (ids, seed) always
    reproduces the same split.
    """
    ids = list(ids)
    if n_folds < 2:
        raise ValueError(f"n_folds must be >= 2, got {n_folds}")
    if len(ids) < n_folds:
        raise ValueError(f"cannot split {len(ids)} ids into {n_folds} folds")
    if len(set(ids)) != len(ids):
        raise ValueError("ids must be unique")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ids))
    assignment = {ids[int(j)]: int(pos % n_folds) for pos, j in enumerate(order)}
    return FoldSplit(n_folds=n_folds, assignment=assignment)


def _sample_rng(seed: int, sample_id: str) -> np.random.Generator:
    # stable per-sample stream: independent of iteration order and of
    # Python's salted hash()
    return np.random.default_rng(
        [seed & 0xFFFFFFFF, zlib.crc32(sample_id.encode("utf-8"))]
    )


def synthetic_predict(ann: HandAnnotation, noise_sigma: float,
                      bimodal_rate: float, seed: int,
                      cfg: ConversionConfig) -> PredictionRecord:
    """Stand-in predictor producing densities around the ground truth.

    With probability ``1 - bimodal_rate`` the output is
    encode(theta_gt + gaussian(0, noise_sigma)). Otherwise it is a
    0.55/0.45 mixture of encodings at the noisy angle and its antipode,
    with the dominant side chosen by a fair coin: the characteristic
    two-peaks failure where the far peak sometimes wins the argmax.

    Bit-reproducible for fixed (seed, inputs); the per-sample stream is
    derived from (seed, sample_id).
    """
    if not 0.0 <= bimodal_rate <= 1.0:
        raise ValueError(f"bimodal_rate must be in [0, 1], got {bimodal_rate!r}")
    if not (math.isfinite(noise_sigma) and noise_sigma >= 0.0):
        raise ValueError(f"noise_sigma must be nonnegative, got {noise_sigma!r}")
    rng = _sample_rng(seed, ann.sample_id)
    is_bimodal = rng.random() < bimodal_rate
    anti_dominates = rng.random() < 0.5
    noise = rng.normal(0.0, noise_sigma) if noise_sigma > 0.0 else 0.0

    main = encode(ann.theta_gt + noise, cfg)
    if not is_bimodal:
        return PredictionRecord(ann.sample_id, main)
    anti = encode(ann.theta_gt + math.pi + noise, cfg)
    w_main, w_anti = (0.45, 0.55) if anti_dominates else (0.55, 0.45)
    mix = w_main * main.bins + w_anti * anti.bins
    return PredictionRecord(ann.sample_id, Density.from_weights(mix))
