"""Text and raster file formats shared by the library and the CLI.

Density text format: a header line ``# n_bins=<N>`` followed by one
density per line, N comma-separated decimal reals. Data lines may end
in a ``#``-prefixed comment. Values whose total drifts from 1 beyond
the construction tolerance are renormalized on read.

Mask format: binary PGM (magic ``P5``, 8-bit, maxval <= 255); any
nonzero pixel counts as inside the region.

Grid format: a header line ``# grid=<W>x<H> image=<iw>x<ih> n_bins=<N>``
followed by W*H density lines in row-major order (row 0 = top).

Prediction format: the density header, then ``sample_id,`` followed by
the N bin values on each line.
"""

import math
import re

import numpy as np

from .core import Density
from .dataset import PredictionRecord
from .priors import DensityGrid, RegionMask

_GRID_HEADER = re.compile(
    r"#\s*grid=(\d+)x(\d+)\s+image=(\d+)x(\d+)\s+n_bins=(\d+)\s*$"
)
_NBINS_HEADER = re.compile(r"#\s*n_bins=(\d+)\s*$")


def format_density_line(density: Density) -> str:
    return ",".join(repr(float(v)) for v in density.bins)


def _parse_values(body: str, where: str) -> np.ndarray:
    parts = body.split(",")
    try:
        values = np.array([float(v) for v in parts])
    except ValueError:
        raise ValueError(f"{where}: cannot parse density values") from None
    return values


def _density_from_values(values: np.ndarray, n_bins: int, where: str) -> Density:
    if values.size != n_bins:
        raise ValueError(f"{where}: expected {n_bins} values, got {values.size}")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{where}: density values must be finite")
    if np.any(values < 0.0):
        raise ValueError(f"{where}: density values must be nonnegative")
    total = float(values.sum())
    if total <= 0.0:
        raise ValueError(f"{where}: density values sum to zero")
    if abs(total - 1.0) <= 1e-9:
        return Density(values)
    return Density(values / total)


def write_densities(stream, densities, trailing_comments=None) -> None:
    """Write the density header and one line per density.

    trailing_comments, when given, maps density indexes to comment
    strings appended after ``#`` on that line.
    """
    densities = list(densities)
    if not densities:
        raise ValueError("need at least one density to write")
    n_bins = densities[0].n_bins
    stream.write(f"# n_bins={n_bins}\n")
    for i, d in enumerate(densities):
        if d.n_bins != n_bins:
            raise ValueError(f"density {i} has {d.n_bins} bins, expected {n_bins}")
        line = format_density_line(d)
        if trailing_comments and i in trailing_comments:
            line += f" # {trailing_comments[i]}"
        stream.write(line + "\n")


def read_densities(stream, source: str = "<input>") -> list[Density]:
    """Parse a density file; raises ValueError naming the offending line."""
    n_bins = None
    densities = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _NBINS_HEADER.match(line)
            if m:
                if n_bins is not None:
                    raise ValueError(f"{source}: line {lineno}: duplicate n_bins header")
                n_bins = int(m.group(1))
                if n_bins < 4:
                    raise ValueError(f"{source}: line {lineno}: n_bins must be >= 4")
            continue
        if n_bins is None:
            raise ValueError(
                f"{source}: line {lineno}: missing '# n_bins=<N>' header "
                f"before the first density"
            )
        body = line.split("#", 1)[0].strip()
        values = _parse_values(body, f"{source}: line {lineno}")
        densities.append(_density_from_values(values, n_bins, f"{source}: line {lineno}"))
    if not densities:
        raise ValueError(f"{source}: no densities found")
    return densities


def read_angles_deg(stream, source: str = "<input>") -> list[float]:
    """Parse one angle in degrees per line, skipping blanks and comments."""
    angles = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            value = float(line)
        except ValueError:
            raise ValueError(
                f"{source}: line {lineno}: cannot parse angle {line!r}"
            ) from None
        if not math.isfinite(value):
            raise ValueError(f"{source}: line {lineno}: angle must be finite")
        angles.append(value)
    if not angles:
        raise ValueError(f"{source}: no angles found")
    return angles


def write_pgm(path, mask: RegionMask) -> None:
    """Write a binary (P5) PGM, 255 inside the region and 0 outside."""
    data = np.where(mask.bits, 255, 0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{mask.width} {mask.height}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path) -> RegionMask:
    """Read a binary (P5) 8-bit PGM; any nonzero pixel is inside the region."""
    with open(path, "rb") as fh:
        blob = fh.read()

    tokens = []
    pos = 0
    while len(tokens) < 4:
        if pos >= len(blob):
            raise ValueError(f"{path}: truncated PGM header")
        c = blob[pos:pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            nl = blob.find(b"\n", pos)
            pos = len(blob) if nl < 0 else nl + 1
        else:
            end = pos
            while end < len(blob) and not blob[end:end + 1].isspace():
                end += 1
            tokens.append(blob[pos:end])
            pos = end
    # exactly one whitespace byte separates the maxval from the raster
    if pos >= len(blob) or not blob[pos:pos + 1].isspace():
        raise ValueError(f"{path}: malformed PGM header")
    pos += 1

    if tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (magic {tokens[0]!r}, expected P5)")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ValueError(f"{path}: non-numeric PGM header fields") from None
    if width < 1 or height < 1:
        raise ValueError(f"{path}: bad PGM size {width}x{height}")
    if not 1 <= maxval <= 255:
        raise ValueError(f"{path}: PGM maxval {maxval} outside the 8-bit range")
    raster = blob[pos:pos + width * height]
    if len(raster) != width * height:
        raise ValueError(
            f"{path}: PGM raster truncated ({len(raster)} of {width * height} bytes)"
        )
    bits = np.frombuffer(raster, dtype=np.uint8).reshape(height, width) != 0
    return RegionMask(bits)


def write_grid(path, grid: DensityGrid) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"# grid={grid.grid_w}x{grid.grid_h} "
            f"image={grid.image_w}x{grid.image_h} n_bins={grid.n_bins}\n"
        )
        for row in range(grid.grid_h):
            for col in range(grid.grid_w):
                fh.write(format_density_line(grid.cell_density(col, row)) + "\n")


def read_grid(path) -> DensityGrid:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    header = None
    cells = []
    n_bins = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if header is None:
            m = _GRID_HEADER.match(line)
            if not m:
                raise ValueError(
                    f"{path}: line {lineno}: expected header "
                    f"'# grid=<W>x<H> image=<iw>x<ih> n_bins=<N>'"
                )
            header = tuple(int(g) for g in m.groups())
            n_bins = header[4]
            continue
        if line.startswith("#"):
            continue
        body = line.split("#", 1)[0].strip()
        values = _parse_values(body, f"{path}: line {lineno}")
        cells.append(
            _density_from_values(values, n_bins, f"{path}: line {lineno}").bins
        )
    if header is None:
        raise ValueError(f"{path}: missing grid header")
    grid_w, grid_h, image_w, image_h, n_bins = header
    if len(cells) != grid_w * grid_h:
        raise ValueError(
            f"{path}: expected {grid_w * grid_h} density lines, got {len(cells)}"
        )
    arr = np.stack(cells).reshape(grid_h, grid_w, n_bins)
    return DensityGrid(arr, image_w, image_h)


def write_predictions(path, records, n_bins: int) -> None:
    records = list(records)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n_bins={n_bins}\n")
        for rec in records:
            if "," in rec.sample_id:
                raise ValueError(
                    f"sample_id {rec.sample_id!r} may not contain commas"
                )
            if rec.density.n_bins != n_bins:
                raise ValueError(
                    f"prediction {rec.sample_id!r} has {rec.density.n_bins} bins, "
                    f"expected {n_bins}"
                )
            fh.write(f"{rec.sample_id},{format_density_line(rec.density)}\n")


def read_predictions(path) -> list[PredictionRecord]:
    records = []
    seen = set()
    n_bins = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = _NBINS_HEADER.match(line)
                if m:
                    n_bins = int(m.group(1))
                continue
            if n_bins is None:
                raise ValueError(
                    f"{path}: line {lineno}: missing '# n_bins=<N>' header"
                )
            sample_id, sep, body = line.partition(",")
            sample_id = sample_id.strip()
            if not sep or not sample_id:
                raise ValueError(f"{path}: line {lineno}: expected 'sample_id,<values>'")
            if sample_id in seen:
                raise ValueError(f"{path}: duplicate sample_id {sample_id!r}")
            seen.add(sample_id)
            values = _parse_values(
                body.split("#", 1)[0].strip(), f"{path}: line {lineno}"
            )
            records.append(PredictionRecord(
                sample_id,
                _density_from_values(values, n_bins, f"{path}: line {lineno}"),
            ))
    if not records:
        raise ValueError(f"{path}: no predictions found")
    return records
