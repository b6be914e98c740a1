"""Raster containers, principal-value arithmetic and file I/O.

Grids are plain 2-D ``float64`` numpy arrays indexed ``[row, col]``
(``y``, ``x``), origin top-left. Masks are boolean arrays of the same
shape, ``True`` meaning valid.

Two on-disk formats are supported:

* binary PGM (``P5``), 8-bit or 16-bit big-endian samples;
* FPHM phase maps: ``b"FPHM"``, width and height as ``<u4``, then
  ``width * height`` ``<f4`` values row-major. NaN marks an invalid pixel.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * np.pi

FPHM_MAGIC = b"FPHM"


class FormatError(ValueError):
    """Base class for file parse errors."""


class UnsupportedFormatError(FormatError):
    """Magic number is not one we read."""


class HeaderError(FormatError):
    """Header is present but malformed."""


class TruncatedError(FormatError):
    """Payload is shorter than the header promises."""


def wrap_to_principal(theta):
    """Wrap phase to the principal interval ``(-pi, pi]``.

    Accepts a scalar or an array. ``pi`` itself maps to ``pi`` and ``-pi``
    maps to ``pi``.
    """
    arr = np.asarray(theta, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite phase")
    # remainder is in [0, 2pi), so the result lands in (-pi, pi]
    out = np.pi - np.remainder(np.pi - arr, TWO_PI)
    if out.ndim == 0:
        return float(out)
    return out


def check_mask(grid: np.ndarray, mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != grid.shape:
        raise ValueError(f"mask shape {mask.shape} does not match grid shape {grid.shape}")
    return mask


# ---------------------------------------------------------------------------
# PGM
# ---------------------------------------------------------------------------

_PGM_TOKEN = re.compile(rb"(?:\s|#[^\r\n]*[\r\n]?)*(\d+)")


def _parse_pgm_header(buf: bytes) -> tuple[int, int, int, int]:
    if len(buf) < 2 or buf[:1] != b"P":
        raise UnsupportedFormatError("not a PGM file")
    if buf[:2] != b"P5":
        raise UnsupportedFormatError(f"unsupported magic {buf[:2]!r}, only binary P5 is read")
    pos = 2
    fields = []
    for name in ("width", "height", "maxval"):
        m = _PGM_TOKEN.match(buf, pos)
        if m is None:
            raise HeaderError(f"missing {name} in PGM header")
        if m.start(1) == pos:
            # tokens must be whitespace-separated
            raise HeaderError(f"no separator before {name} in PGM header")
        fields.append(int(m.group(1)))
        pos = m.end(1)
    # exactly one whitespace byte separates maxval from the raster
    if pos >= len(buf) or buf[pos : pos + 1] not in (b" ", b"\t", b"\n", b"\r", b"\v", b"\f"):
        raise HeaderError("missing whitespace after maxval")
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise HeaderError(f"bad dimensions {width}x{height}")
    if not 0 < maxval < 65536:
        raise HeaderError(f"maxval {maxval} outside 1..65535")
    return width, height, maxval, pos + 1


def read_image(path, *, return_maxval: bool = False):
    """Read a binary PGM (P5) file into a float64 grid.

    Sample values are returned unscaled, i.e. in ``[0, maxval]``.
    With ``return_maxval=True`` a ``(grid, maxval)`` tuple is returned.
    """
    buf = Path(path).read_bytes()
    width, height, maxval, offset = _parse_pgm_header(buf)
    dtype = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
    need = width * height * dtype.itemsize
    if len(buf) - offset < need:
        raise TruncatedError(f"PGM payload has {len(buf) - offset} bytes, expected {need}")
    data = np.frombuffer(buf, dtype=dtype, count=width * height, offset=offset)
    grid = data.reshape(height, width).astype(np.float64)
    if return_maxval:
        return grid, maxval
    return grid


def write_image(grid, path, maxval: int | None = None) -> None:
    """Write an integer-valued grid as binary PGM.

    ``maxval`` defaults to 255 when every value fits in 8 bits, else 65535.
    Values must be integers in ``[0, maxval]``; nothing is rescaled.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 2 or grid.size == 0:
        raise ValueError("grid must be a non-empty 2-D array")
    if not np.all(np.isfinite(grid)):
        raise ValueError("grid contains non-finite values")
    if np.any(grid != np.round(grid)):
        raise ValueError("PGM samples must be integer-valued")
    if maxval is None:
        maxval = 255 if grid.max() <= 255 else 65535
    if not 0 < maxval < 65536:
        raise ValueError(f"maxval {maxval} outside 1..65535")
    if grid.min() < 0 or grid.max() > maxval:
        raise ValueError(f"samples outside [0, {maxval}]")
    dtype = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
    height, width = grid.shape
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    Path(path).write_bytes(header + grid.astype(dtype).tobytes())


# ---------------------------------------------------------------------------
# FPHM
# ---------------------------------------------------------------------------

def write_phase_map(grid, mask, path) -> None:
    """Write ``grid`` as FPHM, storing NaN where ``mask`` is False."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 2 or grid.size == 0:
        raise ValueError("grid must be a non-empty 2-D array")
    mask = check_mask(grid, mask) if mask is not None else np.isfinite(grid)
    if np.any(~np.isfinite(grid[mask])):
        raise ValueError("non-finite value under a valid mask pixel")
    values = np.where(mask, grid, np.nan).astype("<f4")
    height, width = grid.shape
    header = FPHM_MAGIC + np.array([width, height], dtype="<u4").tobytes()
    Path(path).write_bytes(header + values.tobytes())


def read_phase_map(path) -> tuple[np.ndarray, np.ndarray]:
    """Read an FPHM file. Returns ``(grid, mask)``; NaN pixels are invalid."""
    buf = Path(path).read_bytes()
    if len(buf) < 4 or buf[:4] != FPHM_MAGIC:
        raise UnsupportedFormatError("bad magic, not an FPHM phase map")
    if len(buf) < 12:
        raise HeaderError("FPHM header truncated")
    width, height = (int(v) for v in np.frombuffer(buf, dtype="<u4", count=2, offset=4))
    if width < 1 or height < 1:
        raise HeaderError(f"bad dimensions {width}x{height}")
    need = 12 + 4 * width * height
    if len(buf) != need:
        raise HeaderError(f"FPHM size mismatch: header implies {need} bytes, file has {len(buf)}")
    values = np.frombuffer(buf, dtype="<f4", offset=12).reshape(height, width)
    grid = values.astype(np.float64)
    return grid, ~np.isnan(grid)
