"""File formats and configuration.

Volumes live as a two-file pair: a text header (``key: value`` lines, ``#``
comments) next to a raw little-endian binary block.  Images are 16-bit
binary PGM with a text sidecar recording the normalization bounds.  Tables
are plain CSV with a header row.  Floats are serialized with ``repr`` so a
write/read cycle and a repeated run are byte-identical.

All writers go through a temp-file-then-rename step, so an interrupted run
never leaves a truncated artifact behind.
"""

from __future__ import annotations

import csv
import io as _stdio
import math
import os
import tempfile
from dataclasses import dataclass, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .model import DataError, EnvelopeImage, RoiSpec, Volume, validate_volume

__all__ = [
    "VOLUME_MAGIC",
    "PipelineConfig",
    "atomic_write_bytes",
    "atomic_write_text",
    "format_kv",
    "parse_kv",
    "read_volume",
    "write_volume",
    "write_image",
    "write_csv",
    "format_csv",
    "read_config",
    "parse_roi",
]

VOLUME_MAGIC = "PAVOL1"

_DTYPES = {"f64le": np.dtype("<f8"), "f32le": np.dtype("<f4")}
_LAYOUT = "x-major, y, t-fastest"
_BYTE_ORDER = "little-endian"


# ---------------------------------------------------------------------------
# atomic writes


def atomic_write_bytes(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        mask = os.umask(0)
        os.umask(mask)
        os.chmod(tmp, 0o666 & ~mask)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


# ---------------------------------------------------------------------------
# key: value text blocks (headers, sidecars, config files)


def _is_single_line(text: str) -> bool:
    # The reader splits with str.splitlines(), which breaks on \r, \v, \f,
    # NEL, and the unicode separators as well as \n; the writer must refuse
    # everything the reader would treat as a line boundary.
    return len(f"x{text}x".splitlines()) == 1


def format_kv(pairs: Mapping[str, str]) -> str:
    lines = []
    for key, value in pairs.items():
        key = str(key)
        value = str(value)
        if ":" in key or not _is_single_line(key) or not _is_single_line(value):
            raise DataError(f"key/value not representable: {key!r}: {value!r}")
        lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def parse_kv(text: str, source: str = "<string>") -> Dict[str, str]:
    pairs: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise DataError(f"{source}:{lineno}: expected 'key: value', got {raw!r}")
        key = key.strip()
        if not key:
            raise DataError(f"{source}:{lineno}: empty key")
        if key in pairs:
            raise DataError(f"{source}:{lineno}: duplicate key {key!r}")
        pairs[key] = value.strip()
    return pairs


def _require(pairs: Mapping[str, str], key: str, source: str) -> str:
    if key not in pairs:
        raise DataError(f"{source}: missing required field {key!r}")
    return pairs[key]


def _parse_int(text: str, key: str, source: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise DataError(f"{source}: field {key!r} is not an integer: {text!r}") from None


def _parse_float(text: str, key: str, source: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataError(f"{source}: field {key!r} is not a number: {text!r}") from None


# ---------------------------------------------------------------------------
# volumes


def _data_path(header_path: str, basename: str) -> str:
    return os.path.join(os.path.dirname(os.path.abspath(header_path)), basename)


def write_volume(
    volume: Volume,
    path: str,
    dtype: str = "f64le",
    provenance: Optional[str] = None,
) -> None:
    """Write ``volume`` as a text header at ``path`` plus ``path + '.bin'``."""
    validate_volume(volume)
    if dtype not in _DTYPES:
        raise DataError(f"unknown dtype {dtype!r}; expected one of {sorted(_DTYPES)}")
    data_name = os.path.basename(path) + ".bin"
    pairs = {
        "magic": VOLUME_MAGIC,
        "nx": str(volume.nx),
        "ny": str(volume.ny),
        "nt": str(volume.nt),
        "dt": repr(volume.dt),
        "dtype": dtype,
        "byte_order": _BYTE_ORDER,
        "layout": _LAYOUT,
        "data": data_name,
    }
    if provenance is not None:
        pairs["provenance"] = provenance
    raw = np.ascontiguousarray(volume.data, dtype=_DTYPES[dtype]).tobytes()
    atomic_write_bytes(path + ".bin", raw)
    atomic_write_text(path, format_kv(pairs))


def read_volume(path: str) -> Volume:
    """Read a header/data pair back into a Volume (samples promoted to f64)."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except FileNotFoundError:
        raise FileNotFoundError(f"volume header not found: {path}") from None
    pairs = parse_kv(text, source=path)
    magic = _require(pairs, "magic", path)
    if magic != VOLUME_MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}; expected {VOLUME_MAGIC!r}")
    nx = _parse_int(_require(pairs, "nx", path), "nx", path)
    ny = _parse_int(_require(pairs, "ny", path), "ny", path)
    nt = _parse_int(_require(pairs, "nt", path), "nt", path)
    dt = _parse_float(_require(pairs, "dt", path), "dt", path)
    dtype = _require(pairs, "dtype", path)
    if dtype not in _DTYPES:
        raise DataError(f"{path}: unknown dtype {dtype!r}; expected one of {sorted(_DTYPES)}")
    byte_order = pairs.get("byte_order", _BYTE_ORDER)
    if byte_order != _BYTE_ORDER:
        raise DataError(f"{path}: unsupported byte_order {byte_order!r}")
    layout = pairs.get("layout", _LAYOUT)
    if layout != _LAYOUT:
        raise DataError(f"{path}: unsupported layout {layout!r}")
    data_file = _data_path(path, _require(pairs, "data", path))
    try:
        with open(data_file, "rb") as handle:
            raw = handle.read()
    except FileNotFoundError:
        raise FileNotFoundError(f"volume data not found: {data_file}") from None
    item = _DTYPES[dtype].itemsize
    expected = nx * ny * nt * item
    if len(raw) != expected:
        raise DataError(
            f"{data_file}: has {len(raw)} bytes but header {path} requires "
            f"{nx}*{ny}*{nt}*{item} = {expected}"
        )
    data = np.frombuffer(raw, dtype=_DTYPES[dtype]).astype(np.float64)
    volume = Volume(nx=nx, ny=ny, nt=nt, dt=dt, data=data)
    return validate_volume(volume)


# ---------------------------------------------------------------------------
# images


def write_image(image: EnvelopeImage, path: str) -> None:
    """Write a 16-bit binary PGM plus a ``path + '.meta'`` sidecar.

    Pixels are min-max normalized to [0, 65535]; a constant image maps to
    uniform mid-gray and the sidecar flags it as degenerate so the caller
    knows the bounds carry no information.
    """
    pixels = image.pixels
    lo = float(pixels.min())
    hi = float(pixels.max())
    degenerate = hi == lo
    if degenerate:
        scaled = np.full(pixels.shape, 32768, dtype=np.uint16)
    else:
        scaled = np.rint((pixels - lo) * (65535.0 / (hi - lo)))
        scaled = np.clip(scaled, 0, 65535).astype(np.uint16)
    rows = scaled.T  # row-major image: ny rows of nx columns
    header = f"P5\n{image.nx} {image.ny}\n65535\n".encode("ascii")
    atomic_write_bytes(path, header + rows.astype(">u2").tobytes())
    meta = {
        "min": repr(lo),
        "max": repr(hi),
        "maxval": "65535",
        "rows": str(image.ny),
        "cols": str(image.nx),
        "degenerate": "true" if degenerate else "false",
    }
    atomic_write_text(path + ".meta", format_kv(meta))


# ---------------------------------------------------------------------------
# CSV tables


def _format_cell(value: object) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if bool(value) else "false"
    if isinstance(value, (float, np.floating)):
        # float(...) first: np.float64 subclasses float but reprs differently.
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def format_csv(header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    buffer = _stdio.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        if len(row) != len(header):
            raise DataError(
                f"row has {len(row)} cells but header has {len(header)}"
            )
        writer.writerow([_format_cell(cell) for cell in row])
    return buffer.getvalue()


def write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence[object]]) -> None:
    atomic_write_text(path, format_csv(header, rows))


# ---------------------------------------------------------------------------
# pipeline configuration


def parse_roi(text: str) -> RoiSpec:
    """Parse ``"t_lo:t_hi"`` into a RoiSpec."""
    lo, sep, hi = text.partition(":")
    if not sep:
        raise DataError(f"roi must look like 't_lo:t_hi', got {text!r}")
    try:
        return RoiSpec(int(lo), int(hi))
    except ValueError:
        raise DataError(f"roi bounds must be integers, got {text!r}") from None


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs shared by the CLI subcommands.

    ``q`` and ``noise_window`` accept the string ``"auto"``; auto q runs the
    candidate-grid selection first (which requires ``roi``), and auto
    noise_window picks 5% of the trace length (at least 16 samples).
    """

    q: Union[float, str] = "auto"
    noise_window: Union[int, str] = "auto"
    roi: Optional[RoiSpec] = None
    q_grid: Optional[Tuple[float, ...]] = None
    n_sample: int = 32
    seed: int = 0
    lp_cutoff_hz: float = 5e6
    background_path: Optional[str] = None

    def __post_init__(self) -> None:
        if isinstance(self.q, str):
            if self.q != "auto":
                raise DataError(f"q must be a positive number or 'auto', got {self.q!r}")
        else:
            q = float(self.q)
            if not (math.isfinite(q) and q > 0):
                raise DataError(f"q must be a positive number or 'auto', got {self.q!r}")
            object.__setattr__(self, "q", q)
        if isinstance(self.noise_window, str):
            if self.noise_window != "auto":
                raise DataError(
                    f"noise_window must be a positive integer or 'auto', got {self.noise_window!r}"
                )
        elif not isinstance(self.noise_window, int) or self.noise_window < 1:
            raise DataError(
                f"noise_window must be a positive integer or 'auto', got {self.noise_window!r}"
            )
        if self.q_grid is not None:
            grid = tuple(float(v) for v in self.q_grid)
            if not grid:
                raise DataError("q_grid must be non-empty when given")
            for v in grid:
                if not (math.isfinite(v) and v > 0):
                    raise DataError(f"q_grid values must be finite and positive, got {v!r}")
            object.__setattr__(self, "q_grid", grid)
        if not isinstance(self.n_sample, int) or self.n_sample < 1:
            raise DataError(f"n_sample must be a positive integer, got {self.n_sample!r}")
        if not isinstance(self.seed, int):
            raise DataError(f"seed must be an integer, got {self.seed!r}")
        cutoff = float(self.lp_cutoff_hz)
        if not (math.isfinite(cutoff) and cutoff > 0):
            raise DataError(f"lp_cutoff_hz must be finite and positive, got {self.lp_cutoff_hz!r}")
        object.__setattr__(self, "lp_cutoff_hz", cutoff)


_CONFIG_KEYS = {
    "q",
    "noise_window",
    "roi",
    "q_grid",
    "n_sample",
    "seed",
    "lp_cutoff_hz",
    "background_path",
}


def read_config(path: str) -> PipelineConfig:
    """Load a PipelineConfig from a flat key-value file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except FileNotFoundError:
        raise FileNotFoundError(f"config file not found: {path}") from None
    pairs = parse_kv(text, source=path)
    unknown = sorted(set(pairs) - _CONFIG_KEYS)
    if unknown:
        raise DataError(f"{path}: unknown config keys {unknown}")
    return config_from_strings(pairs, source=path)


def config_from_strings(
    pairs: Mapping[str, str],
    source: str = "<config>",
    base: Optional[PipelineConfig] = None,
) -> PipelineConfig:
    """Build (or override) a config from string-valued settings."""
    config = base if base is not None else PipelineConfig()
    updates: Dict[str, object] = {}
    for key, text in pairs.items():
        if key == "q":
            updates["q"] = text if text == "auto" else _parse_float(text, "q", source)
        elif key == "noise_window":
            updates["noise_window"] = (
                text if text == "auto" else _parse_int(text, "noise_window", source)
            )
        elif key == "roi":
            updates["roi"] = parse_roi(text)
        elif key == "q_grid":
            # An empty value means "derive the grid from the data", matching
            # the writer, which records an auto grid as an empty field.
            parts = [p for p in (s.strip() for s in text.split(",")) if p]
            updates["q_grid"] = (
                tuple(_parse_float(p, "q_grid", source) for p in parts) or None
            )
        elif key == "n_sample":
            updates["n_sample"] = _parse_int(text, "n_sample", source)
        elif key == "seed":
            updates["seed"] = _parse_int(text, "seed", source)
        elif key == "lp_cutoff_hz":
            updates["lp_cutoff_hz"] = _parse_float(text, "lp_cutoff_hz", source)
        elif key == "background_path":
            updates["background_path"] = text or None
        else:
            raise DataError(f"{source}: unknown config key {key!r}")
    return replace(config, **updates)
