"""Binary formats for image stacks and detection maps.

A stack ``<name>`` is a JSON header ``<name>.json``::

    {"T": ..., "height": ..., "width": ..., "p": ..., "dtype": "c64",
     "layout": "t-row-col-chan"}

next to a payload ``<name>.bin`` of interleaved (real, imag) float32
little-endian pairs in ``[t][row][col][channel]`` order.

A map ``<name>`` is a JSON sidecar ``{"rows", "cols", "dtype": "f64",
"nan_count"}`` plus a row-major float64 little-endian payload.
"""

import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import InvalidDims, IoError, MalformedHeader, SizeMismatch

STACK_DTYPE = "c64"
STACK_LAYOUT = "t-row-col-chan"
MAP_DTYPE = "f64"


@dataclass(frozen=True)
class MitsHeader:
    T: int
    height: int
    width: int
    p: int
    dtype: str = STACK_DTYPE
    layout: str = STACK_LAYOUT

    @property
    def shape(self):
        return (self.T, self.height, self.width, self.p)

    @property
    def payload_bytes(self):
        return 8 * self.T * self.height * self.width * self.p


def _paths(path):
    base = os.fspath(path)
    for ext in (".json", ".bin"):
        if base.endswith(ext):
            base = base[: -len(ext)]
    return base + ".json", base + ".bin"


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedHeader(f"{path}: invalid JSON ({exc.msg})") from exc
    except OSError as exc:
        raise IoError(f"{path}: {exc.strerror or exc}") from exc


def _read_bytes(path):
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise IoError(f"{path}: {exc.strerror or exc}") from exc


def _write(path, data, mode):
    try:
        with open(path, mode, **({} if "b" in mode else {"encoding": "utf-8"})) as fh:
            fh.write(data)
    except OSError as exc:
        raise IoError(f"{path}: {exc.strerror or exc}") from exc


def parse_header(obj):
    """Validate a decoded header object and return a :class:`MitsHeader`."""
    if not isinstance(obj, dict):
        raise MalformedHeader("header must be a JSON object")
    dims = {}
    for key in ("T", "height", "width", "p"):
        v = obj.get(key)
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise MalformedHeader(f"header field {key!r} must be an integer >= 1, got {v!r}")
        dims[key] = v
    if obj.get("dtype") != STACK_DTYPE:
        raise MalformedHeader(f"unsupported dtype {obj.get('dtype')!r}, expected {STACK_DTYPE!r}")
    if obj.get("layout") != STACK_LAYOUT:
        raise MalformedHeader(f"unsupported layout {obj.get('layout')!r}, expected {STACK_LAYOUT!r}")
    return MitsHeader(**dims)


def load_mits(path):
    """Read an image stack.

    Parameters
    ----------
    path : str or PathLike
        Stack name, with or without the ``.json``/``.bin`` extension.

    Returns
    -------
    stack : ndarray of complex64, shape (T, height, width, p)
    """
    hpath, bpath = _paths(path)
    header = parse_header(_read_json(hpath))
    raw = _read_bytes(bpath)
    if len(raw) != header.payload_bytes:
        raise SizeMismatch(header.payload_bytes, len(raw))
    return np.frombuffer(raw, dtype="<c8").reshape(header.shape).copy()


def save_mits(stack, path):
    """Write a ``(T, height, width, p)`` complex stack; returns the header."""
    x = np.asarray(stack)
    if x.ndim != 4 or min(x.shape) < 1:
        raise InvalidDims(f"stack must have shape (T, height, width, p) with all dims >= 1, got {x.shape}")
    header = MitsHeader(*(int(s) for s in x.shape))
    hpath, bpath = _paths(path)
    _write(bpath, np.ascontiguousarray(x, dtype="<c8").tobytes(), "wb")
    _write(hpath, json.dumps(asdict(header), indent=2) + "\n", "w")
    return header


def save_map(scores, path):
    """Write a 2-D float map (NaN marks failed windows); returns the sidecar dict."""
    m = np.asarray(scores, dtype=float)
    if m.ndim != 2 or m.size == 0:
        raise InvalidDims(f"map must be a non-empty 2-D array, got shape {m.shape}")
    if np.any(np.isinf(m)):
        raise InvalidDims("map entries must be finite or NaN")
    meta = {"rows": int(m.shape[0]), "cols": int(m.shape[1]), "dtype": MAP_DTYPE,
            "nan_count": int(np.isnan(m).sum())}
    hpath, bpath = _paths(path)
    _write(bpath, np.ascontiguousarray(m, dtype="<f8").tobytes(), "wb")
    _write(hpath, json.dumps(meta, indent=2) + "\n", "w")
    return meta


def load_map(path):
    hpath, bpath = _paths(path)
    meta = _read_json(hpath)
    if not isinstance(meta, dict) or meta.get("dtype") != MAP_DTYPE:
        raise MalformedHeader("map sidecar must be an object with dtype 'f64'")
    rows, cols = meta.get("rows"), meta.get("cols")
    if not all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in (rows, cols)):
        raise MalformedHeader("map sidecar needs integer rows, cols >= 1")
    raw = _read_bytes(bpath)
    if len(raw) != 8 * rows * cols:
        raise SizeMismatch(8 * rows * cols, len(raw))
    return np.frombuffer(raw, dtype="<f8").reshape(rows, cols).copy()
