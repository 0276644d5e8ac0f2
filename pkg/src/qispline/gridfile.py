"""Grid file I/O for the command line tool.

A grid file is a single ``#``-prefixed JSON header line followed by the
payload.  The header names the axes (explicit node lists or a uniform
``start/stop/num`` spec), per-axis periodicity and periods, the stored
fields (``f`` alone, or ``f, fx, fy, fxy`` for 2D Hermite data, ``f, fp``
for 1D) and the encoding.  CSV payloads carry one grid point per line
(comma-separated components for vector data), ordered with the x index
varying fastest; field blocks follow one another in header order.  The
binary variant stores the same doubles raw, little-endian.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

Array = npt.NDArray[np.float64]

_FIELDS_1D = (("f",), ("f", "fp"))
_FIELDS_2D = (("f",), ("f", "fx", "fy", "fxy"))
_FIELDS_3D = (("f",),)


class GridFormatError(ValueError):
    """Malformed grid file (I/O side, exit code 2 in the CLI)."""


@dataclass
class GridFile:
    """Parsed grid data: axes, flags and one array per field.

    Field arrays have shape ``axes lengths + (p,) if p > 1``; the first
    array index is always x.
    """

    axes: list[Array]
    periodic: list[bool]
    periods: list[float | None]
    fields: dict[str, Array]
    components: int = 1

    @property
    def dim(self) -> int:
        return len(self.axes)


def _axis_nodes(spec) -> Array:
    if isinstance(spec, dict) and "nodes" in spec:
        nodes = np.asarray(spec["nodes"], dtype=np.float64)
    elif isinstance(spec, dict) and {"start", "stop", "num"} <= set(spec):
        num = int(spec["num"])
        if num < 2:
            raise GridFormatError("uniform axis needs num >= 2")
        nodes = np.linspace(float(spec["start"]), float(spec["stop"]), num)
    else:
        raise GridFormatError(f"bad axis spec: {spec!r}")
    if nodes.ndim != 1 or nodes.size < 2 or not np.all(np.diff(nodes) > 0):
        raise GridFormatError("axis nodes must be strictly increasing")
    return nodes


def read_grid(path) -> GridFile:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        rest = fh.read()
    if not header_line.startswith(b"#"):
        raise GridFormatError("grid file must start with a '#' JSON header line")
    try:
        hdr = json.loads(header_line[1:].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise GridFormatError(f"bad grid header: {exc}") from exc
    try:
        dim = int(hdr["dim"])
        axes_spec = hdr["axes"]
        field_names = tuple(hdr.get("fields", ["f"]))
        p = int(hdr.get("components", 1))
        periodic = [bool(b) for b in hdr.get("periodic", [False] * dim)]
        periods_raw = hdr.get("period", [None] * dim)
        encoding = hdr.get("encoding", "csv")
    except (KeyError, TypeError, ValueError) as exc:
        raise GridFormatError(f"bad grid header: {exc}") from exc
    if dim not in (1, 2, 3) or len(axes_spec) != dim:
        raise GridFormatError(f"dim must be 1, 2 or 3 with matching axes, got {dim}")
    allowed = {1: _FIELDS_1D, 2: _FIELDS_2D, 3: _FIELDS_3D}[dim]
    if field_names not in allowed:
        raise GridFormatError(
            f"fields {list(field_names)} not supported for {dim}D "
            f"(expected one of {[list(a) for a in allowed]})"
        )
    if p < 1 or (p > 1 and dim != 1):
        raise GridFormatError("vector components are supported for 1D grids only")
    axes = [_axis_nodes(s) for s in axes_spec]
    periods = [None if v is None else float(v) for v in periods_raw]
    for k in range(dim):
        if periodic[k] and periods[k] is None:
            raise GridFormatError(f"axis {k} is periodic but has no period")

    npoints = int(np.prod([a.size for a in axes]))
    total = npoints * len(field_names) * p
    if encoding == "csv":
        text = rest.decode("utf-8")
        rows = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if len(rows) != npoints * len(field_names):
            raise GridFormatError(
                f"expected {npoints * len(field_names)} payload lines, got {len(rows)}"
            )
        try:
            parsed = [[float(v) for v in ln.split(",")] for ln in rows]
        except ValueError as exc:
            raise GridFormatError(f"bad payload value: {exc}") from exc
        if any(len(row) != p for row in parsed):
            raise GridFormatError(f"expected {p} components per line")
        flat = np.array(parsed)
    elif encoding == "float64-le":
        flat = np.frombuffer(rest, dtype="<f8")
        if flat.size != total:
            raise GridFormatError(f"expected {total} doubles, got {flat.size}")
        flat = flat.reshape(-1, p)
    else:
        raise GridFormatError(f"unknown encoding {encoding!r}")
    if not np.all(np.isfinite(flat)):
        raise GridFormatError("grid payload contains non-finite values")

    shape = tuple(a.size for a in axes)
    fields: dict[str, Array] = {}
    for k, name in enumerate(field_names):
        block = flat[k * npoints:(k + 1) * npoints]
        arr = block.reshape(shape[::-1] + (p,)).transpose(
            tuple(range(dim))[::-1] + (dim,)
        )
        if p == 1:
            arr = arr[..., 0]
        fields[name] = np.ascontiguousarray(arr)
    return GridFile(axes, periodic, periods, fields, p)


def write_grid(path, grid: GridFile, encoding: str = "csv",
               uniform_axes: bool = False) -> None:
    """Serialize a grid; ``uniform_axes`` stores linspace specs when exact."""
    dim = grid.dim
    axes_spec = []
    for a in grid.axes:
        lin = np.linspace(a[0], a[-1], a.size)
        if uniform_axes and np.array_equal(lin, a):
            axes_spec.append({"start": a[0], "stop": a[-1], "num": a.size})
        else:
            axes_spec.append({"nodes": a.tolist()})
    hdr = {
        "dim": dim,
        "axes": axes_spec,
        "periodic": grid.periodic,
        "period": grid.periods,
        "fields": list(grid.fields.keys()),
        "components": grid.components,
        "encoding": encoding,
    }
    p = grid.components
    blocks = []
    for arr in grid.fields.values():
        a = arr if p > 1 else arr[..., None]
        # x fastest: reverse the axis order before C-ravel
        blocks.append(a.transpose(tuple(range(dim))[::-1] + (dim,)).reshape(-1, p))
    flat = np.concatenate(blocks, axis=0)
    with open(path, "wb") as fh:
        fh.write(b"#" + json.dumps(hdr).encode("utf-8") + b"\n")
        if encoding == "csv":
            lines = "\n".join(",".join(repr(float(v)) for v in row) for row in flat)
            fh.write(lines.encode("utf-8") + b"\n")
        elif encoding == "float64-le":
            fh.write(np.ascontiguousarray(flat, dtype="<f8").tobytes())
        else:
            raise GridFormatError(f"unknown encoding {encoding!r}")
