"""
SDFG binary grid format.

Little-endian header ``magic "SDFG" | version u32 | dims 3 x u32 | origin 3 x f64 |
spacing f64`` followed by float32 values, x index fastest.
"""

from pathlib import Path

import numpy as np

from ..core.sdf import SdfGrid
from ..exceptions import ValidationError

MAGIC = b"SDFG"
VERSION = 1
HEADER = np.dtype(
    [
        ("magic", "S4"),
        ("version", "<u4"),
        ("dims", "<u4", (3,)),
        ("origin", "<f8", (3,)),
        ("spacing", "<f8"),
    ]
)


def encode_grid(grid: SdfGrid) -> bytes:
    header = np.zeros(1, dtype=HEADER)
    header["magic"] = MAGIC
    header["version"] = VERSION
    header["dims"] = grid.dims
    header["origin"] = grid.origin
    header["spacing"] = grid.spacing
    values = grid.values.astype("<f4").ravel(order="F")
    return header.tobytes() + values.tobytes()


def decode_grid(data: bytes) -> SdfGrid:
    if len(data) < HEADER.itemsize:
        raise ValidationError("SDFG data shorter than its header")
    header = np.frombuffer(data, dtype=HEADER, count=1)[0]
    if bytes(header["magic"]) != MAGIC:
        raise ValidationError("Not an SDFG file (bad magic)")
    if int(header["version"]) != VERSION:
        raise ValidationError(f"Unsupported SDFG version {int(header['version'])}")

    dims = tuple(int(n) for n in header["dims"])
    count = int(np.prod(dims))
    available = (len(data) - HEADER.itemsize) // 4
    if available != count:
        raise ValidationError(f"SDFG payload holds {available} values, header says {count}")
    values = np.frombuffer(data, dtype="<f4", count=count, offset=HEADER.itemsize)
    return SdfGrid(
        np.array(header["origin"], dtype=np.float64),
        float(header["spacing"]),
        values.astype(np.float64).reshape(dims, order="F"),
    )


def save_grid(grid: SdfGrid, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_grid(grid))
    return path


def load_grid(path: str | Path) -> SdfGrid:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"Grid file not found: {path}")
    return decode_grid(path.read_bytes())
