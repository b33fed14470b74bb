"""Binary container for named float32 tensors plus a JSON manifest.

Layout, all little-endian:

    magic   4 bytes  b"CDWB"
    u32     format version (1)
    u32     manifest byte length, then that many bytes of UTF-8 JSON
    u32     tensor count
    per tensor:
        u16      name byte length, then UTF-8 name
        u8       rank
        u32*rank extents
        raw      float32 values, row-major

Save followed by load is bit-exact; tensor order is preserved.
"""

import json
import struct
from typing import Dict, Tuple

import numpy as np

MAGIC = b"CDWB"
VERSION = 1


def save_tensors(path: str, tensors: Dict[str, np.ndarray],
                 manifest: dict = None) -> None:
    blob = json.dumps(manifest or {}, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(struct.pack("<I", len(tensors)))
        for name, arr in tensors.items():
            arr = np.ascontiguousarray(arr, dtype=np.float32)
            encoded = name.encode("utf-8")
            if len(encoded) > 0xFFFF:
                raise ValueError(f"tensor name too long: {name[:40]}...")
            f.write(struct.pack("<H", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<B", arr.ndim))
            for extent in arr.shape:
                f.write(struct.pack("<I", extent))
            f.write(arr.astype("<f4").tobytes())


def _read_exact(f, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise ValueError(f"truncated weight container while reading {what}")
    return data


def load_tensors(path: str) -> Tuple[Dict[str, np.ndarray], dict]:
    with open(path, "rb") as f:
        if _read_exact(f, 4, "magic") != MAGIC:
            raise ValueError(f"{path} is not a weight container "
                             f"(bad magic)")
        (version,) = struct.unpack("<I", _read_exact(f, 4, "version"))
        if version != VERSION:
            raise ValueError(f"unsupported container version {version}")
        (mlen,) = struct.unpack("<I", _read_exact(f, 4, "manifest length"))
        manifest = json.loads(_read_exact(f, mlen, "manifest").decode("utf-8"))
        (count,) = struct.unpack("<I", _read_exact(f, 4, "tensor count"))
        tensors: Dict[str, np.ndarray] = {}
        for _ in range(count):
            (nlen,) = struct.unpack("<H", _read_exact(f, 2, "name length"))
            name = _read_exact(f, nlen, "name").decode("utf-8")
            (rank,) = struct.unpack("<B", _read_exact(f, 1, "rank"))
            shape = struct.unpack(
                f"<{rank}I", _read_exact(f, 4 * rank, "extents"))
            n = int(np.prod(shape)) if rank else 1
            raw = _read_exact(f, 4 * n, f"values of {name}")
            tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()
        return tensors, manifest
