"""
rsg_core - Checkpoint Container
Self-describing binary file for a trained model.

Layout:
    b"RSGL"                      magic
    uint32 (little endian)       header length in bytes
    header                       UTF-8 JSON: format_version, spec, parameters, meta
    payload                      raw little-endian float64 values, row-major,
                                 one block per parameter at its declared offset
"""

from __future__ import annotations

import json
import logging
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from .models import CheckpointError, ConfigError, ModelSpec, NumericError
from .numeric import RngState
from .zoo import ModelState, parameter_shapes

logger = logging.getLogger("rsg_core.checkpoint")

MAGIC = b"RSGL"
FORMAT_VERSION = 1
_LENGTH = struct.Struct("<I")
_DTYPE = np.dtype("<f8")


@dataclass
class Checkpoint:
    spec: ModelSpec
    state: ModelState
    meta: Dict[str, Any] = field(default_factory=dict)


def atomic_write(path: Union[str, Path], data: bytes) -> None:
    """Write to a temp file in the target directory, then rename over `path`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_checkpoint(spec: ModelSpec, state: ModelState, meta: Optional[Dict[str, Any]] = None) -> bytes:
    state.check(spec)
    entries = []
    blobs = []
    offset = 0
    for name, shape in parameter_shapes(spec).items():
        blob = np.ascontiguousarray(state.params[name], dtype=_DTYPE).tobytes()
        entries.append({"name": name, "shape": list(shape), "offset": offset})
        blobs.append(blob)
        offset += len(blob)
    header = {
        "format_version": FORMAT_VERSION,
        "spec": spec.to_dict(),
        "parameters": entries,
        "meta": meta or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    return MAGIC + _LENGTH.pack(len(header_bytes)) + header_bytes + b"".join(blobs)


def _parse_entry(entry: Dict[str, Any]) -> Tuple[str, int, int, int]:
    name = str(entry["name"])
    rows, cols = (int(n) for n in entry["shape"])
    offset = int(entry["offset"])
    if rows < 1 or cols < 1 or offset < 0:
        raise ValueError(f"bad shape or offset for {name}")
    return name, rows, cols, offset


def decode_checkpoint(data: bytes, seed: int = 0) -> Checkpoint:
    if data[:4] != MAGIC:
        raise CheckpointError("Not a checkpoint file (bad magic)")
    if len(data) < 8:
        raise CheckpointError("Truncated checkpoint header")
    (header_len,) = _LENGTH.unpack(data[4:8])
    try:
        header = json.loads(data[8:8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"Unreadable checkpoint header: {e}")
    if not isinstance(header, dict):
        raise CheckpointError("Checkpoint header is not a JSON object")
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"Unsupported checkpoint format_version {version!r}")

    try:
        spec = ModelSpec.from_dict(header["spec"])
        spec.validate()
        entries = [_parse_entry(entry) for entry in header["parameters"]]
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise CheckpointError(f"Malformed checkpoint header: {e}") from None

    payload = memoryview(data)[8 + header_len:]
    params = {}
    for name, rows, cols, start in entries:
        stop = start + rows * cols * _DTYPE.itemsize
        if stop > len(payload):
            raise CheckpointError(f"Payload for {name} is truncated")
        values = np.frombuffer(payload[start:stop], dtype=_DTYPE).reshape(rows, cols)
        params[name] = values.astype(np.float64)

    state = ModelState(params=params, rng=RngState(seed))
    try:
        state.check(spec)
    except (ConfigError, NumericError) as e:
        raise CheckpointError(f"Checkpoint parameters do not match the spec: {e}") from None
    return Checkpoint(spec=spec, state=state, meta=header.get("meta", {}))


def save_checkpoint(
    path: Union[str, Path],
    spec: ModelSpec,
    state: ModelState,
    meta: Optional[Dict[str, Any]] = None,
) -> Path:
    path = Path(path)
    atomic_write(path, encode_checkpoint(spec, state, meta))
    logger.info("Checkpoint written: %s (%s)", path, spec.kind.value)
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Checkpoint not found: {path}", code="FILE_NOT_FOUND")
    return decode_checkpoint(path.read_bytes())
