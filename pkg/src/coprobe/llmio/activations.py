"""Hidden-state matrices and the ``.copa`` on-disk cache.

File layout (all integers little-endian)::

    b"COPA"                 4 bytes magic
    version                 u16 (currently 1)
    header_length           u32
    header                  UTF-8 JSON, keys: instance, representation,
                            tokens, dim, checksum (sha256 hex of payload)
    payload                 tokens*dim float32, row-major
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"COPA"
VERSION = 1
_PREFIX = struct.Struct("<4sHI")


class ActivationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ActivationMatrix:
    instance_name: str
    representation: str
    data: np.ndarray  # (tokens, dim) float32

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype="<f4")
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ActivationError(f"expected a non-empty 2-D matrix, got shape {data.shape}")
        if not np.isfinite(data).all():
            raise ActivationError(f"non-finite activations for {self.instance_name}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "representation", str(getattr(self.representation, "value",
                                                                self.representation)))

    @property
    def tokens(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def __eq__(self, other):
        if not isinstance(other, ActivationMatrix):
            return NotImplemented
        return (self.instance_name == other.instance_name
                and self.representation == other.representation
                and self.data.shape == other.data.shape
                and self.data.tobytes() == other.data.tobytes())


def encode_activations(m: ActivationMatrix) -> bytes:
    payload = m.data.tobytes()
    header = json.dumps({
        "instance": m.instance_name,
        "representation": m.representation,
        "tokens": m.tokens,
        "dim": m.dim,
        "checksum": hashlib.sha256(payload).hexdigest(),
    }, sort_keys=True).encode("utf-8")
    return _PREFIX.pack(MAGIC, VERSION, len(header)) + header + payload


def decode_activations(blob: bytes) -> ActivationMatrix:
    if len(blob) < _PREFIX.size:
        raise ActivationError("truncated file: no header")
    magic, version, hlen = _PREFIX.unpack_from(blob)
    if magic != MAGIC:
        raise ActivationError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ActivationError(f"unsupported version {version}")
    start = _PREFIX.size + hlen
    if len(blob) < start:
        raise ActivationError("truncated file: incomplete header")
    try:
        header = json.loads(blob[_PREFIX.size:start].decode("utf-8"))
        t, d = int(header["tokens"]), int(header["dim"])
    except (ValueError, KeyError, TypeError) as exc:
        raise ActivationError(f"corrupt header: {exc}") from None
    payload = blob[start:]
    if len(payload) != t * d * 4:
        raise ActivationError(
            f"payload is {len(payload)} bytes, header declares {t}x{d}x4 = {t * d * 4}")
    if hashlib.sha256(payload).hexdigest() != header.get("checksum"):
        raise ActivationError("checksum mismatch")
    data = np.frombuffer(payload, dtype="<f4").reshape(t, d)
    return ActivationMatrix(header["instance"], header["representation"], data)


def activation_cache_store(path, m: ActivationMatrix) -> None:
    """Write atomically, so concurrent readers never observe a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(encode_activations(m))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def activation_cache_load(path) -> ActivationMatrix:
    path = Path(path)
    if not path.exists():
        raise ActivationError(f"missing activation file {path}")
    return decode_activations(path.read_bytes())


def activation_path(root, problem, representation, instance_name) -> Path:
    """``<root>/<problem>/<representation>/<instance>.copa``"""
    problem = getattr(problem, "value", problem)
    representation = getattr(representation, "value", representation)
    return Path(root) / str(problem) / str(representation) / f"{instance_name}.copa"
