"""Versioned binary model format.

::

    b"COPM" | u16 version | u32 header length | JSON header | array payload

The header (sorted keys) records the class, probe kind, ``get_params()``,
the seed, free-form fitted metadata, and for each array its name, dtype,
shape, and byte offset into the payload. Arrays are stored little-endian.
Identical fits therefore serialize to identical bytes.
"""

from __future__ import annotations

import json
import struct

import numpy as np
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_is_fitted

MAGIC = b"COPM"
VERSION = 1
_PREFIX = struct.Struct("<4sHI")


class ModelFormatError(ValueError):
    pass


def _registry():
    from .baseline import MostFrequentProbe
    from .gbdt import GBDTClassifier, GBDTRegressor
    from .linear import LinearProbe
    from .logistic import LogisticProbe
    from .mlp import MLPProbeClassifier, MLPProbeRegressor

    classes = (LinearProbe, MLPProbeRegressor, GBDTRegressor, MostFrequentProbe,
               LogisticProbe, MLPProbeClassifier, GBDTClassifier)
    return {c.__name__: c for c in classes}


def dumps(model) -> bytes:
    try:
        check_is_fitted(model)
    except NotFittedError as exc:
        raise ModelFormatError(f"cannot serialize: {exc}") from None
    meta, arrays = model._export()
    specs, chunks, offset = [], [], 0
    for name in sorted(arrays):
        arr = np.asarray(arrays[name])
        arr = np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder("<"))
        raw = arr.tobytes()
        specs.append({"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape),
                      "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    header = json.dumps({
        "class": type(model).__name__,
        "kind": model.probe_kind,
        "params": model.get_params(),
        "seed": model.get_params().get("random_state"),
        "meta": meta,
        "arrays": specs,
    }, sort_keys=True).encode("utf-8")
    return _PREFIX.pack(MAGIC, VERSION, len(header)) + header + b"".join(chunks)


def loads(blob: bytes):
    if len(blob) < _PREFIX.size:
        raise ModelFormatError("truncated model")
    magic, version, hlen = _PREFIX.unpack_from(blob)
    if magic != MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ModelFormatError(f"unsupported model version {version}")
    start = _PREFIX.size + hlen
    try:
        header = json.loads(blob[_PREFIX.size:start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"corrupt model header: {exc}") from None
    payload = blob[start:]
    arrays = {}
    for spec in header["arrays"]:
        a, n = spec["offset"], spec["nbytes"]
        if a + n > len(payload):
            raise ModelFormatError(f"truncated array {spec['name']}")
        arrays[spec["name"]] = np.frombuffer(payload[a:a + n], dtype=spec["dtype"]) \
            .reshape(spec["shape"]).copy()
    try:
        cls = _registry()[header["class"]]
    except KeyError:
        raise ModelFormatError(f"unknown model class {header['class']!r}") from None
    model = cls(**header["params"])
    model._import(header["meta"], arrays)
    return model
