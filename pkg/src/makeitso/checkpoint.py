"""Generator checkpoint container.

Layout of a ``.misockpt`` file: one line of compact JSON (UTF-8, ending in a
single ``\\n``), then the raw array payloads back to back. Every payload is
little-endian float32 in C order; manifest offsets are bytes from the start
of the payload region. Arrays are written in sorted-name order so a given
params snapshot always serializes to the same bytes.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import CheckpointFormatError, IncompatibleArchitectureError
from .generator import GeneratorConfig, GeneratorParams, PARAM_DTYPE, compute_arch_hash

MAGIC = "misockpt"
FORMAT_VERSION = 1

_PAYLOAD_DTYPE = np.dtype("<f4")


def save_checkpoint(params: GeneratorParams, path: str | os.PathLike):
    names = sorted(params.arrays)
    manifest = []
    offset = 0
    payloads = []
    for name in names:
        arr = np.ascontiguousarray(params.arrays[name], dtype=_PAYLOAD_DTYPE)
        manifest.append({"name": name, "shape": list(arr.shape), "offset": offset})
        payloads.append(arr.tobytes())
        offset += arr.nbytes
    header = {
        "magic": MAGIC,
        "version": FORMAT_VERSION,
        "config": {
            "z_dim": params.config.z_dim,
            "w_dim": params.config.w_dim,
            "resolution": params.config.resolution,
            "channel_base": params.config.channel_base,
            "channel_max": params.config.channel_max,
            "mapping_hidden": params.config.mapping_hidden,
            "mapping_width": params.config.mapping_width,
            "lrelu_slope": params.config.lrelu_slope,
        },
        "arch_hash": params.arch_hash,
        "arrays": manifest,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode() + b"\n"
    tmp = os.fspath(path) + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(blob)
        for p in payloads:
            fh.write(p)
    os.replace(tmp, path)


def load_checkpoint(path: str | os.PathLike) -> GeneratorParams:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line)
    except json.JSONDecodeError as e:
        raise CheckpointFormatError(f"{path}: header is not valid JSON: {e}") from None
    if not isinstance(header, dict) or header.get("magic") != MAGIC:
        raise CheckpointFormatError(f"{path}: missing '{MAGIC}' magic")
    if header.get("version") != FORMAT_VERSION:
        raise CheckpointFormatError(
            f"{path}: unsupported version {header.get('version')!r}")
    try:
        config = GeneratorConfig(**header["config"])
        entries = header["arrays"]
        declared_hash = header["arch_hash"]
    except (KeyError, TypeError) as e:
        raise CheckpointFormatError(f"{path}: malformed header: {e}") from None

    arrays: dict[str, np.ndarray] = {}
    for entry in entries:
        try:
            name, shape, off = entry["name"], tuple(entry["shape"]), entry["offset"]
        except (KeyError, TypeError):
            raise CheckpointFormatError(f"{path}: malformed manifest entry: {entry!r}") from None
        size = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = size * _PAYLOAD_DTYPE.itemsize
        if off < 0 or off + nbytes > len(payload):
            raise CheckpointFormatError(
                f"{path}: array '{name}' extends past end of payload")
        flat = np.frombuffer(payload, dtype=_PAYLOAD_DTYPE, count=size, offset=off)
        arrays[name] = flat.reshape(shape).astype(PARAM_DTYPE)

    actual_hash = compute_arch_hash(config, arrays)
    if actual_hash != declared_hash:
        raise IncompatibleArchitectureError(
            f"{path}: declared arch hash {declared_hash} != recomputed {actual_hash}")
    return GeneratorParams(config=config, arrays=arrays, _arch_hash=actual_hash)
