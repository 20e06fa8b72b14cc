"""Binary model file: versioned JSON header plus packed float32 weights.

Layout (little-endian):

    magic  b"MRSE1\\n"
    u32    header length in bytes
    bytes  UTF-8 JSON header {format_version, variant, input_shape, layers,
           label_map, norm_stats, init_seed, training_summary}
    bytes  float32 arrays for every parameterized layer in declaration
           order: conv/latent-pool weights as [c_out][c_in][kh][kw] then
           bias, dense weights as [n_out][n_in] then bias

Weights are serialized in 32-bit but loaded back into the 64-bit compute
arrays. Readers reject any format_version other than the one they know.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .. import MODEL_FORMAT_VERSION
from ..core import NormStats
from ..errors import ModelFormatError
from .model import GestureModel, Network, layer_from_spec

MAGIC = b"MRSE1\n"


def save_model(model: GestureModel, path) -> None:
    header = {
        "format_version": MODEL_FORMAT_VERSION,
        "variant": model.variant,
        "input_shape": list(model.network.input_shape),
        "layers": model.network.layer_specs(),
        "label_map": {str(k): v for k, v in model.label_map.items()},
        "norm_stats": {
            "mean": [float(v) for v in model.norm_stats.mean],
            "std": [float(v) for v in model.norm_stats.std],
        },
        "init_seed": model.init_seed,
        "training_summary": model.training_summary,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for _, _, arr in model.network.param_items():
            fh.write(arr.astype("<f4").tobytes())


def load_model(path) -> GestureModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[: len(MAGIC)] != MAGIC:
        raise ModelFormatError("bad magic; not a model file")
    offset = len(MAGIC)
    if len(data) < offset + 4:
        raise ModelFormatError("truncated header length")
    (header_len,) = struct.unpack_from("<I", data, offset)
    offset += 4
    try:
        header = json.loads(data[offset : offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"corrupt header: {exc}") from None
    offset += header_len

    version = header.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported format_version {version!r}, expected {MODEL_FORMAT_VERSION}"
        )
    layers = [layer_from_spec(spec) for spec in header["layers"]]
    network = Network(layers, input_shape=tuple(header["input_shape"]))
    for _, _, arr in network.param_items():
        nbytes = arr.size * 4
        if offset + nbytes > len(data):
            raise ModelFormatError("truncated weight data")
        values = np.frombuffer(data[offset : offset + nbytes], dtype="<f4")
        arr[...] = values.reshape(arr.shape).astype(np.float64)
        offset += nbytes
    if offset != len(data):
        raise ModelFormatError(f"{len(data) - offset} trailing bytes")

    stats = NormStats(
        mean=np.array(header["norm_stats"]["mean"], dtype=np.float64),
        std=np.array(header["norm_stats"]["std"], dtype=np.float64),
    )
    return GestureModel(
        network=network,
        norm_stats=stats,
        variant=header["variant"],
        init_seed=header["init_seed"],
        label_map={int(k): v for k, v in header["label_map"].items()},
        training_summary=header.get("training_summary", {}),
    )
