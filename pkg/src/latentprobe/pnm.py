"""Portable anymap (P5/P6) export and import for image tensors.

Dependency-free and bit-exactly specifiable: intensities map linearly from
[0, 1] to [0, 255] with round-half-to-even. Single-channel tensors are
written as P5 graymaps, three-channel tensors as P6 pixmaps.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .backend import ImageTensor
from .errors import ConfigurationError, FormatError


def write_pnm(path, image: ImageTensor) -> None:
    c, h, w = image.shape
    payload = np.rint(image.values * 255.0).astype(np.uint8)
    path = Path(path)
    if c == 1:
        header = f"P5\n{w} {h}\n255\n".encode("ascii")
        path.write_bytes(header + payload[0].tobytes())
    elif c == 3:
        header = f"P6\n{w} {h}\n255\n".encode("ascii")
        interleaved = np.transpose(payload, (1, 2, 0))  # (h, w, c)
        path.write_bytes(header + interleaved.tobytes())
    else:
        raise ConfigurationError(f"cannot export {c}-channel tensor as PNM")


def read_pnm(path) -> ImageTensor:
    blob = Path(path).read_bytes()
    magic = blob[:2]
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"{path}: not a binary PNM file", offset=0)
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(blob) and blob[pos] in b" \t\r\n":
            pos += 1
        if pos < len(blob) and blob[pos:pos + 1] == b"#":
            while pos < len(blob) and blob[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < len(blob) and blob[pos] not in b" \t\r\n":
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PNM header", offset=pos)
        fields.append(int(blob[start:pos]))
    pos += 1  # single whitespace after maxval
    w, h, maxval = fields
    if maxval != 255:
        raise FormatError(f"{path}: only maxval 255 supported, got {maxval}", offset=pos)
    channels = 1 if magic == b"P5" else 3
    expected = w * h * channels
    raw = blob[pos:]
    if len(raw) != expected:
        raise FormatError(
            f"{path}: payload holds {len(raw)} bytes, header needs {expected}", offset=pos
        )
    data = np.frombuffer(raw, dtype=np.uint8).astype(np.float64) / 255.0
    if channels == 1:
        values = data.reshape(1, h, w)
    else:
        values = np.transpose(data.reshape(h, w, 3), (2, 0, 1))
    return ImageTensor(values)
