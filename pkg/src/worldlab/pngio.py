"""Minimal indexed-palette PNG writer/reader.

Only the exact subset this package emits is supported: 8-bit indexed color,
filter 0 on every scanline, no interlace, one IDAT chunk.  Writing the same
pixels twice produces identical bytes, which is what dataset manifests and
the decode round-trip depend on.  A small tEXt chunk carries image geometry
(task name, cell size) so decoding does not have to guess the grid pitch.
"""

from __future__ import annotations

import json
import struct
import zlib

import numpy as np

from .errors import DecodeError

_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_META_KEYWORD = b"meta"


def _chunk(tag: bytes, payload: bytes) -> bytes:
    crc = zlib.crc32(tag + payload) & 0xFFFFFFFF
    return struct.pack(">I", len(payload)) + tag + payload + struct.pack(">I", crc)


def write_png(
    pixels: np.ndarray,
    palette: list[tuple[int, int, int]],
    meta: dict | None = None,
) -> bytes:
    """Encode a (h, w) uint8 index array against an RGB palette."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 2 or pixels.dtype != np.uint8:
        raise DecodeError(f"expected (h, w) uint8 pixels, got {pixels.dtype} {pixels.shape}")
    if int(pixels.max(initial=0)) >= len(palette):
        raise DecodeError(
            f"pixel index {int(pixels.max())} outside palette of {len(palette)} entries"
        )
    h, w = pixels.shape
    header = struct.pack(">IIBBBBB", w, h, 8, 3, 0, 0, 0)
    plte = b"".join(bytes(rgb) for rgb in palette)
    raw = b"".join(b"\x00" + pixels[r].tobytes() for r in range(h))
    idat = zlib.compress(raw, 9)
    out = [_SIGNATURE, _chunk(b"IHDR", header), _chunk(b"PLTE", plte)]
    if meta is not None:
        text = _META_KEYWORD + b"\x00" + json.dumps(
            meta, sort_keys=True, separators=(",", ":")
        ).encode("latin-1")
        out.append(_chunk(b"tEXt", text))
    out.append(_chunk(b"IDAT", idat))
    out.append(_chunk(b"IEND", b""))
    return b"".join(out)


def read_png(data: bytes) -> tuple[np.ndarray, list[tuple[int, int, int]], dict]:
    """Decode bytes produced by :func:`write_png`.

    Returns (pixels, palette, meta).  Anything outside the written subset
    raises DecodeError.
    """
    if not data.startswith(_SIGNATURE):
        raise DecodeError("not a PNG stream")
    pos = len(_SIGNATURE)
    width = height = None
    palette: list[tuple[int, int, int]] = []
    meta: dict = {}
    idat = b""
    while pos + 8 <= len(data):
        (length,) = struct.unpack(">I", data[pos : pos + 4])
        tag = data[pos + 4 : pos + 8]
        payload = data[pos + 8 : pos + 8 + length]
        (crc,) = struct.unpack(">I", data[pos + 8 + length : pos + 12 + length])
        if zlib.crc32(tag + payload) & 0xFFFFFFFF != crc:
            raise DecodeError(f"bad CRC in {tag!r} chunk")
        pos += 12 + length
        if tag == b"IHDR":
            width, height, depth, ctype, comp, filt, inter = struct.unpack(
                ">IIBBBBB", payload
            )
            if (depth, ctype, comp, filt, inter) != (8, 3, 0, 0, 0):
                raise DecodeError(
                    "unsupported PNG flavor: need 8-bit indexed, no interlace"
                )
        elif tag == b"PLTE":
            palette = [tuple(payload[i : i + 3]) for i in range(0, len(payload), 3)]
        elif tag == b"tEXt":
            key, _, value = payload.partition(b"\x00")
            if key == _META_KEYWORD:
                meta = json.loads(value.decode("latin-1"))
        elif tag == b"IDAT":
            idat += payload
        elif tag == b"IEND":
            break
    if width is None or not palette:
        raise DecodeError("missing IHDR or PLTE chunk")
    raw = zlib.decompress(idat)
    stride = width + 1
    if len(raw) != stride * height:
        raise DecodeError(f"IDAT holds {len(raw)} bytes, expected {stride * height}")
    rows = []
    for r in range(height):
        line = raw[r * stride : (r + 1) * stride]
        if line[0] != 0:
            raise DecodeError(f"scanline {r} uses filter {line[0]}, only 0 supported")
        rows.append(np.frombuffer(line[1:], dtype=np.uint8))
    return np.stack(rows), palette, meta
