"""RIFF/WAVE reading and writing.

Supports PCM 16/24-bit and IEEE float32 (including the extensible
format wrapper). Multichannel audio is mixed down to mono with equal
weights. float32 round trips are bit-exact.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import InputError
from .signal import Signal

_FMT_PCM = 1
_FMT_FLOAT = 3
_FMT_EXTENSIBLE = 0xFFFE


class WavFormatError(InputError):
    pass


def _read_chunk_header(data: bytes, offset: int, path) -> tuple[bytes, int]:
    if offset + 8 > len(data):
        raise WavFormatError(
            f"{path}: truncated file: chunk header expected at byte offset {offset}, "
            f"file ends at {len(data)}"
        )
    cid, size = struct.unpack_from("<4sI", data, offset)
    return cid, size


def load_wav(path) -> Signal:
    """Load a WAV file as a mono Signal with samples in [-1, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    samples = None
    offset = 12
    while offset + 8 <= len(data):
        cid, size = _read_chunk_header(data, offset, path)
        body_start = offset + 8
        if cid == b"fmt ":
            if body_start + 16 > len(data):
                raise WavFormatError(
                    f"{path}: truncated fmt chunk at byte offset {body_start}"
                )
            audio_format, n_channels, sample_rate, _, block_align, bits = struct.unpack_from(
                "<HHIIHH", data, body_start
            )
            if audio_format == _FMT_EXTENSIBLE:
                if body_start + 26 > len(data):
                    raise WavFormatError(
                        f"{path}: truncated extensible fmt chunk at byte offset {body_start}"
                    )
                audio_format = struct.unpack_from("<H", data, body_start + 24)[0]
            fmt = (audio_format, n_channels, sample_rate, block_align, bits)
        elif cid == b"data":
            if fmt is None:
                raise WavFormatError(f"{path}: data chunk appears before fmt chunk")
            expected_end = body_start + size
            if expected_end > len(data):
                raise WavFormatError(
                    f"{path}: truncated data chunk: expected {size} bytes at byte "
                    f"offset {body_start}, file ends at byte offset {len(data)}"
                )
            samples = _decode(data[body_start:expected_end], fmt, path)
        offset = body_start + size + (size & 1)

    if fmt is None:
        raise WavFormatError(f"{path}: missing fmt chunk")
    if samples is None:
        raise WavFormatError(f"{path}: missing data chunk")
    audio_format, n_channels, sample_rate, _, bits = fmt
    if n_channels > 1:
        samples = samples.reshape(-1, n_channels).mean(axis=1)
    return Signal(samples, sample_rate)


def _decode(raw: bytes, fmt, path) -> np.ndarray:
    audio_format, n_channels, _, _, bits = fmt
    if audio_format == _FMT_PCM and bits == 16:
        return np.frombuffer(raw[: len(raw) // 2 * 2], dtype="<i2").astype(np.float64) / 32768.0
    if audio_format == _FMT_PCM and bits == 24:
        usable = len(raw) // 3 * 3
        b = np.frombuffer(raw[:usable], dtype=np.uint8).reshape(-1, 3)
        vals = (
            b[:, 0].astype(np.int32)
            | (b[:, 1].astype(np.int32) << 8)
            | (b[:, 2].astype(np.int32) << 16)
        )
        vals = np.where(vals >= 1 << 23, vals - (1 << 24), vals)
        return vals.astype(np.float64) / float(1 << 23)
    if audio_format == _FMT_FLOAT and bits == 32:
        return np.frombuffer(raw[: len(raw) // 4 * 4], dtype="<f4").astype(np.float64)
    names = {_FMT_PCM: "PCM", _FMT_FLOAT: "IEEE float"}
    name = names.get(audio_format, f"format code {audio_format}")
    raise WavFormatError(
        f"{path}: unsupported codec: {bits}-bit {name} "
        "(supported: 16/24-bit PCM, 32-bit float)"
    )


def save_wav(signal: Signal, path, encoding: str = "float32") -> None:
    """Write a mono WAV file. encoding: float32 (default), int16, or int24."""
    x = signal.samples
    if encoding == "float32":
        audio_format, bits = _FMT_FLOAT, 32
        payload = x.astype("<f4").tobytes()
    elif encoding == "int16":
        audio_format, bits = _FMT_PCM, 16
        ints = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2")
        payload = ints.tobytes()
    elif encoding == "int24":
        audio_format, bits = _FMT_PCM, 24
        ints = np.clip(np.round(x * float(1 << 23)), -(1 << 23), (1 << 23) - 1).astype(np.int32)
        b = np.empty((len(ints), 3), dtype=np.uint8)
        b[:, 0] = ints & 0xFF
        b[:, 1] = (ints >> 8) & 0xFF
        b[:, 2] = (ints >> 16) & 0xFF
        payload = b.tobytes()
    else:
        raise ValueError(f"unknown encoding {encoding!r}")

    block_align = bits // 8
    byte_rate = signal.sample_rate * block_align
    fmt_chunk = struct.pack(
        "<HHIIHH", audio_format, 1, signal.sample_rate, byte_rate, block_align, bits
    )
    pad = b"\x00" if len(payload) % 2 else b""
    riff_size = 4 + 8 + len(fmt_chunk) + 8 + len(payload) + len(pad)
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", riff_size) + b"WAVE")
        fh.write(b"fmt " + struct.pack("<I", len(fmt_chunk)) + fmt_chunk)
        fh.write(b"data" + struct.pack("<I", len(payload)) + payload + pad)
