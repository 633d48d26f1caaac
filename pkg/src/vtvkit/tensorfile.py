"""Minimal self-describing binary tensor container.

Layout (little-endian throughout)::

    8 bytes   magic  b"VTFv0001"
    u8        dtype code (0 = f32, 1 = u8)
    u8        ndim
    ndim*u64  dims
    payload   row-major values
"""
from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from .errors import BadMagic, DecodeFailure, MissingPath, TruncatedPayload, WriteFailure

MAGIC = b"VTFv0001"

_CODES = {0: np.dtype("<f4"), 1: np.dtype("u1")}
_DTYPE_TO_CODE = {np.dtype("float32"): 0, np.dtype("uint8"): 1}


def encode_tensor(array) -> bytes:
    arr = np.asarray(array)
    if arr.dtype == np.bool_:
        arr = arr.astype(np.uint8)
    if arr.dtype not in _DTYPE_TO_CODE:
        if np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(np.float32)
        else:
            raise TypeError(f"unsupported tensor dtype {arr.dtype}; use float32 or uint8")
    code = _DTYPE_TO_CODE[arr.dtype]
    if arr.ndim > 255:
        raise ValueError("too many dimensions")
    header = MAGIC + struct.pack("<BB", code, arr.ndim)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    payload = np.ascontiguousarray(arr, dtype=_CODES[code]).tobytes(order="C")
    return header + payload


def decode_tensor(data: bytes) -> np.ndarray:
    if len(data) < 10 or data[:8] != MAGIC:
        raise BadMagic("not a tensor file (bad magic)")
    code, ndim = struct.unpack_from("<BB", data, 8)
    if code not in _CODES:
        raise DecodeFailure(f"unknown dtype code {code}")
    off = 10
    if len(data) < off + 8 * ndim:
        raise TruncatedPayload("header truncated")
    shape = struct.unpack_from(f"<{ndim}Q", data, off)
    off += 8 * ndim
    dtype = _CODES[code]
    count = int(np.prod(shape, dtype=np.int64)) if ndim else 1
    need = count * dtype.itemsize
    if len(data) - off != need:
        raise TruncatedPayload(f"payload has {len(data) - off} bytes, header implies {need}")
    arr = np.frombuffer(data, dtype=dtype, count=count, offset=off)
    return arr.reshape(shape).astype(dtype.newbyteorder("="))


def write_tensor(path, array) -> None:
    blob = encode_tensor(array)
    try:
        Path(path).write_bytes(blob)
    except OSError as exc:
        raise WriteFailure(f"cannot write {path}: {exc}") from exc


def read_tensor(path) -> np.ndarray:
    if not os.path.exists(path):
        raise MissingPath(str(path))
    return decode_tensor(Path(path).read_bytes())
