"""Reading and writing IDX files (the MNIST container format).

Layout, bit-exact: a big-endian 32-bit magic number (0x00000803 for 3-D
image tensors, 0x00000801 for 1-D label vectors), one big-endian 32-bit
size per dimension, then unsigned bytes in row-major order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


class IdxError(ValueError):
    """Malformed IDX input."""


class BadMagicError(IdxError):
    pass


class TruncatedFileError(IdxError):
    pass


class CountMismatchError(IdxError):
    """Image and label files disagree on the number of examples."""


def _read_header(data: bytes, path, expected_magic: int, ndim: int):
    if len(data) < 4:
        raise TruncatedFileError(f"{path}: file shorter than its magic number")
    magic = struct.unpack(">I", data[:4])[0]
    if magic != expected_magic:
        raise BadMagicError(
            f"{path}: bad magic number 0x{magic:08x}, expected 0x{expected_magic:08x}"
        )
    header_len = 4 + 4 * ndim
    if len(data) < header_len:
        raise TruncatedFileError(f"{path}: file shorter than its {header_len}-byte header")
    dims = struct.unpack(f">{ndim}I", data[4:header_len])
    return dims, data[header_len:]


def _check_payload(payload: bytes, expected: int, path):
    if len(payload) < expected:
        raise TruncatedFileError(
            f"{path}: payload holds {len(payload)} bytes, header promises {expected}"
        )
    if len(payload) > expected:
        raise IdxError(f"{path}: {len(payload) - expected} trailing bytes after payload")


def read_images(path) -> np.ndarray:
    """Parse an IDX image tensor into a (count, rows, cols) uint8 array."""
    data = Path(path).read_bytes()
    (count, rows, cols), payload = _read_header(data, path, IMAGE_MAGIC, 3)
    _check_payload(payload, count * rows * cols, path)
    return np.frombuffer(payload, dtype=np.uint8).reshape(count, rows, cols)


def read_labels(path) -> np.ndarray:
    data = Path(path).read_bytes()
    (count,), payload = _read_header(data, path, LABEL_MAGIC, 1)
    _check_payload(payload, count, path)
    return np.frombuffer(payload, dtype=np.uint8)


def write_images(path, images: np.ndarray) -> None:
    images = np.asarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise ValueError("images must be (count, rows, cols)")
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", IMAGE_MAGIC, *images.shape))
        f.write(images.tobytes(order="C"))


def write_labels(path, labels: np.ndarray) -> None:
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValueError("labels must be 1-D")
    if labels.min(initial=0) < 0 or labels.max(initial=0) > 255:
        raise ValueError("labels must fit in a byte")
    with open(path, "wb") as f:
        f.write(struct.pack(">II", LABEL_MAGIC, len(labels)))
        f.write(labels.astype(np.uint8).tobytes(order="C"))
