"""Raw array blocks: little-endian float64 with a small self-describing header.

Layout::

    bytes 0-3    magic b"HZAR"
    bytes 4-7    uint32 format version (1)
    bytes 8-11   uint32 rank
    next 8*rank  uint64 shape, C order
    rest         float64 values, little-endian, C order
"""

import struct

import numpy as np

MAGIC = b"HZAR"
VERSION = 1


class BlockFormatError(ValueError):
    pass


def encode_block(array):
    a = np.ascontiguousarray(array, dtype="<f8")
    head = MAGIC + struct.pack("<II", VERSION, a.ndim) + struct.pack(f"<{a.ndim}Q", *a.shape)
    return head + a.tobytes()


def decode_block(buf):
    if buf[:4] != MAGIC:
        raise BlockFormatError("not an array block (bad magic)")
    version, ndim = struct.unpack_from("<II", buf, 4)
    if version != VERSION:
        raise BlockFormatError(f"unsupported block version {version}")
    shape = struct.unpack_from(f"<{ndim}Q", buf, 12)
    offset = 12 + 8 * ndim
    count = int(np.prod(shape)) if ndim else 1
    if len(buf) - offset != 8 * count:
        raise BlockFormatError(f"block payload has {len(buf) - offset} bytes, shape {shape} needs {8 * count}")
    return np.frombuffer(buf, dtype="<f8", count=count, offset=offset).reshape(shape).astype(np.float64)


def write_block(path, array):
    with open(path, "wb") as fh:
        fh.write(encode_block(array))


def read_block(path):
    with open(path, "rb") as fh:
        return decode_block(fh.read())
