"""Binary container for model checkpoints and embedding indexes.

Layout: magic "CLSP", version u32, then records of
(name_len u32, name, dtype u8, rank u8, dims u32*rank, little-endian payload),
terminated by a CRC32 (u32) of every preceding byte.
"""

import struct
import zlib

import numpy as np

from .errors import CheckpointError

MAGIC = b"CLSP"
VERSION = 1

_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8"), 3: np.dtype("<i8")}
_BYTES_TAG = 4
_TAGS = {np.dtype("float32"): 1, np.dtype("float64"): 2, np.dtype("int64"): 3}


def serialize_records(records):
    """records: iterable of (name, ndarray-or-bytes), order preserved."""
    out = [MAGIC, struct.pack("<I", VERSION)]
    for name, payload in records:
        raw = name.encode("utf-8")
        out.append(struct.pack("<I", len(raw)))
        out.append(raw)
        if isinstance(payload, (bytes, bytearray)):
            out.append(struct.pack("<BB", _BYTES_TAG, 1))
            out.append(struct.pack("<I", len(payload)))
            out.append(bytes(payload))
        else:
            arr = np.asarray(payload)
            tag = _TAGS.get(arr.dtype)
            if tag is None:
                raise CheckpointError(f"unsupported dtype {arr.dtype} for record {name!r}")
            out.append(struct.pack("<BB", tag, arr.ndim))
            out.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
            out.append(arr.astype(arr.dtype.newbyteorder("<")).tobytes())
    body = b"".join(out)
    return body + struct.pack("<I", zlib.crc32(body))


def deserialize_records(blob):
    """Inverse of serialize_records; returns ({name: payload}, crc)."""
    if len(blob) < 12 or blob[:4] != MAGIC:
        raise CheckpointError("not a CLSP container")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != VERSION:
        raise CheckpointError(f"unsupported container version {version}")
    stored_crc = struct.unpack_from("<I", blob, len(blob) - 4)[0]
    if zlib.crc32(blob[:-4]) != stored_crc:
        raise CheckpointError("CRC mismatch (truncated or corrupt file)")

    records, off, end = {}, 8, len(blob) - 4
    try:
        while off < end:
            (nlen,) = struct.unpack_from("<I", blob, off)
            off += 4
            name = blob[off : off + nlen].decode("utf-8")
            off += nlen
            tag, rank = struct.unpack_from("<BB", blob, off)
            off += 2
            dims = struct.unpack_from(f"<{rank}I", blob, off)
            off += 4 * rank
            if tag == _BYTES_TAG:
                size = dims[0]
                records[name] = blob[off : off + size]
                off += size
            else:
                dtype = _DTYPES[tag]
                size = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize
                records[name] = np.frombuffer(blob[off : off + size], dtype=dtype).reshape(dims).copy()
                off += size
        if off != end:
            raise CheckpointError("trailing bytes in container")
    except (struct.error, KeyError, ValueError) as e:
        raise CheckpointError(f"malformed container: {e}") from e
    return records, stored_crc


def write_container(path, records):
    blob = serialize_records(records)
    with open(path, "wb") as fh:
        fh.write(blob)
    return struct.unpack("<I", blob[-4:])[0]


def read_container(path):
    with open(path, "rb") as fh:
        return deserialize_records(fh.read())


def container_crc(records):
    blob = serialize_records(records)
    return struct.unpack("<I", blob[-4:])[0]
