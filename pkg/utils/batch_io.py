# RSMB batch files: a 16-byte header (magic "RSMB", uint32 version, uint64 count)
# followed by count little-endian float64 samples.

import logging
import os

import numpy as np

from utils.errors import BadBatchFile

logger = logging.getLogger(__name__)

MAGIC = b"RSMB"
VERSION = 1
HEADER = np.dtype([("magic", "S4"), ("version", "<u4"), ("count", "<u8")])


def write_batch(path: str, values: np.ndarray) -> None:
    values = np.ascontiguousarray(values, dtype="<f8").reshape(-1)
    header = np.array([(MAGIC, VERSION, values.shape[0])], dtype=HEADER)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as handle:
        handle.write(header.tobytes())
        handle.write(values.tobytes())
    logger.info("wrote %d samples to %s", values.shape[0], path)


def read_batch(path: str) -> np.ndarray:
    with open(path, "rb") as handle:
        raw = handle.read()
    if len(raw) < HEADER.itemsize:
        raise BadBatchFile(f"{path}: truncated header")
    header = np.frombuffer(raw[:HEADER.itemsize], dtype=HEADER)[0]
    if header["magic"] != MAGIC:
        raise BadBatchFile(f"{path}: bad magic {header['magic']!r}")
    if int(header["version"]) != VERSION:
        raise BadBatchFile(f"{path}: unsupported version {int(header['version'])}")
    count = int(header["count"])
    body = raw[HEADER.itemsize:]
    if len(body) != 8 * count:
        raise BadBatchFile(f"{path}: header announces {count} samples, body holds {len(body) / 8:g}")
    return np.frombuffer(body, dtype="<f8").astype(np.float64)
