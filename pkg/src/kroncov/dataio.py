"""Dataset container I/O.

Binary format: magic ``b"KCOV1\\0"``, then three little-endian u64 fields
(n, p, q), then n*p*q little-endian f64 values, sample-major with each
sample stored column-major (i.e. consecutive pq values are vec(X_i)).

CSV interchange: header line ``# n=<n> p=<p> q=<q>`` followed by n rows of
pq comma-separated values in vec order.
"""

import io
import re

import numpy as np

from .core import DataFormatError, MatrixDataset

MAGIC = b"KCOV1\x00"
_HEADER_RE = re.compile(r"#\s*n=(\d+)\s+p=(\d+)\s+q=(\d+)\s*$")


def write_dataset(ds, path):
    vecs = ds.vecs().astype("<f8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.array([ds.n, ds.p, ds.q], dtype="<u8").tobytes())
        fh.write(vecs.tobytes())


def read_dataset(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(MAGIC) + 24:
        raise DataFormatError(f"{path}: truncated container header")
    if raw[: len(MAGIC)] != MAGIC:
        raise DataFormatError(f"{path}: bad magic bytes (not a KCOV1 container)")
    n, p, q = (int(v) for v in np.frombuffer(raw, dtype="<u8", count=3, offset=len(MAGIC)))
    body = raw[len(MAGIC) + 24 :]
    expected = n * p * q * 8
    if len(body) != expected:
        raise DataFormatError(
            f"{path}: payload holds {len(body)} bytes, header implies {expected}"
        )
    vecs = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape(n, p * q)
    return _from_vecs(vecs, n, p, q)


def _from_vecs(vecs, n, p, q):
    # rows are vec(X_i): index l2*p + l1 -> reshape to (q, p) then transpose
    data = vecs.reshape(n, q, p).transpose(0, 2, 1)
    return MatrixDataset(data)


def write_dataset_csv(ds, path):
    vecs = ds.vecs()
    with open(path, "w") as fh:
        fh.write(f"# n={ds.n} p={ds.p} q={ds.q}\n")
        for row in vecs:
            fh.write(",".join(format(v, ".17g") for v in row))
            fh.write("\n")


def read_dataset_csv(path):
    with open(path) as fh:
        header = fh.readline()
        m = _HEADER_RE.match(header.strip())
        if not m:
            raise DataFormatError(
                f"{path}: line 1: expected header '# n=<n> p=<p> q=<q>'"
            )
        n, p, q = (int(g) for g in m.groups())
        try:
            vecs = np.loadtxt(io.StringIO(fh.read()), delimiter=",", ndmin=2)
        except ValueError as exc:
            raise DataFormatError(f"{path}: malformed CSV body: {exc}") from exc
    if vecs.shape != (n, p * q):
        raise DataFormatError(
            f"{path}: body shape {vecs.shape} does not match header (n={n}, pq={p * q})"
        )
    return _from_vecs(vecs, n, p, q)
