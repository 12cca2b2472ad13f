import numpy as np
import pytest

from kroncov import (
    DataFormatError,
    MatrixDataset,
    read_dataset,
    read_dataset_csv,
    write_dataset,
    write_dataset_csv,
)
from kroncov.dataio import MAGIC


@pytest.fixture
def ds(gen):
    return MatrixDataset(gen.standard_normal((4, 3, 5)))


def test_binary_roundtrip(tmp_path, ds):
    path = tmp_path / "d.kcov"
    write_dataset(ds, path)
    back = read_dataset(path)
    assert (back.n, back.p, back.q) == (ds.n, ds.p, ds.q)
    assert np.array_equal(back.data, ds.data)


def test_binary_layout(tmp_path, ds):
    path = tmp_path / "d.kcov"
    write_dataset(ds, path)
    raw = path.read_bytes()
    assert raw[:6] == MAGIC
    n, p, q = np.frombuffer(raw, dtype="<u8", count=3, offset=6)
    assert (n, p, q) == (4, 3, 5)
    body = np.frombuffer(raw, dtype="<f8", offset=30)
    # first pq values are the column-stacked first sample
    assert np.array_equal(body[:15], ds.vecs()[0])


def test_binary_errors(tmp_path, ds):
    bad = tmp_path / "bad.kcov"
    bad.write_bytes(b"NOTMAGIC" + b"\x00" * 40)
    with pytest.raises(DataFormatError, match="magic"):
        read_dataset(bad)
    short = tmp_path / "short.kcov"
    short.write_bytes(MAGIC + b"\x00" * 4)
    with pytest.raises(DataFormatError, match="truncated"):
        read_dataset(short)
    path = tmp_path / "d.kcov"
    write_dataset(ds, path)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(DataFormatError, match="payload"):
        read_dataset(path)


def test_csv_roundtrip(tmp_path, ds):
    path = tmp_path / "d.csv"
    write_dataset_csv(ds, path)
    header = path.read_text().splitlines()[0]
    assert header == "# n=4 p=3 q=5"
    back = read_dataset_csv(path)
    assert np.array_equal(back.data, ds.data)


def test_csv_errors(tmp_path):
    p1 = tmp_path / "h.csv"
    p1.write_text("no header\n1,2\n")
    with pytest.raises(DataFormatError, match="header"):
        read_dataset_csv(p1)
    p2 = tmp_path / "s.csv"
    p2.write_text("# n=2 p=1 q=2\n1.0,2.0\n")
    with pytest.raises(DataFormatError, match="shape"):
        read_dataset_csv(p2)
    p3 = tmp_path / "b.csv"
    p3.write_text("# n=1 p=1 q=2\n1.0,oops\n")
    with pytest.raises(DataFormatError, match="malformed"):
        read_dataset_csv(p3)
