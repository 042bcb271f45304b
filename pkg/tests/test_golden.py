import doctest
import re
import struct
from pathlib import Path

import numpy as np
import pytest

from edgeaf.bonsai import deserialize, serialize

from golden_models import tiny_model

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "tests" / "golden"
DOCS = ROOT / "docs"


def golden_table():
    """Rows of the golden-file table in docs/model-format.md."""
    text = (DOCS / "model-format.md").read_text(encoding="utf-8")
    section = text.split("## Golden file", 1)[1]
    rows = []
    for line in section.splitlines():
        m = re.match(r"\|\s*(\d+)\s*\|\s*(\d+)\s*\|([^|]*)\|([^|]*)\|", line)
        if m:
            rows.append((int(m.group(1)), int(m.group(2)), m.group(3).strip(),
                         m.group(4).strip()))
    return rows


def test_serializer_reproduces_golden_bytes():
    assert serialize(tiny_model()) == (GOLDEN / "tiny.bnsi").read_bytes()


def test_documented_offsets_tile_the_file():
    blob = (GOLDEN / "tiny.bnsi").read_bytes()
    rows = golden_table()
    assert rows, "golden table not found"
    pos = 0
    for offset, size, field, _ in rows:
        assert offset == pos, field
        pos += size
    assert pos == len(blob)


def test_documented_bytes_match():
    blob = (GOLDEN / "tiny.bnsi").read_bytes()
    checked = 0
    for offset, size, field, hexbytes in golden_table():
        if hexbytes:
            assert blob[offset:offset + size] == bytes.fromhex(hexbytes), field
            checked += 1
    assert checked >= 10


def test_documented_value_regions_decode():
    blob = (GOLDEN / "tiny.bnsi").read_bytes()
    m = tiny_model()
    regions = {field: (off, size) for off, size, field, _ in golden_table()}

    def f32(name):
        off, size = regions[name]
        return np.frombuffer(blob[off:off + size], dtype="<f4")

    np.testing.assert_array_equal(f32("mean"), m.mean)
    np.testing.assert_array_equal(f32("scale"), m.scale)
    np.testing.assert_array_equal(f32("Z values"), m.Z[m.Z != 0])
    np.testing.assert_array_equal(f32("W values"), m.W.reshape(-1))
    np.testing.assert_array_equal(f32("V values"), m.V[m.V != 0])
    np.testing.assert_array_equal(f32("theta values"), m.theta.reshape(-1))
    assert struct.unpack_from("<f", blob, 10)[0] == m.sigma


def test_golden_csv_round_trip(tmp_path):
    from edgeaf.ingest import load_csv, save_csv
    src = GOLDEN / "tiny.csv"
    out = save_csv(load_csv(src), tmp_path / "tiny.csv")
    assert out.read_bytes() == src.read_bytes()


def test_golden_model_round_trip():
    blob = (GOLDEN / "tiny.bnsi").read_bytes()
    assert serialize(deserialize(blob)) == blob


@pytest.mark.parametrize("doc", sorted(p.name for p in DOCS.glob("*.md")))
def test_doc_examples(doc, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    result = doctest.testfile(str(DOCS / doc), module_relative=False,
                              globs={"GOLDEN": GOLDEN, "ROOT": ROOT},
                              optionflags=doctest.ELLIPSIS | doctest.NORMALIZE_WHITESPACE)
    assert result.failed == 0
