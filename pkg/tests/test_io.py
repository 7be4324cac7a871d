import json

import numpy as np
import pytest

from sgkron.exceptions import InvalidDims, IoError, MalformedHeader, SizeMismatch
from sgkron.io import MitsHeader, load_map, load_mits, save_map, save_mits


def test_stack_roundtrip(tmp_path, rng):
    x = (rng.standard_normal((3, 4, 5, 6)) + 1j * rng.standard_normal((3, 4, 5, 6))).astype(np.complex64)
    h = save_mits(x, tmp_path / "s")
    assert h.shape == (3, 4, 5, 6)
    y = load_mits(tmp_path / "s")
    assert y.dtype == np.complex64 and y.tobytes() == x.tobytes()
    assert np.array_equal(load_mits(tmp_path / "s.json"), x)
    meta = json.loads((tmp_path / "s.json").read_text())
    assert meta == {"T": 3, "height": 4, "width": 5, "p": 6, "dtype": "c64",
                    "layout": "t-row-col-chan"}


def test_stack_byte_layout(tmp_path):
    x = np.zeros((1, 1, 2, 1), np.complex64)
    x[0, 0, 1, 0] = 1.5 - 2j
    save_mits(x, tmp_path / "s")
    raw = np.frombuffer((tmp_path / "s.bin").read_bytes(), "<f4")
    assert raw.tolist() == [0.0, 0.0, 1.5, -2.0]


def test_payload_size_rule():
    assert MitsHeader(68, 200, 200, 12).payload_bytes == 8 * 68 * 200 * 200 * 12


def test_truncated_payload(tmp_path):
    save_mits(np.ones((2, 3, 3, 2), complex), tmp_path / "s")
    data = (tmp_path / "s.bin").read_bytes()
    (tmp_path / "s.bin").write_bytes(data[:-8])
    with pytest.raises(SizeMismatch) as err:
        load_mits(tmp_path / "s")
    assert "288" in str(err.value) and "280" in str(err.value)


@pytest.mark.parametrize("patch", [{"T": 0}, {"p": "3"}, {"dtype": "c128"}, {"layout": "chw"},
                                   {"height": True}])
def test_bad_header(tmp_path, patch):
    save_mits(np.ones((1, 2, 2, 1), complex), tmp_path / "s")
    meta = json.loads((tmp_path / "s.json").read_text())
    meta.update(patch)
    (tmp_path / "s.json").write_text(json.dumps(meta))
    with pytest.raises(MalformedHeader):
        load_mits(tmp_path / "s")


def test_header_not_json(tmp_path):
    (tmp_path / "s.json").write_text("{nope")
    (tmp_path / "s.bin").write_bytes(b"")
    with pytest.raises(MalformedHeader):
        load_mits(tmp_path / "s")


def test_missing_files(tmp_path):
    with pytest.raises(IoError):
        load_mits(tmp_path / "absent")
    save_mits(np.ones((1, 1, 1, 1), complex), tmp_path / "s")
    (tmp_path / "s.bin").unlink()
    with pytest.raises(IoError):
        load_mits(tmp_path / "s")


def test_map_roundtrip(tmp_path, rng):
    m = rng.standard_normal((194, 194))
    m[3, 5] = np.nan
    m[100, 7] = np.nan
    meta = save_map(m, tmp_path / "m")
    assert meta == {"rows": 194, "cols": 194, "dtype": "f64", "nan_count": 2}
    assert (tmp_path / "m.bin").stat().st_size == 8 * 194 * 194
    back = load_map(tmp_path / "m")
    assert back.tobytes() == m.tobytes()


def test_map_rejects_bad_input(tmp_path):
    with pytest.raises(InvalidDims):
        save_map(np.zeros((0, 3)), tmp_path / "m")
    with pytest.raises(InvalidDims):
        save_map(np.zeros(4), tmp_path / "m")
    with pytest.raises(InvalidDims):
        save_map(np.array([[np.inf]]), tmp_path / "m")
    with pytest.raises(IoError):
        save_map(np.zeros((2, 2)), tmp_path / "missing_dir" / "m")


def test_stack_rejects_bad_shape(tmp_path):
    with pytest.raises(InvalidDims):
        save_mits(np.zeros((2, 2, 2)), tmp_path / "s")
