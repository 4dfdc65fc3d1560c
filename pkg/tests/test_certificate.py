import math

import pytest

from sbwave.certificate import Certificate, file_digest, iv_from_json, iv_to_json, write_atomic
from sbwave.errors import FileFormatError
from sbwave.interval import Interval


def sample():
    return Certificate(
        kind="existence", params={"c": 1.2}, coeff_digest="ab" * 32, success=True,
        bounds={"Y0": iv_to_json(Interval(1e-9, 2e-9)), "Z1": iv_to_json(Interval(0.1, math.inf))},
        toolchain={"numpy": "x", "wall_time_s": 3.5},
    ).seal()


def test_interval_json_roundtrip():
    for x in (Interval(0.1, 0.30000000000000004), Interval(-math.inf, 2.0), Interval([1.0, 2.0], [1.5, 3.0])):
        y = iv_from_json(iv_to_json(x))
        assert list(map(float, (y.lo if y.ndim else [y.lo]))) == list(map(float, (x.lo if x.ndim else [x.lo])))
    assert iv_to_json(Interval(1.0, math.inf)) == [1.0, "inf"]


def test_roundtrip_and_digest(tmp_path):
    c = sample()
    p = tmp_path / "c.json"
    c.save(p)
    d = Certificate.load(p)
    assert d.verify_digest() and d.digest == c.digest
    assert d.to_json() == p.read_text()


def test_wall_time_is_outside_the_digest():
    a = sample()
    b = sample()
    b.toolchain["wall_time_s"] = 99.0
    assert a.compute_digest() == b.compute_digest()


def test_tampering_is_detected():
    c = sample()
    c.success = False
    assert not c.verify_digest()
    d = sample()
    d.bounds["Y0"] = [0.0, 1e-12]
    assert not d.verify_digest()


@pytest.mark.parametrize("text", ["{", "[]", '{"format": "other"}', '{"format": "sbwave-certificate/1", "bogus": 1}'])
def test_malformed_certificates(text):
    with pytest.raises(FileFormatError):
        Certificate.from_json(text)


def test_missing_certificate(tmp_path):
    with pytest.raises(FileFormatError):
        Certificate.load(tmp_path / "absent.json")


def test_atomic_write_leaves_nothing_on_failure(tmp_path):
    p = tmp_path / "out.txt"

    class Boom:
        def __str__(self):
            raise RuntimeError("boom")

    with pytest.raises(TypeError):
        write_atomic(p, Boom())
    assert list(tmp_path.iterdir()) == []
    write_atomic(p, "hello\n")
    assert p.read_text() == "hello\n"
    assert len(file_digest(p)) == 64
