import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evs import FormatError
from evs.checkpoint import read_checkpoint, write_checkpoint


def random_tensors(seed, n):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        rank = int(rng.integers(1, 5))
        dims = tuple(int(rng.integers(1, 6)) for _ in range(rank))
        out.append((f"layer{i}.weight", rng.standard_normal(dims).astype(np.float32)))
    return out


class TestRoundTrip:
    @given(st.integers(0, 2**31 - 1), st.integers(0, 6))
    @settings(max_examples=40, deadline=None)
    def test_tensors_round_trip(self, seed, n):
        tensors = random_tensors(seed, n)
        got, labels = read_checkpoint(write_checkpoint(tensors))
        assert labels is None
        assert [n_ for n_, _ in got] == [n_ for n_, _ in tensors]
        for (_, a), (_, b) in zip(tensors, got):
            assert a.shape == b.shape
            np.testing.assert_array_equal(a, b)

    def test_labels_round_trip(self):
        labels = ["Soccer Shot", "Soccer Juggling", "Running"]
        got, got_labels = read_checkpoint(write_checkpoint(random_tensors(1, 3), labels))
        assert got_labels == labels

    def test_empty_label_table_distinct_from_none(self):
        _, labels = read_checkpoint(write_checkpoint(random_tensors(2, 1), []))
        assert labels == []

    def test_unicode_names(self):
        tensors = [("wéight", np.ones((2, 2), np.float32))]
        got, _ = read_checkpoint(write_checkpoint(tensors, ["café"]))
        assert got[0][0] == "wéight"


class TestFailClosed:
    def test_bad_magic(self):
        buf = bytearray(write_checkpoint(random_tensors(3, 2)))
        buf[0] ^= 0xFF
        with pytest.raises(FormatError) as e:
            read_checkpoint(bytes(buf))
        assert e.value.offset == 0

    def test_truncation_reports_offset(self):
        buf = write_checkpoint(random_tensors(4, 2))
        with pytest.raises(FormatError) as e:
            read_checkpoint(buf[:len(buf) - 3])
        assert e.value.offset is not None

    def test_trailing_garbage(self):
        buf = write_checkpoint(random_tensors(5, 1))
        with pytest.raises(FormatError):
            read_checkpoint(buf + b"\x00")

    def test_unsupported_version(self):
        buf = bytearray(write_checkpoint(random_tensors(6, 1)))
        buf[4] = 99
        with pytest.raises(FormatError):
            read_checkpoint(bytes(buf))

    def test_little_endian_layout(self):
        buf = write_checkpoint([("w", np.array([1.0], np.float32))])
        # magic, version=1 LE, count=1 LE, name len=1 LE
        assert buf[:4] == b"EVSM"
        assert buf[4:6] == b"\x01\x00"
        assert buf[6:10] == b"\x01\x00\x00\x00"
        assert buf[10:12] == b"\x01\x00"
