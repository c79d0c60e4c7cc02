from __future__ import annotations

import numpy as np
import pytest

from latentprobe.backend import ImageTensor
from latentprobe.errors import ConfigurationError, FormatError
from latentprobe.pnm import read_pnm, write_pnm


def test_p5_round_trip(tmp_path):
    values = np.linspace(0.0, 1.0, 12).reshape(1, 3, 4)
    path = tmp_path / "gray.pnm"
    write_pnm(path, ImageTensor(values))
    assert path.read_bytes().startswith(b"P5\n4 3\n255\n")
    back = read_pnm(path)
    assert back.shape == (1, 3, 4)
    quantized = np.rint(values * 255.0) / 255.0
    assert np.array_equal(back.values, quantized)


def test_p6_round_trip(tmp_path):
    values = np.linspace(0.0, 1.0, 24).reshape(3, 2, 4)
    path = tmp_path / "rgb.pnm"
    write_pnm(path, ImageTensor(values))
    assert path.read_bytes().startswith(b"P6\n4 2\n255\n")
    back = read_pnm(path)
    assert back.shape == (3, 2, 4)
    assert np.array_equal(back.values, np.rint(values * 255.0) / 255.0)


def test_rounding_half_to_even(tmp_path):
    # 0.5/255 rounds down to 0, 1.5/255 rounds up to 2
    values = np.array([[[0.5 / 255.0, 1.5 / 255.0]]])
    path = tmp_path / "ties.pnm"
    write_pnm(path, ImageTensor(values))
    payload = path.read_bytes()[-2:]
    assert payload == bytes([0, 2])


def test_unsupported_channel_count(tmp_path):
    with pytest.raises(ConfigurationError):
        write_pnm(tmp_path / "x.pnm", ImageTensor(np.zeros((2, 1, 1))))


def test_read_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.pnm"
    path.write_bytes(b"P3\n1 1\n255\n0")
    with pytest.raises(FormatError):
        read_pnm(path)


def test_read_rejects_truncated_payload(tmp_path):
    path = tmp_path / "short.pnm"
    path.write_bytes(b"P5\n4 4\n255\n" + b"\x00" * 3)
    with pytest.raises(FormatError):
        read_pnm(path)


def test_read_rejects_wrong_maxval(tmp_path):
    path = tmp_path / "deep.pnm"
    path.write_bytes(b"P5\n1 1\n65535\n\x00\x00")
    with pytest.raises(FormatError):
        read_pnm(path)


def test_read_skips_comments(tmp_path):
    path = tmp_path / "comment.pnm"
    path.write_bytes(b"P5\n# a comment\n2 1\n255\n\x10\x20")
    img = read_pnm(path)
    assert img.shape == (1, 1, 2)
