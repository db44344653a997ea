import numpy as np
import pytest
import torch

from conftest import block_labels, textured_fixture
from iosfeat.extract import extract_features
from iosfeat.formats import read_splm, write_feat
from iosfeat.model import FEATURE_DIM, Autoencoder


@pytest.fixture(scope="module")
def small_model():
    torch.manual_seed(3)
    return Autoencoder(1)


def test_identical_frames_identical_features(small_model):
    frames, _ = textured_fixture(n_frames=2)
    frames[1] = frames[0]
    labels = block_labels(2, 48, 48)
    feats = extract_features(small_model, frames, labels)
    assert np.array_equal(feats[0], feats[1])
    assert feats[0].shape == (36, FEATURE_DIM)


def test_extraction_deterministic(small_model):
    frames, _ = textured_fixture(n_frames=2)
    labels = block_labels(2, 48, 48)
    a = extract_features(small_model, frames, labels)
    b = extract_features(small_model, frames, labels)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_dimension_validation(small_model):
    frames, _ = textured_fixture(n_frames=2)
    labels = block_labels(1, 48, 48)
    with pytest.raises(ValueError, match="label grids"):
        extract_features(small_model, frames, labels)
    rgb = np.repeat(frames, 3, axis=3)
    with pytest.raises(ValueError, match="channels"):
        extract_features(small_model, rgb, block_labels(2, 48, 48))


def test_feat_file_roundtrip(tmp_path, small_model):
    frames, _ = textured_fixture(n_frames=2)
    labels = block_labels(2, 48, 48)
    feats = extract_features(small_model, frames, labels)
    out = tmp_path / "x.feat"
    write_feat(out, feats)
    data = out.read_bytes()
    assert data[:4] == b"FEAT"
    count = int.from_bytes(data[4:8], "little")
    dim = int.from_bytes(data[8:12], "little")
    assert count == 72 and dim == FEATURE_DIM


def test_splm_reader_reindexes(tmp_path):
    import struct

    h = w = 8
    grid = np.full((h, w), 5, dtype="<u4")
    grid[:, 4:] = 9
    blob = b"SPLM" + struct.pack("<III", 1, w, h) + grid.tobytes()
    p = tmp_path / "s.splm"
    p.write_bytes(blob)
    labels = read_splm(p)
    assert len(labels) == 1
    assert np.array_equal(np.unique(labels[0]), [0, 1])
    assert (labels[0][:, :4] == 0).all() and (labels[0][:, 4:] == 1).all()
