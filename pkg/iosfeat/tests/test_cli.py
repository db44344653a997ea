import csv
import struct

import numpy as np
import pytest
from PIL import Image

from conftest import textured_fixture
from iosfeat.cli import main
from iosfeat.train import load_checkpoint


@pytest.fixture(scope="module")
def sequence_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("seq")
    frames, pts = textured_fixture(n_frames=4, h=32, w=32)
    (out / "frames").mkdir()
    for i in range(frames.shape[0]):
        arr = np.clip(np.rint(frames[i, ..., 0] * 255), 0, 255).astype(np.uint8)
        Image.fromarray(arr).save(out / "frames" / f"frame_{i:04d}.png")
    with open(out / "points.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "x", "y"])
        for frame, plist in pts.items():
            for x, y in plist:
                writer.writerow([frame, x, y])
    # 8x8-block superpixels as an SPLM file
    yy, xx = np.mgrid[0:32, 0:32]
    grid = ((yy // 8) * 4 + (xx // 8)).astype("<u4")
    blob = b"SPLM" + struct.pack("<III", 4, 32, 32) + np.stack([grid] * 4).tobytes()
    (out / "sp.splm").write_bytes(blob)
    return out


def test_train_then_extract(sequence_dir, tmp_path):
    ckpt = tmp_path / "model.pt"
    rc = main([
        "train",
        "--frames", str(sequence_dir / "frames"),
        "--points", str(sequence_dir / "points.csv"),
        "--out", str(ckpt),
        "--epochs", "1", "--iters-per-epoch", "4", "--batch-size", "4",
        "--seed", "0",
    ])
    assert rc == 0
    assert ckpt.exists() and ckpt.with_suffix(".pt.history.json").exists()
    model, payload = load_checkpoint(ckpt)
    assert payload["config"]["epochs"] == 1

    feat_path = tmp_path / "out.feat"
    rc = main([
        "extract",
        "--ckpt", str(ckpt),
        "--frames", str(sequence_dir / "frames"),
        "--superpixels", str(sequence_dir / "sp.splm"),
        "--out", str(feat_path),
    ])
    assert rc == 0
    data = feat_path.read_bytes()
    assert data[:4] == b"FEAT"
    count = int.from_bytes(data[4:8], "little")
    dim = int.from_bytes(data[8:12], "little")
    assert count == 4 * 16 and dim == 512


def test_extract_dimension_mismatch(sequence_dir, tmp_path):
    ckpt = tmp_path / "model.pt"
    main([
        "train", "--frames", str(sequence_dir / "frames"),
        "--points", str(sequence_dir / "points.csv"), "--out", str(ckpt),
        "--epochs", "1", "--iters-per-epoch", "2",
    ])
    bad = tmp_path / "bad.splm"
    blob = struct.pack("<III", 2, 32, 32)
    bad.write_bytes(b"SPLM" + blob + np.zeros((2, 32, 32), dtype="<u4").tobytes())
    rc = main([
        "extract", "--ckpt", str(ckpt),
        "--frames", str(sequence_dir / "frames"),
        "--superpixels", str(bad), "--out", str(tmp_path / "x.feat"),
    ])
    assert rc == 2


def test_missing_frames_exit_code(tmp_path):
    rc = main([
        "train", "--frames", str(tmp_path / "none"), "--points",
        str(tmp_path / "none.csv"), "--out", str(tmp_path / "m.pt"),
    ])
    assert rc == 2
