"""File formats: SPLM/FLOW/FEAT binaries, image sequences, annotation CSVs.

Binary layouts (all little-endian):
  SPLM: magic "SPLM", u32 T, W, H, then T*H*W u32 labels row-major, frame-major.
  FLOW: magic "FLOW", u32 T-1, W, H, then (T-1)*H*W pairs of f32 (dx, dy).
  FEAT: magic "FEAT", u32 record_count, u32 dim, then records
        (u32 frame, u32 superpixel_id, dim x f32).
"""

from __future__ import annotations

import csv
import io
import re
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InputError
from .features import FeatureTable
from .flow import FlowField
from .sequence import ImageSequence, PointAnnotations
from .superpixels import SuperpixelMap, ingest_superpixels


# ---------------------------------------------------------------------------
# SPLM
# ---------------------------------------------------------------------------

def write_splm(sp: SuperpixelMap) -> bytes:
    head = b"SPLM" + struct.pack("<III", sp.n_frames, sp.width, sp.height)
    body = np.stack(sp.labels).astype("<u4").tobytes()
    return head + body


def read_splm_labels(data: bytes) -> list[np.ndarray]:
    if data[:4] != b"SPLM":
        raise InputError(f"bad magic {data[:4]!r}, expected b'SPLM'")
    t, w, h = struct.unpack("<III", data[4:16])
    expected = 16 + t * h * w * 4
    if len(data) != expected:
        raise InputError(f"SPLM payload is {len(data)} bytes, expected {expected}")
    labels = np.frombuffer(data, dtype="<u4", offset=16).reshape(t, h, w)
    return [labels[i].astype(np.int64) for i in range(t)]


def load_splm(path: str | Path, seq: ImageSequence) -> SuperpixelMap:
    """Read an SPLM file and adopt it for ``seq`` (re-indexing labels)."""
    return ingest_superpixels(read_splm_labels(Path(path).read_bytes()), seq)


# ---------------------------------------------------------------------------
# FLOW
# ---------------------------------------------------------------------------

def write_flow(flow: FlowField) -> bytes:
    n, h, w, _ = flow.fields.shape
    head = b"FLOW" + struct.pack("<III", n, w, h)
    return head + flow.fields.astype("<f4").tobytes()


def read_flow(data: bytes) -> FlowField:
    if data[:4] != b"FLOW":
        raise InputError(f"bad magic {data[:4]!r}, expected b'FLOW'")
    n, w, h = struct.unpack("<III", data[4:16])
    expected = 16 + n * h * w * 8
    if len(data) != expected:
        raise InputError(f"FLOW payload is {len(data)} bytes, expected {expected}")
    fields = np.frombuffer(data, dtype="<f4", offset=16).reshape(n, h, w, 2)
    return FlowField(fields.copy())


def load_flow(path: str | Path, seq: ImageSequence) -> FlowField:
    flow = read_flow(Path(path).read_bytes())
    n, h, w, _ = flow.fields.shape
    if (n, h, w) != (seq.n_frames - 1, seq.height, seq.width):
        raise InputError(
            f"FLOW dims {w}x{h}x{n} do not match sequence "
            f"{seq.width}x{seq.height}x{seq.n_frames - 1}"
        )
    return flow


# ---------------------------------------------------------------------------
# FEAT
# ---------------------------------------------------------------------------

def write_feat(feats: FeatureTable) -> bytes:
    total = sum(m.shape[0] for m in feats.vectors)
    out = io.BytesIO()
    out.write(b"FEAT" + struct.pack("<II", total, feats.dim))
    for t, mat in enumerate(feats.vectors):
        ids = np.arange(mat.shape[0], dtype="<u4")
        frames = np.full(mat.shape[0], t, dtype="<u4")
        rec = np.zeros((mat.shape[0], 2 + feats.dim), dtype="<u4")
        rec[:, 0] = frames
        rec[:, 1] = ids
        rec[:, 2:] = mat.astype("<f4").view("<u4")
        out.write(rec.tobytes())
    return out.getvalue()


def read_feat_records(data: bytes) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Raw (frames, ids, vectors) arrays from a FEAT payload."""
    if data[:4] != b"FEAT":
        raise InputError(f"bad magic {data[:4]!r}, expected b'FEAT'")
    count, dim = struct.unpack("<II", data[4:12])
    expected = 12 + count * (2 + dim) * 4
    if len(data) != expected:
        raise InputError(f"FEAT payload is {len(data)} bytes, expected {expected}")
    raw = np.frombuffer(data, dtype="<u4", offset=12).reshape(count, 2 + dim)
    frames = raw[:, 0].astype(np.int64)
    ids = raw[:, 1].astype(np.int64)
    vectors = raw[:, 2:].view("<f4").astype(np.float64)
    return frames, ids, vectors


def load_feat(path: str | Path, sp: SuperpixelMap) -> FeatureTable:
    """Read a FEAT file, requiring exactly one record per superpixel of ``sp``."""
    frames, ids, vectors = read_feat_records(Path(path).read_bytes())
    dim = vectors.shape[1]
    mats = [np.full((n, dim), np.nan) for n in sp.counts_per_frame]
    seen = [np.zeros(n, dtype=bool) for n in sp.counts_per_frame]
    for f, i, vec in zip(frames, ids, vectors):
        if not 0 <= f < sp.n_frames or not 0 <= i < sp.counts_per_frame[f]:
            raise InputError(f"FEAT record for unknown superpixel (frame {f}, id {i})")
        if seen[f][i]:
            raise InputError(f"duplicate FEAT record for (frame {f}, id {i})")
        seen[f][i] = True
        mats[f][i] = vec
    for t, s in enumerate(seen):
        if not s.all():
            missing = int(np.flatnonzero(~s)[0])
            raise InputError(f"FEAT file misses superpixel {missing} of frame {t}")
    return FeatureTable(tuple(mats))


# ---------------------------------------------------------------------------
# Image sequences
# ---------------------------------------------------------------------------

_FRAME_EXTENSIONS = {".png", ".pgm", ".ppm"}


def _to_unit(arr: np.ndarray) -> np.ndarray:
    if arr.dtype == np.uint8:
        return arr.astype(np.float32) / 255.0
    if arr.dtype == np.uint16:
        return arr.astype(np.float32) / 65535.0
    if arr.dtype == bool:
        return arr.astype(np.float32)
    return arr.astype(np.float32)


def _frame_index(path: Path) -> int | None:
    matches = re.findall(r"\d+", path.stem)
    return int(matches[-1]) if matches else None


def load_sequence(pattern: str | Path) -> ImageSequence:
    """Load frames from a glob/directory of numbered images or a multi-page TIFF.

    Frames are ordered by the last number in each filename; gaps in the index
    sequence are errors naming the first missing frame.
    """
    path = Path(pattern)
    if path.is_file() and path.suffix.lower() in (".tif", ".tiff"):
        return _load_multipage(path)
    if path.is_dir():
        files = sorted(
            p for p in path.iterdir() if p.suffix.lower() in _FRAME_EXTENSIONS
        )
    else:
        files = sorted(Path(path.parent).glob(path.name))
    files = [f for f in files if f.suffix.lower() in _FRAME_EXTENSIONS]
    if not files:
        raise InputError(f"no frames match {pattern}")
    indexed = []
    for f in files:
        idx = _frame_index(f)
        if idx is None:
            raise InputError(f"frame file {f.name} carries no numeric index")
        indexed.append((idx, f))
    indexed.sort()
    indices = [i for i, _ in indexed]
    if len(set(indices)) != len(indices):
        raise InputError("duplicate frame indices in sequence")
    for want, got in zip(range(indices[0], indices[0] + len(indices)), indices):
        if want != got:
            raise InputError(f"missing frame index {want} in sequence")
    frames = []
    shape = None
    for idx, f in indexed:
        arr = _to_unit(np.asarray(Image.open(f)))
        if arr.ndim == 3 and arr.shape[2] == 4:
            arr = arr[..., :3]
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise InputError(
                f"frame {idx} has shape {arr.shape}, expected {shape}"
            )
        frames.append(arr)
    return ImageSequence(np.stack(frames))


def _load_multipage(path: Path) -> ImageSequence:
    img = Image.open(path)
    frames = []
    try:
        i = 0
        while True:
            img.seek(i)
            frames.append(_to_unit(np.asarray(img)))
            i += 1
    except EOFError:
        pass
    if len(frames) < 2:
        raise InputError(f"multi-page container {path} holds fewer than 2 frames")
    return ImageSequence(np.stack(frames))


def save_sequence(seq: ImageSequence, out_dir: str | Path, prefix: str = "frame") -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for t in range(seq.n_frames):
        arr = np.clip(np.rint(seq.frames[t] * 255), 0, 255).astype(np.uint8)
        if arr.shape[2] == 1:
            arr = arr[..., 0]
        p = out_dir / f"{prefix}_{t:04d}.png"
        Image.fromarray(arr).save(p)
        paths.append(p)
    return paths


# ---------------------------------------------------------------------------
# Annotations
# ---------------------------------------------------------------------------

def load_annotations(
    path: str | Path,
    width: int,
    height: int,
    n_frames: int,
) -> PointAnnotations:
    """Read ``frame,x,y`` rows (header optional); duplicates per frame are kept."""
    points = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row_no, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if row_no == 1 and not _is_numeric_row(row):
                continue  # header
            if len(row) != 3:
                raise InputError(f"annotation row {row_no}: expected frame,x,y, got {row!r}")
            try:
                frame, x, y = int(row[0]), float(row[1]), float(row[2])
            except ValueError:
                raise InputError(f"annotation row {row_no}: non-numeric field in {row!r}") from None
            if not 0 <= frame < n_frames:
                raise InputError(f"annotation row {row_no}: frame {frame} outside [0, {n_frames})")
            if not (0 <= x < width and 0 <= y < height):
                raise InputError(
                    f"annotation row {row_no}: point ({x}, {y}) outside bounds {width}x{height}"
                )
            points.append((frame, x, y))
    return PointAnnotations(tuple(points), width, height, n_frames)


def _is_numeric_row(row: list[str]) -> bool:
    try:
        [float(v) for v in row]
        return True
    except ValueError:
        return False


def save_annotations(pts: PointAnnotations, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "x", "y"])
        for frame, x, y in pts.points:
            writer.writerow([frame, repr(x), repr(y)])


# ---------------------------------------------------------------------------
# Binary masks
# ---------------------------------------------------------------------------

def save_masks(masks: np.ndarray, out_dir: str | Path, prefix: str = "mask") -> list[Path]:
    """Write per-frame masks as 8-bit PNGs, 0=background, 255=object."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for t in range(masks.shape[0]):
        p = out_dir / f"{prefix}_{t:04d}.png"
        Image.fromarray((masks[t].astype(np.uint8)) * 255).save(p)
        paths.append(p)
    return paths


def load_masks(pattern: str | Path) -> np.ndarray:
    """Read a directory/glob of mask PNGs into a (T, H, W) bool array."""
    seq_like = load_sequence(pattern)
    return seq_like.frames[..., 0] > 0.5
