import numpy as np
import pytest

from pathseg.errors import InputError
from pathseg.features import (
    aggregate_features,
    builtin_feature_dim,
    builtin_pixel_features,
)
from pathseg.flow import FlowField
from pathseg.sequence import ImageSequence
from pathseg.superpixels import SuperpixelMap


def grid_map(t, h, w, split):
    g = np.zeros((h, w), dtype=np.int32)
    g[:, split:] = 1
    return SuperpixelMap(tuple(g for _ in range(t)))


class TestAggregate:
    def test_constant_field_fixed_point(self):
        sp = grid_map(2, 4, 6, 3)
        const = np.full((4, 6, 3), [1.0, 2.0, 3.0])
        feats = aggregate_features([const, const], sp)
        for t in range(2):
            assert np.allclose(feats.vectors[t], [[1, 2, 3], [1, 2, 3]])

    def test_single_pixel_superpixel_identity(self):
        g = np.arange(4, dtype=np.int32).reshape(2, 2)
        sp = SuperpixelMap((g, g))
        field = np.arange(8, dtype=np.float64).reshape(2, 2, 2)
        feats = aggregate_features([field, field], sp)
        assert np.allclose(feats.vector(0, 3), field[1, 1])

    def test_two_pixel_hand_mean(self):
        g = np.array([[0, 0]], dtype=np.int32)
        sp = SuperpixelMap((g, g))
        field = np.array([[[0.0, 2.0], [2.0, 0.0]]])
        feats = aggregate_features([field, field], sp)
        assert np.allclose(feats.vector(0, 0), [1.0, 1.0])

    def test_superpixel_mean_fixed_point(self):
        # aggregating a per-pixel field equal to its superpixel mean is a fixed point
        rng = np.random.default_rng(0)
        sp = grid_map(1 + 1, 6, 8, 5)
        field = rng.random((6, 8, 2))
        feats = aggregate_features([field, field], sp)
        mean_field = np.zeros_like(field)
        for n in range(2):
            mean_field[sp.labels[0] == n] = feats.vector(0, n)
        feats2 = aggregate_features([mean_field, mean_field], sp)
        assert np.allclose(feats2.vectors[0], feats.vectors[0])

    def test_resolution_mismatch(self):
        sp = grid_map(2, 4, 6, 3)
        with pytest.raises(InputError, match="resolution"):
            aggregate_features([np.zeros((5, 6, 1))] * 2, sp)


class TestBuiltin:
    def make(self, frames):
        seq = ImageSequence(frames.astype(np.float32))
        flow = FlowField(np.zeros((seq.n_frames - 1, seq.height, seq.width, 2), dtype=np.float32))
        return seq, flow

    def test_flat_image_zero_gradient(self):
        seq, flow = self.make(np.full((2, 8, 10), 0.5))
        maps = builtin_pixel_features(seq, flow)
        grad = maps[0][..., 3]  # gray: channel 3 is gradient magnitude
        assert np.abs(grad).max() == 0.0

    def test_corner_positions(self):
        seq, flow = self.make(np.full((2, 8, 10), 0.5))
        maps = builtin_pixel_features(seq, flow)
        pos_x, pos_y = maps[0][..., 4], maps[0][..., 5]
        assert pos_x[0, 0] == 0.0 and pos_y[0, 0] == 0.0
        assert pos_x[-1, -1] == 1.0 and pos_y[-1, -1] == 1.0

    def test_step_edge_gradient_peaks_on_edge(self):
        frame = np.full((8, 10), 0.2)
        frame[:, 5:] = 0.8
        seq, flow = self.make(np.stack([frame, frame]))
        maps = builtin_pixel_features(seq, flow)
        grad = maps[0][..., 3]
        # finite-difference oracle computed directly on the frame
        gy, gx = np.gradient(frame)
        oracle = np.sqrt(gx**2 + gy**2)
        assert np.allclose(grad, oracle)
        assert set(np.argmax(grad, axis=1)) <= {4, 5}

    def test_dimension_bookkeeping(self):
        seq, flow = self.make(np.full((2, 8, 10), 0.5))
        maps = builtin_pixel_features(seq, flow)
        assert maps[0].shape == (8, 10, builtin_feature_dim(1))
        rgb = np.full((2, 8, 10, 3), 0.5)
        seq3 = ImageSequence(rgb.astype(np.float32))
        maps3 = builtin_pixel_features(seq3, flow)
        assert maps3[0].shape == (8, 10, builtin_feature_dim(3))

    def test_flow_magnitude_channel(self):
        frames = np.full((3, 8, 10), 0.5)
        seq = ImageSequence(frames.astype(np.float32))
        fields = np.zeros((2, 8, 10, 2), dtype=np.float32)
        fields[0, ..., 0] = 3.0
        fields[1, ..., 1] = 4.0
        flow = FlowField(fields)
        maps = builtin_pixel_features(seq, flow)
        assert np.allclose(maps[0][..., 6], 3.0)
        assert np.allclose(maps[1][..., 6], 4.0)
        assert np.allclose(maps[2][..., 6], 4.0)  # last frame reuses final field
