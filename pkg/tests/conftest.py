import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pathseg.config import Config
from pathseg.features import aggregate_features, builtin_pixel_features
from pathseg.flow import horn_schunck_flow
from pathseg.motion import hoof
from pathseg.superpixels import slic_superpixels
from pathseg.synth import synth_sequence
from pathseg.tracker import PipelineInputs


def small_config(**overrides) -> Config:
    """Desk-scale config for pipeline tests: fewer trees/superpixels and a
    radius matched to the coarser superpixel spacing of tiny frames."""
    base = dict(
        n_superpixels_per_frame=110,
        n_trees=60,
        radius=0.2,
        tau_rho=0.4,
        tau_u=0.15,
        tau_trans=0.6,
        lfda_dims=3,
        hoof_bins=8,
        max_outer_iters=8,
        rng_seed=7,
    )
    base.update(overrides)
    return Config(**base)


def build_inputs(synth, cfg: Config, hs_alpha=0.2, hs_iters=300) -> PipelineInputs:
    sp = slic_superpixels(synth.seq, cfg.n_superpixels_per_frame)
    flow = horn_schunck_flow(synth.seq, hs_alpha, hs_iters)
    feats = aggregate_features(builtin_pixel_features(synth.seq, flow), sp)
    hoof_table = hoof(flow, sp, cfg.hoof_bins)
    return PipelineInputs(synth.seq, sp, flow, feats, hoof_table, synth.pts)


@pytest.fixture(scope="session")
def static_square_inputs():
    """10 static frames with a bright square; cheap shared pipeline fixture."""
    from pathseg.config import seeded_rng
    from pathseg.sequence import ImageSequence, PointAnnotations
    from pathseg.synth import SyntheticSequence

    rng = seeded_rng(3, 0)
    h = w = 48
    t = 10
    masks = np.zeros((t, h, w), dtype=bool)
    masks[:, 16:32, 16:32] = True
    frames = np.where(masks, 0.75, 0.25) + rng.normal(0, 0.02, masks.shape)
    seq = ImageSequence(np.clip(frames, 0, 1).astype(np.float32))
    pts = PointAnnotations(tuple((i, 24.0, 24.0) for i in range(t)), w, h, t)
    synth = SyntheticSequence(seq, masks, pts)
    cfg = small_config(n_superpixels_per_frame=60, n_trees=40)
    return synth, cfg, build_inputs(synth, cfg)
