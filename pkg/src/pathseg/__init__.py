"""Point-supervised video/volume segmentation by multi-path tracking.

A library and CLI that turn one 2D point per frame into pixel-wise object
segmentations: superpixels and motion histograms feed a bagged foreground
model, a learned appearance metric prices a unit-capacity flow network, and
an edge-disjoint K-shortest-paths solver extracts the object's tracks,
iteratively refined in both time directions.
"""

from .config import Config, StreamFactory, load_config, parse_config, save_config, seeded_rng, serialize_config
from .errors import InputError, InternalError, PathsegError
from .features import FeatureTable, aggregate_features, builtin_feature_dim, builtin_pixel_features
from .flow import FlowField, horn_schunck_flow
from .flowgraph import (
    FlowGraph,
    GraphContext,
    Tracklet,
    build_graph,
    dump_graph,
    parse_graph_dump,
    probability_to_cost,
)
from .foreground import (
    BaggedForest,
    ObjectnessTable,
    SampleSplit,
    augment_positives,
    predict_objectness,
    split_samples,
    train_forest,
)
from .ksp import (
    PathSet,
    augment,
    bellman_ford,
    dijkstra,
    extract_path,
    reverse_along,
    solve_ksp,
    transform_costs,
    verify_path_structure,
    verify_unit_flow,
)
from .lfda import LfdaModel, alpha, beta, fit_lfda
from .metrics import MetricsReport, compute_metrics, pr_curve
from .motion import HoofTable, histogram_intersection, hoof
from .render import render_overlay
from .sequence import ImageSequence, PointAnnotations, Segmentation, segmentation_from_ids
from .superpixels import SuperpixelMap, ingest_superpixels, slic_superpixels
from .synth import SCENARIOS, corrupt_annotations, synth_sequence
from .tracker import (
    BidirectionalResult,
    DirectionResult,
    PipelineInputs,
    TrackerState,
    refresh_costs,
    run_bidirectional,
    run_direction,
    temporal_merge,
)

__version__ = "0.1.0"
