"""Sequence-specific per-superpixel features from a prior-weighted autoencoder."""

from .extract import extract_features
from .formats import read_splm, write_feat
from .model import FEATURE_DIM, Autoencoder, model_input_size, weighted_reconstruction_loss
from .prior import gaussian_map, prior_maps
from .train import TrainConfig, load_checkpoint, save_checkpoint, train_autoencoder

__version__ = "0.1.0"
