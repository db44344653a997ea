"""Run configuration and deterministic random streams.

The config file format is plain UTF-8 text, one ``key = value`` per line,
``#`` starts a comment. Keys match the :class:`Config` field names exactly.
Unset keys keep their defaults.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError

_MASK64 = (1 << 64) - 1

# Probabilities are clamped to [PROB_EPS, 1 - PROB_EPS] before any log-odds
# cost so costs stay finite.
PROB_EPS = 1e-6


@dataclass(frozen=True)
class Config:
    """All tunable parameters of the pipeline.

    Defaults are the reference operating point; tests rely on them.
    """

    n_superpixels_per_frame: int = 520
    n_trees: int = 500
    tau_rho: float = 0.5
    tau_u: float = 0.75
    tau_trans: float = 0.9
    lfda_knn: int = 5
    lfda_dims: int = 7
    radius: float = 0.05
    sigma_g: float = 0.3
    hoof_bins: int = 16
    rng_seed: int = 0
    l_max: int = 200
    max_outer_iters: int = 10

    def __post_init__(self) -> None:
        _validate(self)

    def replace(self, **kwargs) -> "Config":
        return dataclasses.replace(self, **kwargs)


_INT_FIELDS = {
    "n_superpixels_per_frame",
    "n_trees",
    "lfda_knn",
    "lfda_dims",
    "hoof_bins",
    "rng_seed",
    "l_max",
    "max_outer_iters",
}

# (low, high, low_open, high_open); None means unbounded on that side.
_RANGES = {
    "n_superpixels_per_frame": (1, None, False, False),
    "n_trees": (1, None, False, False),
    "tau_rho": (0.0, 1.0, True, True),
    "tau_u": (0.0, 1.0, True, True),
    "tau_trans": (0.0, 1.0, True, True),
    "lfda_knn": (1, None, False, False),
    "lfda_dims": (1, None, False, False),
    "radius": (0.0, 1.0, True, False),
    "sigma_g": (0.0, 1.0, True, False),
    "hoof_bins": (2, None, False, False),
    "rng_seed": (None, None, False, False),
    "l_max": (1, None, False, False),
    "max_outer_iters": (1, None, False, False),
}


def _range_text(name: str) -> str:
    low, high, lo, ho = _RANGES[name]
    left = "(" if lo else "["
    right = ")" if ho else "]"
    return f"{left}{'-inf' if low is None else low}, {'inf' if high is None else high}{right}"


def _validate(cfg: Config) -> None:
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        low, high, lo, ho = _RANGES[f.name]
        bad = (
            (low is not None and (value <= low if lo else value < low))
            or (high is not None and (value >= high if ho else value > high))
        )
        if bad:
            raise InputError(
                f"config value {f.name}={value!r} out of range; must be in {_range_text(f.name)}"
            )


def parse_config(text: str) -> Config:
    """Parse config text; unknown keys, bad values and duplicates are errors."""
    values: dict[str, object] = {}
    names = {f.name for f in dataclasses.fields(Config)}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"config parse error at line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value_text = line.partition("=")
        key = key.strip()
        value_text = value_text.strip()
        if key not in names:
            raise InputError(f"config parse error at line {lineno}: unknown key {key!r}")
        if key in values:
            raise InputError(f"config parse error at line {lineno}: duplicate key {key!r}")
        try:
            values[key] = int(value_text) if key in _INT_FIELDS else float(value_text)
        except ValueError:
            raise InputError(
                f"config parse error at line {lineno}: bad value {value_text!r} for key {key!r}"
            ) from None
    return Config(**values)


def serialize_config(cfg: Config) -> str:
    """Canonical text form; parse(serialize(c)) == c and re-serializing is byte-identical."""
    lines = []
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        lines.append(f"{f.name} = {value!r}")
    return "\n".join(lines) + "\n"


def load_config(path: str | Path) -> Config:
    path = Path(path)
    if not path.exists():
        raise InputError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"))


def save_config(cfg: Config, path: str | Path) -> None:
    Path(path).write_text(serialize_config(cfg), encoding="utf-8")


def seeded_rng(seed: int, stream_id: int) -> np.random.Generator:
    """Deterministic, platform-independent random stream.

    Identical (seed, stream_id) pairs replay identical sequences; distinct
    stream ids give statistically independent streams.
    """
    ss = np.random.SeedSequence(entropy=seed & _MASK64, spawn_key=(stream_id & _MASK64,))
    return np.random.Generator(np.random.PCG64(ss))


class StreamFactory:
    """Allocates non-overlapping stream ids for the pipeline's random draws.

    Layout (all offsets within one direction block of 10**10 ids):
      forest bootstrap/splits: iteration * 10**6 + tree
      lfda negative sampling:  2 * 10**9 + iteration
    """

    _DIRECTION_BLOCK = 10**10
    _LFDA_BASE = 2 * 10**9

    def __init__(self, seed: int, direction_index: int = 0):
        self.seed = seed
        self.base = direction_index * self._DIRECTION_BLOCK

    def forest_tree(self, iteration: int, tree: int) -> np.random.Generator:
        return seeded_rng(self.seed, self.base + iteration * 10**6 + tree)

    def lfda(self, iteration: int) -> np.random.Generator:
        return seeded_rng(self.seed, self.base + self._LFDA_BASE + iteration)
