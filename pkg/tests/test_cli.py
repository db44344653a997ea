import json
from pathlib import Path

import numpy as np
import pytest

from helpers import random_tracking_graph, best_family_cost
from pathseg.cli import main
from pathseg.config import Config, save_config
from pathseg.flowgraph import dump_graph
from pathseg.formats import load_masks
from pathseg.ksp import solve_ksp


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    rc = main([
        "synth", "--scenario", "moving-square", "--out", str(out),
        "--frames", "12", "--size", "48x48", "--seed", "5",
    ])
    assert rc == 0
    return out


def desk_config(path: Path) -> Path:
    cfg = Config(
        n_superpixels_per_frame=60, n_trees=30, radius=0.2, tau_rho=0.4,
        tau_u=0.15, tau_trans=0.6, lfda_dims=3, hoof_bins=8,
        max_outer_iters=4, rng_seed=3,
    )
    cfg_path = path / "run.cfg"
    save_config(cfg, cfg_path)
    return cfg_path


def test_synth_outputs(synth_dir):
    assert sorted(p.name for p in (synth_dir / "frames").iterdir())[0] == "frame_0000.png"
    assert (synth_dir / "points.csv").read_text().startswith("frame,x,y")
    assert len(list((synth_dir / "gt").iterdir())) == 12


def test_segment_and_eval_chain(synth_dir, tmp_path):
    cfg_path = desk_config(tmp_path)
    out = tmp_path / "run"
    rc = main([
        "segment",
        "--frames", str(synth_dir / "frames"),
        "--points", str(synth_dir / "points.csv"),
        "--config", str(cfg_path),
        "--out", str(out),
        "--overlays",
    ])
    assert rc == 0
    masks = load_masks(out / "masks")
    assert masks.shape == (12, 48, 48)
    assert masks.any()
    diag = [json.loads(l) for l in (out / "diagnostics.jsonl").read_text().splitlines()]
    assert {d["iteration"] for d in diag} and all("phi" in d for d in diag)
    rho_lines = (out / "rho_final.csv").read_text().splitlines()
    assert rho_lines[0] == "frame,superpixel,rho"
    assert (out / "superpixels.splm").exists() and (out / "flow.flow").exists()
    assert len(list((out / "overlays").iterdir())) == 12

    report_dir = tmp_path / "report"
    rc = main([
        "eval", "--pred", str(out / "masks"), "--gt", str(synth_dir / "gt"),
        "--out", str(report_dir),
    ])
    assert rc == 0
    pooled = json.loads((report_dir / "metrics.jsonl").read_text().splitlines()[0])
    assert pooled["kind"] == "pooled"
    assert pooled["f1"] > 0.5


def test_segment_accepts_precomputed_inputs(synth_dir, tmp_path):
    cfg_path = desk_config(tmp_path)
    first = tmp_path / "first"
    rc = main([
        "segment",
        "--frames", str(synth_dir / "frames"),
        "--points", str(synth_dir / "points.csv"),
        "--config", str(cfg_path),
        "--out", str(first),
        "--direction", "forward",
    ])
    assert rc == 0
    second = tmp_path / "second"
    rc = main([
        "segment",
        "--frames", str(synth_dir / "frames"),
        "--points", str(synth_dir / "points.csv"),
        "--config", str(cfg_path),
        "--superpixels", str(first / "superpixels.splm"),
        "--flow", str(first / "flow.flow"),
        "--out", str(second),
        "--direction", "forward",
    ])
    assert rc == 0
    # identical pipeline state -> byte-identical masks
    m1 = load_masks(first / "masks")
    m2 = load_masks(second / "masks")
    assert np.array_equal(m1, m2)


def test_graph_solve_matches_library(tmp_path, capsys):
    g = random_tracking_graph(np.random.default_rng(123))
    dump = tmp_path / "graph.txt"
    dump.write_text(dump_graph(g))
    rc = main(["graph-solve", "--graph", str(dump)])
    assert rc == 0
    out = capsys.readouterr().out
    total = float(out.splitlines()[0].split("total_cost")[1])
    assert total == pytest.approx(solve_ksp(g, 200).total_cost, abs=1e-9)
    oracle = best_family_cost(g)
    if oracle is not None:
        assert total == pytest.approx(oracle, abs=1e-9)


def test_input_error_exit_code(tmp_path):
    rc = main([
        "segment", "--frames", str(tmp_path / "nothing"), "--points",
        str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o"),
    ])
    assert rc == 2


def test_bad_size_exit_code(tmp_path):
    rc = main(["synth", "--scenario", "moving-square", "--out", str(tmp_path), "--size", "potato"])
    assert rc == 2
