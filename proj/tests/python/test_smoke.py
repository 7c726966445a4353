import os
import subprocess
from pathlib import Path

import numpy as np
import pytest

import twvae


def test_dtw_matches_hand_example():
    cost, path = twvae.dtw(np.array([0.0, 1.0, 2.0]), np.array([0.0, 2.0]))
    # (0,0) free, (1,0) adds 1, (2,1) diagonal adds 0
    assert cost == pytest.approx(1.0)
    assert path[0] == (0, 0) and path[-1] == (2, 1)


def test_warp_round_trip():
    slopes = twvae.slopes_from_logits(np.array([0.3, -1.0, 0.8, 0.0]))
    assert slopes.mean() == pytest.approx(1.0)
    for t in np.linspace(0.0, 1.0, 11):
        assert twvae.warp(slopes, twvae.warp_inverse(slopes, t)) == pytest.approx(t, abs=1e-12)
    assert twvae.warp_regularizer(np.ones(4)) == 0.0


def test_synth_shapes_and_determinism():
    trajs, latents, slopes = twvae.synth(4, seed=3, length=50)
    again, _, _ = twvae.synth(4, seed=3, length=50)
    assert len(trajs) == 4 and trajs[0].shape == (50, 2)
    assert latents[0].shape == (2,)
    assert all(np.array_equal(a, b) for a, b in zip(trajs, again))
    rendered = twvae.render_glyph(latents[1], slopes[1], 50)
    assert np.allclose(rendered, trajs[1])


def test_csv_round_trip(tmp_path):
    x = np.arange(12, dtype=float).reshape(6, 2) / 7.0
    twvae.save_csv(tmp_path / "a.csv", x)
    assert np.array_equal(twvae.load_csv(tmp_path / "a.csv"), x)


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    cli = os.environ.get("TWVAE_CLI")
    if not cli:
        pytest.skip("TWVAE_CLI not set")
    root = tmp_path_factory.mktemp("run")
    (root / "run.cfg").write_text(
        "variant = timewarp_vae\nlength = 32\nsynth_count = 12\nepochs = 5\n"
        "spatial_channels = 4,4,4,4\ntemporal_channels = 4,4,4,4,4,4\n"
        "time_hidden = 8,8\nlatent_hidden = 8\nwarp_segments = 4\n"
    )
    subprocess.run([cli, "train", "--config", str(root / "run.cfg"), "--out", str(root / "out")], check=True,
                   capture_output=True)
    return root / "out"


def test_model_from_cli_checkpoint(trained):
    model = twvae.Model(trained / "checkpoint.bin")
    assert model.variant == "timewarp_vae" and model.epoch == 5
    x = twvae.load_csv(trained / "data" / "traj_0000.csv")
    mean, log_var = model.encode(x)
    assert mean.shape == (model.latent_dim,) and log_var.shape == mean.shape
    recon = model.reconstruct(x)
    assert recon.shape == (model.length, 2) and np.isfinite(recon).all()
    slopes = model.warp_slopes(x)
    assert slopes.mean() == pytest.approx(1.0)
    y = twvae.load_csv(trained / "data" / "traj_0001.csv")
    assert np.allclose(model.interpolate(x, y, 0.0), model.decode(mean))
