import numpy as np
import pytest
from scipy.special import i0, i1
from scipy.stats import kstest

from wilsonmg.errors import GaugeFileError
from wilsonmg.gauge import (
    GaugeConfiguration,
    cold_start,
    gauge_transform,
    load_config,
    mean_plaquette,
    metropolis_sweeps,
    plaquette,
    plaquette_angles,
    random_start,
    save_config,
)
from wilsonmg.lattice import LatticeDims, Site


def bessel_ratio(beta):
    return i1(beta) / i0(beta)


def test_plaquette_cold():
    cfg = cold_start(8, 1.0)
    assert plaquette(cfg, Site(3, 2)) == pytest.approx(1.0 + 0.0j)
    assert np.allclose(plaquette_angles(cfg), 0.0)


def test_plaquette_single_flipped_link():
    cfg = cold_start(8, 1.0)
    cfg.phases[2, 3, 0] = np.pi  # theta_x at (x=3, y=2)
    assert plaquette(cfg, Site(3, 2)) == pytest.approx(-1.0 + 0.0j)
    # the other plaquette bordered by that link flips too, the rest stay at 1
    flipped = np.isclose(np.cos(plaquette_angles(cfg)), -1.0)
    assert flipped.sum() == 2


def test_beta0_mean_plaquette_near_zero():
    cfg = random_start(16, 0.0, seed=3)
    # i.i.d. uniform phases: Re(plaq) averages to 0 with sigma = sqrt(1/2/256)
    assert abs(mean_plaquette(cfg)) < 3 * np.sqrt(0.5 / 256)


def test_sweeps_identity_and_validation():
    cfg = random_start(8, 1.0, seed=1)
    assert metropolis_sweeps(cfg, 0) == cfg
    with pytest.raises(ValueError):
        metropolis_sweeps(cfg, -1)
    with pytest.raises(ValueError):
        metropolis_sweeps(cfg, 1, proposal_width=0.0)


def test_sweeps_deterministic():
    cfg = cold_start(8, 4.0)
    a = metropolis_sweeps(cfg, 25, rng_seed=99)
    b = metropolis_sweeps(cfg, 25, rng_seed=99)
    assert np.array_equal(a.phases, b.phases)
    assert a.sweep_count == 25
    c = metropolis_sweeps(cfg, 25, rng_seed=100)
    assert not np.array_equal(a.phases, c.phases)


def test_equilibrated_plaquette_bands(ensemble16):
    # exact 2-d U(1) value I1(beta)/I0(beta), ensemble-averaged
    for beta, snaps in ensemble16.items():
        mean = np.mean([mean_plaquette(c) for c in snaps])
        assert abs(mean - bessel_ratio(beta)) < 0.02, (beta, mean)
    mean10 = np.mean([mean_plaquette(c) for c in ensemble16[10.0]])
    assert 0.90 <= mean10 <= 0.99


def test_beta0_accepts_every_proposal():
    from wilsonmg.gauge import acceptance_rate, tune_proposal_width

    cfg = random_start(8, 0.0, seed=21)
    assert acceptance_rate(cfg, 1.0, np.random.default_rng(22)) == 1.0
    w = tune_proposal_width(random_start(8, 6.0, seed=23), rng_seed=24)
    assert 0.0 < w <= np.pi


def test_beta0_phases_uniform():
    cfg = cold_start(16, 0.0)
    rng = np.random.default_rng(7)
    samples = []
    cfg = metropolis_sweeps(cfg, 100, 1.0, rng)
    for _ in range(30):
        cfg = metropolis_sweeps(cfg, 10, 1.0, rng)
        samples.append(cfg.phases.ravel().copy())
    samples = np.concatenate(samples)
    assert samples.size >= 10_000
    stat = kstest(samples, "uniform", args=(-np.pi, 2 * np.pi))
    assert stat.pvalue > 0.01


def test_gauge_invariance_of_plaquettes():
    cfg = random_start(12, 2.0, seed=5)
    g = np.random.default_rng(6).uniform(-np.pi, np.pi, size=(12, 12))
    transformed = gauge_transform(cfg, g)
    assert np.allclose(
        np.exp(1j * plaquette_angles(transformed)), np.exp(1j * plaquette_angles(cfg)), atol=1e-12
    )
    with pytest.raises(ValueError):
        gauge_transform(cfg, g[:4])


def test_save_load_roundtrip(tmp_path):
    cfg = random_start(8, 2.5, seed=11)
    cfg = metropolis_sweeps(cfg, 3, rng_seed=12)
    path = tmp_path / "cfg.wgf"
    save_config(cfg, path)
    back = load_config(path)
    assert back == cfg


def test_load_errors(tmp_path):
    cfg = random_start(8, 2.5, seed=11)
    path = tmp_path / "cfg.wgf"
    save_config(cfg, path)
    raw = path.read_bytes()

    truncated = tmp_path / "trunc.wgf"
    truncated.write_bytes(raw[:-16])
    with pytest.raises(GaugeFileError, match="length mismatch"):
        load_config(truncated)

    bad_magic = tmp_path / "magic.wgf"
    bad_magic.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(GaugeFileError, match="magic"):
        load_config(bad_magic)

    short = tmp_path / "short.wgf"
    short.write_bytes(raw[:10])
    with pytest.raises(GaugeFileError, match="header"):
        load_config(short)


def test_phase_array_validation():
    with pytest.raises(ValueError):
        GaugeConfiguration(LatticeDims(8), 1.0, np.zeros((4, 4, 2)))
