"""Shared fixtures: cached gauge ensembles and derived operators.

Ensembles are deterministic functions of (n, beta, seed); they are generated
once per session and cached on disk under tests/_cache so repeated runs skip
the Metropolis chains.
"""

import hashlib
from pathlib import Path

import numpy as np
import pytest

from wilsonmg.gauge import generate_snapshots, load_config, save_config

CACHE = Path(__file__).parent / "_cache"
MASTER_SEED = 20240601


def _ensemble(n, beta, count=9, first=11_000):
    CACHE.mkdir(exist_ok=True)
    seed = int(np.random.SeedSequence([MASTER_SEED, n, int(beta * 1000)]).generate_state(1)[0])
    paths = [CACHE / f"ens_n{n}_b{beta:g}_{first + 1000 * k}.wgf" for k in range(count)]
    if all(p.exists() for p in paths):
        return [load_config(p) for p in paths]
    snaps = generate_snapshots(n, beta, seed, first_sweep=first, count=count)
    for cfg, p in zip(snaps, paths):
        save_config(cfg, p)
    return snaps


@pytest.fixture(scope="session")
def ensemble16():
    """9 equilibrated n=16 configurations per beta in {3, 6, 10}."""
    return {beta: _ensemble(16, beta) for beta in (3.0, 6.0, 10.0)}


@pytest.fixture(scope="session")
def ensemble32_b6():
    return _ensemble(32, 6.0)


@pytest.fixture(scope="session")
def ensemble64():
    """9 equilibrated n=64 configurations per beta in {3, 6, 10}."""
    return {beta: _ensemble(64, beta) for beta in (3.0, 6.0, 10.0)}


@pytest.fixture(scope="session")
def ensemble64_b6(ensemble64):
    return ensemble64[6.0]


def rng_complex(rng, n):
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)


_ACCEPTANCE_RESULTS = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _ACCEPTANCE_RESULTS.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{name}: {outcome.upper()}")
