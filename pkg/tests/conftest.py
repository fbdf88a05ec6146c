"""Shared fixtures: small configurations and cached ensembles.

The compiled response kernel and the drawn ensembles are by far the most
expensive pieces, so anything reusable is session-scoped.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from hbeam import Configuration, draw_detected_ensemble


@pytest.fixture(scope="session")
def default_config() -> Configuration:
    return Configuration()


@pytest.fixture(scope="session")
def small_config() -> Configuration:
    """A few hundred atoms: enough for smoke physics, fast to integrate."""
    cfg = Configuration()
    return replace(cfg, run=replace(cfg.run, atoms_per_line=400))


@pytest.fixture(scope="session")
def small_ensemble(small_config: Configuration) -> np.ndarray:
    run = small_config.run
    return draw_detected_ensemble(
        run.atoms_per_line, run.temperature, run.detection_delay,
        run.rng_seed, run.velocity_exponent, run.detection_window_end,
        small_config.geometry)
