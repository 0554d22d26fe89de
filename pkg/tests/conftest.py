import numpy as np
import pytest

import kianc


@pytest.fixture(scope="session")
def paper_scenario():
    return kianc.build_paper_scenario()


@pytest.fixture(scope="session")
def k200(paper_scenario):
    return kianc.Wavenumber.from_frequency(200.0, paper_scenario.sound_speed)


def random_unit_vector(rng):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def small_scenario(rng, n_mics=12, n_sources=4, radius=1.0):
    """Random mics inside the standard region, sources on a ring outside."""
    region = kianc.paper_region()
    mics = rng.uniform(region.min_corner, region.max_corner, size=(n_mics, 3))
    angles = 2 * np.pi * np.arange(n_sources) / n_sources + 0.3
    sources = np.column_stack(
        [radius * np.cos(angles), radius * np.sin(angles), np.full(n_sources, 0.2)]
    )
    return kianc.Scenario(
        secondary_sources=sources,
        error_mics=mics,
        primary_source=(-2.8, 0.3, 0.0),
        region=region,
    )
