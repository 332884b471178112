import numpy as np
import pytest

from largemhd.spectral import DomainSpec, PhysicalField, forward_transform, leray_project, truncate


def random_field(domain, components, seed=0, solenoidal=False, band=True):
    """Random real field, optionally projected and restricted to the dealiasing band."""
    rng = np.random.default_rng(seed)
    F = forward_transform(PhysicalField(domain, rng.standard_normal((components,) + domain.physical_shape)))
    if band:
        F = truncate(F)
    if solenoidal:
        F = leray_project(F)
    return F


@pytest.fixture
def dom2():
    return DomainSpec(2, 1.0, 32)


@pytest.fixture
def dom3():
    return DomainSpec(3, 1.0, 16)
