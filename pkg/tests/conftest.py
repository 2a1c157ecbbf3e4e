"""
Shared fixtures for the test suite
"""

import sys
from pathlib import Path

import pytest

# Add the repository root to the path, as main.py does
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.frames.transforms import DqVector, Impedance
from src.plant.converter import NonStationaryState, StationaryState
from src.sfilter.certificate import default_certificates
from src.sfilter.safety_filter import FilterParams
from src.verifier.region import OperationalRegion


@pytest.fixture
def z_c():
    """Transformer impedance from the simulation table"""
    return Impedance(r=0.02, l=0.16)


@pytest.fixture(scope="session")
def certificates():
    return default_certificates()


@pytest.fixture
def filter_params():
    return FilterParams()


@pytest.fixture
def region():
    return OperationalRegion()


@pytest.fixture
def operating_point():
    """Rated current at its reference, no voltage deviation"""
    x = NonStationaryState(i=DqVector(0.9, 0.0), dv_pcc_f=DqVector(0.0, 0.0))
    z = StationaryState(i_r=DqVector(0.9, 0.0), i_0=0.0)
    return x, z
