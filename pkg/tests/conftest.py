import json
import os
from importlib import resources
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from radscf.estimators import HartreeFock

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA = Path(__file__).parent / "data"
GEOMETRIES = Path(str(resources.files("radscf") / "data" / "geometries"))

# every geometry shipped with the package
FIXTURES = ["h", "h2", "heh+", "h2o", "oh", "ch4", "acetic_acid", "propanedial_radical", "tempo"]


def geometry(name: str) -> Path:
    return GEOMETRIES / f"{name}.xyz"


@pytest.fixture(scope="session")
def oracle():
    return json.loads((DATA / "oracle_values.json").read_text())


_FITS = {}


def fitted(name: str, **params) -> HartreeFock:
    """Session-cached HartreeFock fit; RHF for closed shells unless overridden."""
    key = (name, tuple(sorted(params.items())))
    if key not in _FITS:
        hf = HartreeFock(**params)
        hf.fit(geometry(name))
        _FITS[key] = hf
    return _FITS[key]


@pytest.fixture(scope="session")
def fit():
    return fitted
