import json
from importlib import resources
from pathlib import Path

import pytest

from whatif.parser import parse_model


def _data_path(name: str) -> Path:
    return Path(str(resources.files("whatif").joinpath("data", name)))


@pytest.fixture(scope="session")
def aircraft_source() -> str:
    return _data_path("aircraft.eor").read_text("utf-8")


@pytest.fixture(scope="session")
def aircraft_q5_source() -> str:
    return _data_path("aircraft_q5.eor").read_text("utf-8")


@pytest.fixture(scope="session")
def dataset_path() -> Path:
    return _data_path("aircraft.eorb")


@pytest.fixture(scope="session")
def scripts_dir() -> Path:
    return _data_path("mock_scripts")


@pytest.fixture()
def aircraft_model(aircraft_source):
    return parse_model(aircraft_source)


@pytest.fixture(scope="session")
def bundled_patches(dataset_path) -> list[dict]:
    """The hand-written patch document for each of the ten bundled queries,
    as shipped in the mock scripts."""
    scripts = _data_path("mock_scripts")
    patches = []
    for i in range(1, 11):
        script = json.loads((scripts / f"q{i}.json").read_text("utf-8"))
        patches.append(json.loads(script["writer"][0]))
    return patches


TRUTH_LABELS = [
    160000.0,
    200000.0,
    184000.0,
    220000.0,
    215000.0,
    226000.0,
    170000.0,
    210000.0,
    240000.0,
    200000.0,
]


@pytest.fixture(scope="session")
def truth_labels() -> list[float]:
    return list(TRUTH_LABELS)
