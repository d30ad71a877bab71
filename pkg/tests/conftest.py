import json

import pytest

from h3plus.ansatz import AnsatzParameters
from h3plus.cli import bundled
from h3plus.geometry import build_triangle


def _load(name):
    return AnsatzParameters.from_dict(
        {k: v for k, v in json.loads(bundled(name).read_text()).items()})


@pytest.fixture(scope="session")
def row1():
    return _load("table2_row1.json")


@pytest.fixture(scope="session")
def row2():
    return _load("table2_row2.json")


@pytest.fixture(scope="session")
def row3():
    return _load("table2_row3.json")


@pytest.fixture(scope="session")
def geom():
    return build_triangle(1.65)


# Shared reference runs; each takes tens of seconds on one core.
REFERENCE_EVALS = {"row1": 6_400_000, "row2": 8_000_000, "row3": 8_000_000}


@pytest.fixture(scope="session")
def reference_energy(row1, row2, row3, geom):
    from h3plus.hamiltonian import IntegrationSettings, variational_energy

    cache = {}
    params = {"row1": row1, "row2": row2, "row3": row3}

    def get(name):
        if name not in cache:
            s = IntegrationSettings(max_evals=REFERENCE_EVALS[name], threads=1)
            cache[name] = variational_energy(params[name], geom, 1e-5, s)
        return cache[name]

    return get
