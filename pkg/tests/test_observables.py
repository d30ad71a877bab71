import pytest

from h3plus.hamiltonian import IntegrationSettings
from h3plus.observables import OBSERVABLE_NAMES, expectation_values

BUDGET = IntegrationSettings(max_evals=1_000_000)


@pytest.fixture(scope="module")
def obs_row1(row1, geom):
    return expectation_values(row1, geom, 1e-6, BUDGET, symmetry_evals=1_000_000)


def test_inv_r1a_row1(obs_row1):
    assert obs_row1.inv_r1A == pytest.approx(0.8548, abs=0.003)


def test_r2_row3(row3, geom):
    o = expectation_values(row3, geom, 1e-6, BUDGET)
    assert o.r2 == pytest.approx(2.0669, abs=0.01)


def test_invariants(obs_row1):
    o = obs_row1
    assert o.additivity_residual() <= 1e-10
    assert abs(o.r2 - (o.x2 + o.y2 + o.z2)) <= o.errors["r2"] + o.errors["x2"] + o.errors["y2"] + o.errors["z2"]
    for name in OBSERVABLE_NAMES:
        assert getattr(o, name) > 0 and o.errors[name] >= 0
    assert abs(o.x2 - o.y2) <= o.errors["x2"] + o.errors["y2"]
    # Cauchy-Schwarz
    assert o.inv_r12 >= 1 / o.r12_mean


def test_symmetry_equivalence(obs_row1):
    s = obs_row1.symmetry
    assert s is not None and s.evaluations > 0
    assert s.max_deviation_sigma() <= 1.0
    # labels are genuinely different integrals in the full-space run
    assert len({s.inv_r1A[0], s.inv_r1B[0], s.inv_r2C[0]}) == 3
    assert s.inv_r1A[0] == pytest.approx(obs_row1.inv_r1A, rel=2e-3)


def test_as_dict(obs_row1):
    d = obs_row1.as_dict()
    assert set(OBSERVABLE_NAMES) <= set(d)
    assert d["symmetry"]["max_deviation_sigma"] >= 0
