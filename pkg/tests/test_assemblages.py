import json
import math

import numpy as np
import pytest

from epr_losr import qcore
from epr_losr.assemblages import (
    Assemblage,
    Povm,
    Scenario,
    family_GHZ,
    family_S,
    ghz_vector,
    pauli_zx_povms,
    random_quantum_assemblage,
    realize_bipartite,
    realize_multipartite,
    validate,
)

from conftest import rand_density

PLUS = np.array([1, 1]) / math.sqrt(2)


def test_realize_bipartite_examples():
    rho = qcore.projector(ghz_vector(2, math.pi / 4))
    a = realize_bipartite(rho, pauli_zx_povms(), 2)
    assert np.abs(a.element(0, 0) - qcore.projector([1, 0]) / 2).max() < 1e-15
    assert np.abs(a.element(0, 1) - qcore.projector(PLUS) / 2).max() < 1e-15
    mixed = realize_bipartite(np.eye(4) / 4, pauli_zx_povms(), 2)
    assert np.abs(mixed.elements - np.eye(2) / 4).max() < 1e-15


def test_realize_bipartite_reduction():
    rng = np.random.default_rng(0)
    rho = rand_density(rng, 6)
    povms = [Povm.from_basis(np.eye(3)), Povm.from_basis(np.linalg.qr(rng.normal(size=(3, 3)))[0].T)]
    a = realize_bipartite(rho, povms, 2)
    bob = qcore.partial_trace(rho, [3, 2], keep=[1])
    for x in range(2):
        assert np.abs(a.bob_marginal(x) - bob).max() < 1e-10
    assert validate(a, 1e-10).ok


def test_realize_errors():
    with pytest.raises(qcore.DimensionError):
        realize_bipartite(np.eye(6) / 6, pauli_zx_povms(), 2)
    with pytest.raises(ValueError):
        realize_bipartite(np.diag([1.0, 1, 1, -1]) / 2, pauli_zx_povms(), 2)
    with pytest.raises(ValueError):
        realize_bipartite(np.eye(4) / 2, pauli_zx_povms(), 2)
    with pytest.raises(ValueError):
        Povm((np.diag([1.0, 0]), np.diag([0.0, 0.5])))


def test_realize_multipartite_examples():
    g = family_GHZ(3, math.pi / 4)
    assert np.abs(g.element((0, 0), (0, 0)) - qcore.projector([1, 0]) / 2).max() < 1e-15
    assert np.abs(g.element((1, 1), (0, 0)) - qcore.projector([0, 1]) / 2).max() < 1e-15
    assert np.abs(g.element((0, 1), (0, 0))).max() < 1e-15
    assert np.abs(g.element((1, 0), (0, 0))).max() < 1e-15
    for a in g.scenario.a_tuples():
        assert abs(np.trace(g.element(a, (1, 1))) - 0.25) < 1e-12
    sep = realize_multipartite(np.eye(8) / 8, [pauli_zx_povms()] * 2, 2)
    assert np.abs(sep.elements - np.eye(2) / 8).max() < 1e-15


def test_multipartite_k1_matches_bipartite():
    rho = qcore.projector(ghz_vector(2, 0.3))
    a = realize_bipartite(rho, pauli_zx_povms(), 2)
    b = realize_multipartite(rho, [pauli_zx_povms()], 2)
    assert np.array_equal(a.elements, b.elements)


def test_family_S_examples():
    assert np.abs(family_S(math.pi / 4, 1).element(0, 0) - qcore.projector([1, 0]) / 2).max() < 1e-15
    assert np.abs(family_S(0.4, 0).elements - np.eye(2) / 4).max() < 1e-15
    expected = 0.9 * math.cos(math.pi / 6) ** 2 * qcore.projector([1, 0]) + 0.025 * np.eye(2)
    assert np.abs(family_S(math.pi / 6, 0.9).element(0, 0) - expected).max() < 1e-15


def test_family_S_matches_realization_at_p1():
    for th in (0.1, 0.5, math.pi / 4):
        rho = qcore.projector(ghz_vector(2, th))
        assert np.array_equal(family_S(th, 1).elements, realize_bipartite(rho, pauli_zx_povms(), 2).elements)


def test_family_S_grid_validates():
    for th in np.linspace(math.pi / 80, math.pi / 4, 20):
        for p in np.linspace(0, 1, 5):
            assert validate(family_S(th, p), 1e-10).ok


def test_family_ranges():
    for bad in ((0, 0.5), (1.0, 0.5), (0.3, -0.1), (0.3, 1.2)):
        with pytest.raises(ValueError):
            family_S(*bad)
    with pytest.raises(ValueError):
        family_GHZ(1, 0.3)


def test_family_GHZ_degenerates_to_S():
    for th in np.linspace(0.05, math.pi / 4, 7):
        assert np.abs(family_GHZ(2, th).elements - family_S(th, 1).elements).max() < 1e-12


def test_validate_flags_defects():
    a = family_S(math.pi / 4, 1)
    els = a.elements.copy()
    els[0, 0] *= 1.1
    report = validate(Assemblage(a.scenario, els))
    norm = [v for v in report.violations if v.kind == "normalization"]
    assert len(norm) == 1
    assert abs(norm[0].deviation - 0.1 * np.trace(a.element(0, 0)).real) < 1e-12
    els = a.elements.copy()
    els[0, 1] = els[0, 1] + 0.05 * np.diag([1, -1])
    report = validate(Assemblage(a.scenario, els))
    assert "no-signalling" in report.kinds()
    els = a.elements.copy()
    els[0, 0] = np.diag([0.6, -0.1])
    els[1, 0] = np.diag([0.0, 0.5])
    assert "positivity" in validate(Assemblage(a.scenario, els)).kinds()


def test_validate_multipartite_marginals():
    g = family_GHZ(3, 0.4)
    els = g.elements.copy()
    sc = g.scenario
    # move weight between Alice 1's outcomes only for x1 = 1: other marginals stay fixed
    shift = 0.02 * np.eye(2)
    els[sc.a_index((0, 0)), sc.x_index((1, 0))] += shift
    els[sc.a_index((0, 1)), sc.x_index((1, 0))] -= shift
    report = validate(Assemblage(sc, els), 1e-9)
    assert "no-signalling" in report.kinds()


def test_json_roundtrip_bit_exact():
    rng = np.random.default_rng(4)
    a = random_quantum_assemblage(Scenario((2, 3), (3, 2), 2), rng)
    b = Assemblage.from_json(json.loads(json.dumps(a.to_json())))
    assert b.scenario == a.scenario
    assert np.array_equal(a.elements, b.elements)


def test_json_errors():
    obj = family_S(0.3, 1).to_json()
    obj["elements"].pop()
    with pytest.raises(ValueError):
        Assemblage.from_json(obj)
    obj = family_S(0.3, 1).to_json()
    obj["elements"][0]["a"] = [5]
    with pytest.raises(ValueError):
        Assemblage.from_json(obj)
    with pytest.raises(ValueError):
        Assemblage.from_json({"scenario": {"n_inputs": [2]}, "elements": []})


def test_indexing_mixed_radix():
    sc = Scenario((2, 3), (2, 2), 2)
    assert sc.x_tuples()[sc.x_index((1, 2))] == (1, 2)
    assert sc.x_index((1, 0)) == 3
    with pytest.raises(IndexError):
        sc.x_index((0, 3))


def test_elements_read_only():
    a = family_S(0.3, 1)
    with pytest.raises(ValueError):
        a.elements[0, 0, 0, 0] = 1
