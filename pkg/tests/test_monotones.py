import math

import numpy as np
import pytest

from epr_losr.assemblages import Scenario, family_GHZ, family_S, mix, random_quantum_assemblage
from epr_losr.cli import fig3_family
from epr_losr.freeness import is_free_bipartite, is_losr_free_multi
from epr_losr.functionals import (
    epr_functional_bipartite,
    epr_functional_multi,
    lhs_bound,
    quantum_max_bipartite,
)
from epr_losr.monotones import epr_robustness, epr_weight, yield_monotone, yield_monotone_multi

from conftest import THETAS

SQ2 = math.sqrt(2)


def node(key):
    label, p = key.split(";")
    return family_S(THETAS[label], float(p))


def test_weight_against_oracle(frozen):
    for key, expected in frozen["weight"].items():
        assert abs(epr_weight(node(key)).value - expected) < 1e-5, key


def test_weight_pure_maximally_steerable():
    assert abs(epr_weight(family_S(math.pi / 4, 1)).value - 1) < 1e-6


def test_weight_and_robustness_vanish_on_free():
    for a in (family_S(0.3, 0), family_S(math.pi / 12, 0.8), family_S(math.pi / 4, 0.5)):
        assert is_free_bipartite(a).free
        assert abs(epr_weight(a).value) < 1e-7
        assert abs(epr_robustness(a).value) < 1e-7


def test_robustness_against_oracle(frozen):
    for key, expected in frozen["robustness"].items():
        assert abs(epr_robustness(node(key)).value - expected) < 1e-5, key


def test_robustness_replay():
    for a in (family_S(math.pi / 4, 1), family_S(math.pi / 6, 0.9)):
        res = epr_robustness(a)
        assert res.value > 1e-3
        free = res.extra["free_mixture"]
        assert is_free_bipartite(free).free
        # the mixing partner (1+nu) free - a must itself be a valid (PSD) assemblage
        partner = ((1 + res.value) * free.elements - a.elements) / res.value
        for blk in partner.reshape(-1, 2, 2):
            assert np.linalg.eigvalsh(blk).min() > -1e-6


def test_ranges():
    rng = np.random.default_rng(17)
    sc = Scenario.bipartite(2, 2, 2)
    for _ in range(5):
        a = random_quantum_assemblage(sc, rng)
        w, r = epr_weight(a).value, epr_robustness(a).value
        assert 0 <= w <= 1 and r >= 0


def test_yield_against_oracle(frozen):
    for key, expected in frozen["yield_pi4"].items():
        assert abs(yield_monotone(node(key), math.pi / 4).value - expected) < 1e-5, key


def test_yield_attains_quantum_max():
    for eta in np.linspace(math.pi / 24, math.pi / 4, 5):
        assert abs(yield_monotone(family_S(eta, 1), eta).value - quantum_max_bipartite(eta)) < 1e-6


def test_yield_routes_agree():
    for th, eta in ((math.pi / 4, math.pi / 6), (math.pi / 12, math.pi / 4), (0.3, 0.5)):
        a = family_S(th, 0.9)
        joint = yield_monotone(a, eta, method="joint").value
        per = yield_monotone(a, eta, method="per_comb").value
        assert abs(joint - per) < 1e-6


def test_yield_free_below_lhs_bound():
    for eta in (math.pi / 12, math.pi / 4):
        bound = lhs_bound(epr_functional_bipartite(eta))
        assert yield_monotone(family_S(math.pi / 12, 0.8), eta).value <= bound + 1e-6
        assert yield_monotone(family_S(0.4, 0.0), eta).value <= bound + 1e-6


def test_yield_bad_method():
    with pytest.raises(ValueError):
        yield_monotone(family_S(0.3, 1), 0.3, method="guess")


def test_unordered_family_crossing():
    grid = np.linspace(math.pi / 16, math.pi / 4, 5)
    m = {(e, t): yield_monotone(family_S(t, 1), e).value for e in grid for t in grid}
    for t1 in grid:
        for t2 in grid:
            if t1 != t2:
                assert m[t1, t1] > m[t1, t2]
                assert m[t2, t1] < m[t2, t2]


def test_two_party_multi_route_agrees():
    rng = np.random.default_rng(23)
    for _ in range(5):
        th, eta = rng.uniform(0.1, math.pi / 4, size=2)
        a = family_GHZ(2, th)
        joint = yield_monotone(a, eta).value
        multi = yield_monotone_multi(a, eta, functional=epr_functional_bipartite(eta)).value
        assert abs(joint - multi) < 1e-6
        f2 = epr_functional_multi(2, eta)
        assert abs(yield_monotone(a, eta, functional=f2).value - yield_monotone_multi(a, eta, functional=f2).value) < 1e-6


def test_multipartite_yield_maximum():
    for eta in (math.pi / 8, math.pi / 4):
        assert abs(yield_monotone_multi(family_GHZ(3, eta), eta).value - 4 * SQ2) < 1e-5


def test_multipartite_yield_strict():
    assert yield_monotone_multi(family_GHZ(3, math.pi / 6), math.pi / 4).value < 4 * SQ2 - 1e-6
    assert yield_monotone_multi(family_GHZ(3, math.pi / 4), math.pi / 6).value < 4 * SQ2 - 1e-6


def test_multipartite_weight_positive_on_ghz():
    g = family_GHZ(3, math.pi / 4)
    assert epr_weight(g).value > 0.1
    assert not is_losr_free_multi(g).free
    white = family_GHZ(3, math.pi / 4).elements.sum(axis=0, keepdims=True) / 4
    noise = type(g)(g.scenario, np.broadcast_to(white, g.elements.shape).copy())
    assert abs(epr_weight(mix(noise, g, 1.0)).value) < 1e-7


def test_monotone_along_fig3_edges(fig3_graph):
    fam = dict(fig3_family())
    vals = {n: (epr_weight(a).value, epr_robustness(a).value, yield_monotone(a, math.pi / 4).value)
            for n, a in fam.items()}
    assert fig3_graph.edges
    for s, d, _ in fig3_graph.edges:
        for before, after in zip(vals[s], vals[d]):
            assert before >= after - 1e-5, (s, d)
