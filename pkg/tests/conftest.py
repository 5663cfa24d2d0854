import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

from epr_losr.assemblages import family_S

FROZEN = json.loads((Path(__file__).with_name("data") / "frozen.json").read_text())

THETAS = {"pi/12": math.pi / 12, "pi/6": math.pi / 6, "pi/4": math.pi / 4}
PS = (0.8, 0.9, 1.0)


@pytest.fixture(scope="session")
def frozen():
    return FROZEN


@pytest.fixture(scope="session")
def fig3_nodes():
    return {f"{label};{p:g}": family_S(th, p) for label, th in THETAS.items() for p in PS}


def rand_hermitian(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (z + z.conj().T) / 2


def rand_density(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    r = z @ z.conj().T
    return r / np.trace(r)


@pytest.fixture(scope="session")
def fig3_graph():
    from epr_losr.cli import fig3_family
    from epr_losr.conversion import preorder_graph

    return preorder_graph(fig3_family(), workers=min(4, os.cpu_count() or 1))


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
