"""Shared fixtures: expensive exact diagonalizations and optimized schedules
are computed once per session and reused across test modules."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for `import oracles`

from z2qaoa.hamiltonian import LGTHamiltonian, ground_state
from z2qaoa.lattice import build_lattice
from z2qaoa.optimizer import ObjectiveSpec, QAOAObjective, two_step_optimize


@pytest.fixture(scope="session")
def lat3():
    return build_lattice(3)


@pytest.fixture(scope="session")
def l3_ground():
    """Exact direct-model ground pairs at L=3, cached per coupling."""
    cache: dict[float, tuple[float, object]] = {}

    def get(h: float):
        h = float(h)
        if h not in cache:
            cache[h] = ground_state(LGTHamiltonian(build_lattice(3), h))
        return cache[h]

    return get


@pytest.fixture(scope="session")
def l3_two_step():
    """Two-step optimization results at L=3 (dual engine), cached per point."""
    cache: dict[tuple, object] = {}

    def get(start: str, h: float, P: int, seed: int = 11):
        key = (start, float(h), P, seed)
        if key not in cache:
            obj = QAOAObjective(ObjectiveSpec("dual", 3, float(h), P, start))
            cache[key] = (obj, two_step_optimize(obj, seed=seed))
        return cache[key]

    return get
