from typing import Dict, List

import pytest

from cofrep.algebra import PrimeField, Vector
from cofrep.complex import (
    ChainComplex,
    ChainMap,
    direct_sum,
    disk,
    random_complex,
    sphere,
    zero_complex,
)
from cofrep.options import reset_options
from cofrep.wfs import ChoiceOfLiftings, compose_liftings, perturbed_liftings, solver_liftings

Z2, Z3 = PrimeField(2), PrimeField(3)


def point(field: PrimeField = Z2, trunc: int = 1) -> ChainComplex:
    """The field concentrated in degree 0."""
    return disk(field, 0, trunc)


def corpus() -> Dict[str, ChainComplex]:
    """Small complexes over Z/2 and Z/3 with ranks at most 2."""
    return {
        "zero-z2": zero_complex(Z2, 2),
        "zero-z3": zero_complex(Z3, 1),
        "point-z2": point(Z2, 1),
        "disk-z2": disk(Z2, 1, 2),
        "boundary-z3": sphere(Z3, 1, 1),
        "random-z2": random_complex(Z2, (2, 1, 1), seed=7),
        "random-z3": random_complex(Z3, (1, 1), seed=11),
    }


CORPUS = corpus()


def projection_onto(x: ChainComplex) -> ChainMap:
    """The projection X + 2_1 -> X, an acyclic fibration."""
    _, (projection, _), _ = direct_sum(x, disk(x.field, 1, x.trunc))
    return projection


def aaf_cases(x: ChainComplex) -> List[ChoiceOfLiftings]:
    """Three AAFs over x.

    Solved linearly, perturbed non-linearly in dimension 0, and composed
    with a second projection onto the source.
    """
    solved = solver_liftings(projection_onto(x))
    source = solved.source
    delta = Vector.unit(x.field, source.rank(0), source.rank(0) - 1)
    point = Vector.zeros(x.field, x.rank(0))
    tower = compose_liftings(solver_liftings(projection_onto(source)), solved)
    return [solved, perturbed_liftings(solved, 0, point, delta), tower]


@pytest.fixture(autouse=True)
def options():
    reset_options()
    yield
    reset_options()


@pytest.fixture(params=sorted(CORPUS))
def complex(request) -> ChainComplex:
    return CORPUS[request.param]


@pytest.fixture
def z2_point() -> ChainComplex:
    return point(Z2, 1)


@pytest.fixture
def z2_disk() -> ChainComplex:
    """The complex 2_1 over Z/2 truncated at 1."""
    return disk(Z2, 1, 1)
