import numpy as np
import pytest

from cofrep.algebra import Matrix, Vector
from cofrep.complex import ChainMap, direct_sum, disk, identity_map, validate_map, zero_complex
from cofrep.qcomonad import Q, canonical_liftings
from cofrep.utils import make_rng
from cofrep.wfs import (
    GeneratingCofibration,
    IncompatibleSquare,
    LiftingNotPreserved,
    LiftingSquare,
    NotAcyclicFibration,
    NotOverX,
    SectionLawViolated,
    compose_liftings,
    identity_liftings,
    liftings_from_json,
    liftings_to_json,
    perturbed_liftings,
    sample_squares,
    solve_lifting,
    solver_liftings,
    squares,
    validate_aaf,
    verify_aaf_morphism,
)

from conftest import CORPUS, Z2, Z3, aaf_cases, point, projection_onto


def test_generating_cofibration() -> None:
    """Tests that the boundary inclusion is a chain map."""
    for index in range(3):
        inclusion = GeneratingCofibration(index).inclusion(Z3, 2)
        validate_map(inclusion)
        assert inclusion.target == disk(Z3, index, 2)
    with pytest.raises(ValueError):
        GeneratingCofibration(3).inclusion(Z3, 2)


def test_square_checks(z2_disk) -> None:
    f = identity_map(z2_disk)
    one = Vector(Z2, (1,))
    LiftingSquare(1, f, one, one).check()
    with pytest.raises(IncompatibleSquare):
        LiftingSquare(1, f, Vector(Z2, (0,)), one).check()
    with pytest.raises(IncompatibleSquare):
        LiftingSquare(0, f, one, one).check()
    with pytest.raises(IncompatibleSquare):
        LiftingSquare(1, f, None, one).check()


def test_identity_liftings(z2_disk) -> None:
    aaf = identity_liftings(z2_disk)
    one = Vector(Z2, (1,))
    assert solve_lifting(aaf, LiftingSquare(1, aaf.f, one, one)).vec == one
    assert validate_aaf(aaf).ok


def test_squares_of_the_point() -> None:
    """Tests the square counts against 0 -> point in dimensions 0 and 1."""
    x = point(Z2, 1)
    f = ChainMap(zero_complex(Z2, 1), x, (Matrix.zeros(Z2, 1, 0), Matrix.zeros(Z2, 0, 0)))
    assert len(squares(f, 0)) == 2
    assert len(squares(f, 1)) == 1


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_canonical_liftings_solve_every_square(name: str) -> None:
    x = CORPUS[name]
    verdict = validate_aaf(canonical_liftings(Q(x)), upto=x.trunc, limit=4096)
    assert verdict.ok
    assert verdict.dims == list(range(x.trunc + 1))


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_solver_and_perturbed_liftings(name: str) -> None:
    for aaf in aaf_cases(CORPUS[name]):
        assert validate_aaf(aaf).ok


def test_not_acyclic_fibration() -> None:
    x = point(Z2, 1)
    zero = zero_complex(Z2, 1)
    inclusion = ChainMap(zero, x, (Matrix.zeros(Z2, 1, 0), Matrix.zeros(Z2, 0, 0)))
    with pytest.raises(NotAcyclicFibration) as error:
        solver_liftings(inclusion)
    assert error.value.dim == 0

    # surjective in dimension 0, but the cycle 1 of the point bounds nothing
    collapse = ChainMap(x, zero, (Matrix.zeros(Z2, 0, 1), Matrix.zeros(Z2, 0, 0)))
    aaf = solver_liftings(collapse)
    with pytest.raises(NotAcyclicFibration) as error:
        aaf.lift(1, Vector(Z2, ()), Vector(Z2, (1,)))
    assert error.value.dim == 1


def test_section_law_violated() -> None:
    """Tests that adding an element outside ker f breaks the section law."""
    x = CORPUS["random-z3"]
    solved = solver_liftings(projection_onto(x))
    bad = perturbed_liftings(solved, 0, x.zero(0), Vector.unit(Z3, solved.source.rank(0), 0))
    with pytest.raises(SectionLawViolated) as error:
        validate_aaf(bad)
    assert error.value.dim == 0


def test_sampled_validation() -> None:
    """Tests the seeded fall-back once the squares exceed the guard."""
    x = CORPUS["random-z3"]
    aaf = solver_liftings(projection_onto(x))
    verdict = validate_aaf(aaf, limit=2, seed=5)
    assert verdict.ok and verdict.sampled and verdict.seed == 5
    cases = sample_squares(aaf.f, 1, 10, make_rng(5))
    assert cases == sample_squares(aaf.f, 1, 10, make_rng(5))
    for square in cases:
        square.check()


@pytest.mark.parametrize("name", ["point-z2", "disk-z2", "random-z3"])
def test_compose_liftings(name: str) -> None:
    """Tests that composites of AAFs are AAFs and composition is associative."""
    x = CORPUS[name]
    phi = solver_liftings(projection_onto(x))
    y = phi.source
    psi = solver_liftings(projection_onto(y))
    chi = solver_liftings(projection_onto(psi.source))
    composite = compose_liftings(psi, phi)
    assert validate_aaf(composite).ok

    left = compose_liftings(compose_liftings(chi, psi), phi)
    right = compose_liftings(chi, compose_liftings(psi, phi))
    for dim in range(x.trunc + 1):
        for square in squares(left.f, dim):
            assert left.lift(dim, square.x, square.z) == right.lift(dim, square.x, square.z)


def test_verify_aaf_morphism(z2_point) -> None:
    aaf = solver_liftings(projection_onto(z2_point))
    assert verify_aaf_morphism(identity_map(aaf.source), aaf, aaf).ok

    other = perturbed_liftings(aaf, 0, z2_point.zero(0), Vector.unit(Z2, 2, 1))
    with pytest.raises(LiftingNotPreserved):
        verify_aaf_morphism(identity_map(aaf.source), aaf, other)

    total, _, _ = direct_sum(z2_point, disk(Z2, 1, 1))
    swap = ChainMap(total, total, (Matrix(Z2, np.array([[0, 1], [1, 0]])), Matrix.identity(Z2, 1)))
    with pytest.raises(NotOverX):
        verify_aaf_morphism(swap, aaf, aaf)


def test_liftings_json(z2_point) -> None:
    """Tests that tabulated liftings reproduce the solver's fillers."""
    aaf = solver_liftings(projection_onto(z2_point))
    data = liftings_to_json(aaf)
    tables = liftings_from_json(data, aaf.source, aaf.target)
    for dim in range(2):
        for square in squares(aaf.f, dim):
            assert tables.lift(dim, square.x, square.z) == aaf.lift(dim, square.x, square.z)

    solved = liftings_from_json({**data, "liftings": "solve"}, aaf.source, aaf.target)
    assert solved.name == "solver"


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_compose_liftings_units(name: str) -> None:
    """Tests that composing with identity liftings on either side changes no filler."""
    for phi in aaf_cases(CORPUS[name]):
        after = compose_liftings(phi, identity_liftings(phi.target))
        before = compose_liftings(identity_liftings(phi.source), phi)
        for dim in range(phi.target.trunc + 1):
            for square in squares(phi.f, dim, limit=4096):
                expected = phi.lift(dim, square.x, square.z)
                assert after.lift(dim, square.x, square.z) == expected
                assert before.lift(dim, square.x, square.z) == expected


def test_composite_of_counit_liftings(z2_disk) -> None:
    """Tests k(x, z) = [[x, epsilon(z)], z] for the counits QQX -> QX -> X."""
    q = Q(z2_disk)
    qq = q.double
    composite = compose_liftings(canonical_liftings(qq), canonical_liftings(q))
    assert composite.source is qq and composite.target == z2_disk

    one = Vector(Z2, (1,))
    bottom = q.element(q.gen0(one))
    assert composite.lift(0, one) == qq.element(qq.gen0(bottom))

    z = qq.element(qq.gen0(bottom))
    assert qq.epsilon(z) == bottom
    inner = q.element(q.gen(one, qq.epsilon(z)))
    assert composite.lift(1, one, z) == qq.element(qq.gen(inner, z))
