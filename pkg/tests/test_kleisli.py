import copy

import pytest

from cofrep.algebra import Vector
from cofrep.complex import ObjectMismatch, compose_maps, direct_sum, disk, identity_map
from cofrep.kleisli import (
    FixtureError,
    Homomorphism,
    KleisliLift,
    check_hom,
    compose_hom,
    from_initial,
    from_strict,
    hom_equal,
    hom_from_json,
    hom_to_json,
    identity_hom,
)
from cofrep.qcomonad import Q

from conftest import CORPUS, Z2, aaf_cases, projection_onto


def homs(name: str):
    """Homomorphisms X ~> Y, Y ~> X and X ~> X for a corpus complex."""
    x = CORPUS[name]
    projection = projection_onto(x)
    _, perturbed, _ = aaf_cases(x)
    up = from_initial(perturbed)
    down = from_strict(projection)
    return x, up, down


@pytest.mark.parametrize("name", ["point-z2", "disk-z2", "random-z3"])
def test_unit_laws(name: str) -> None:
    x, up, down = homs(name)
    for h in (up, down):
        assert hom_equal(compose_hom(identity_hom(h.codomain), h), h, limit=512)
        assert hom_equal(compose_hom(h, identity_hom(h.domain)), h, limit=512)


@pytest.mark.parametrize("name", ["point-z2", "disk-z2", "random-z3"])
def test_associativity(name: str) -> None:
    """Tests associativity on strict, initial and tabulated homomorphisms."""
    x, up, down = homs(name)
    fixture = hom_from_json(hom_to_json(up, upto=1), limit=512)
    for first, second, third in [(up, down, up), (fixture, down, up), (down, up, down)]:
        left = compose_hom(compose_hom(third, second), first)
        right = compose_hom(third, compose_hom(second, first))
        assert hom_equal(left, right, upto=1, limit=512)


def test_strict_functoriality() -> None:
    """Tests that composing strict maps commutes with taking homomorphisms."""
    x = CORPUS["random-z2"]
    _, (projection, _), (inclusion, _) = direct_sum(x, disk(Z2, 1, x.trunc))
    lifted = compose_hom(from_strict(projection), from_strict(inclusion))
    composite = from_strict(compose_maps(projection, inclusion))
    assert hom_equal(lifted, composite, upto=1, limit=512)
    assert hom_equal(identity_hom(x), from_strict(identity_map(x)), limit=512)


def test_kleisli_lift(z2_disk) -> None:
    """Tests that the lift of the counit is the identity of QX."""
    q = Q(z2_disk)
    lift = KleisliLift(identity_hom(z2_disk))
    for generator in q.materialize(1).generators[1]:
        assert lift.apply(generator.element) == generator.element


def test_check_hom(z2_disk) -> None:
    assert check_hom(from_strict(identity_map(z2_disk)))
    broken = Homomorphism(
        z2_disk, z2_disk, lambda g: Vector(Z2, (1,)) if g.dim == 0 else g.x, "broken"
    )
    verdict = check_hom(broken)
    assert not verdict
    assert verdict.witness["dim"] == 1


def test_unequal_homomorphisms(z2_disk) -> None:
    """Tests the witness of homomorphisms differing on a generator of dimension 1."""
    one = Vector(Z2, (1,))

    def on_generator(generator):
        if generator.dim == 1 and generator.x == one:
            return generator.x + one
        return generator.x

    other = Homomorphism(z2_disk, z2_disk, on_generator, "other")
    verdict = hom_equal(identity_hom(z2_disk), other)
    assert not verdict
    assert verdict.name == "id == other"
    assert verdict.witness["dim"] == 1
    assert verdict.witness["first"] == [1]
    assert verdict.witness["second"] == [0]


def test_mismatched_homomorphisms(z2_point, z2_disk) -> None:
    with pytest.raises(ObjectMismatch):
        hom_equal(identity_hom(z2_point), identity_hom(z2_disk))
    with pytest.raises(ObjectMismatch):
        compose_hom(identity_hom(z2_point), identity_hom(z2_disk))


def test_fixture_round_trip(z2_point) -> None:
    _, up, _ = homs("point-z2")
    data = hom_to_json(up)
    fixture = hom_from_json(data)
    assert fixture.name == "fixture"
    assert hom_equal(fixture, up)

    strict = hom_from_json(
        {
            "domain": z2_point.to_json(),
            "codomain": z2_point.to_json(),
            "strict": identity_map(z2_point).to_json(),
        }
    )
    assert strict.name == "strict"
    assert hom_equal(strict, identity_hom(z2_point))


def test_fixture_errors() -> None:
    _, up, _ = homs("point-z2")
    data = hom_to_json(up)

    missing = copy.deepcopy(data)
    missing["assignments"][1].pop()
    with pytest.raises(FixtureError):
        hom_from_json(missing)

    # fillers with a nonzero witness have a nonzero boundary
    broken = copy.deepcopy(data)
    for key, value in broken["assignments"][1]:
        if key["z"]:
            value[0] = 1 - value[0]
            break
    with pytest.raises(FixtureError):
        hom_from_json(broken)
