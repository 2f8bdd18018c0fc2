import gc
import itertools
import threading

import pytest

from cofrep.algebra import DimensionMismatch, SizeGuardExceeded, Vector
from cofrep.complex import (
    ChainComplex,
    all_elements,
    compose_maps,
    direct_sum,
    disk,
    identity_map,
    random_complex,
    validate_complex,
    zero_complex,
)
from cofrep import qcomonad
from cofrep.options import DEFAULTS
from cofrep.qcomonad import (
    CounitMismatch,
    InitialMorphism,
    NotACycle,
    Q,
    QComplex,
    canonical_liftings,
    delta,
    epsilon,
    functor,
    gen,
    gen0,
    generators,
    materialize,
    q_diff,
    q_map,
    sample_generators,
)
from cofrep.utils import make_rng
from cofrep.wfs import LiftingSquare, compose_liftings, solve_lifting, validate_aaf

from conftest import CORPUS, Z2, Z3, aaf_cases, point


def brute_force_ranks(x: ChainComplex):
    """Counts the generators of QX in dimensions 0 and 1 from their definition."""
    field = x.field
    bottoms = all_elements(x, 0)
    ranks = [len(bottoms)]
    count = 0
    for coeffs in itertools.product(range(field.p), repeat=len(bottoms)):
        image = x.zero(0)
        for coeff, bottom in zip(coeffs, bottoms):
            image = image + coeff * bottom
        count += sum(image == x.diff(top, 1) for top in all_elements(x, 1))
    ranks.append(count)
    return tuple(ranks)


@pytest.mark.parametrize(
    "x, expected",
    [
        (point(Z2, 1), (2, 2)),
        (zero_complex(Z2, 1), (1, 2)),
        (zero_complex(Z3, 1), (1, 3)),
    ],
)
def test_rank_oracles(x: ChainComplex, expected) -> None:
    """Tests the ranks of QX against hand-derived and brute-force counts."""
    assert brute_force_ranks(x) == expected
    assert materialize(Q(x), 1).ranks == expected


def test_materialization_is_a_complex(complex: ChainComplex) -> None:
    """Tests d . d = 0 and that epsilon is a chain map on the materialised QX."""
    q = Q(complex)
    upto = min(2, complex.trunc)
    materialization = q.materialize(upto, 1024)
    validate_complex(materialization.complex)
    for dim in range(1, upto + 1):
        left = materialization.epsilon[dim - 1] @ materialization.complex.diff_matrix(dim)
        right = complex.diff_matrix(dim) @ materialization.epsilon[dim]
        assert left == right


def test_materialize_guard(z2_point) -> None:
    with pytest.raises(SizeGuardExceeded) as error:
        materialize(Q(z2_point), 1, limit=1)
    assert error.value.dim == 0
    assert error.value.required == 2

    with pytest.raises(DimensionMismatch):
        materialize(Q(z2_point), 2)


def test_gen0_interning(z2_point) -> None:
    q = Q(z2_point)
    zero, one = Vector(Z2, (0,)), Vector(Z2, (1,))
    assert gen0(q, zero) is not gen0(q, one)
    assert gen0(q, one) is gen0(q, Vector(Z2, (1,)))
    with pytest.raises(DimensionMismatch):
        gen0(q, Vector(Z2, (0, 1)))


def test_gen(z2_point) -> None:
    """Tests the witnesses accepted by [x, z]."""
    q = Q(z2_point)
    x = Vector(Z2, ())
    trivial = gen(q, x, q.zero(0))
    assert q_diff(q, trivial.element).is_zero()

    witness = q.element(gen0(q, Vector(Z2, (0,))))
    assert gen(q, x, witness).z == witness
    assert gen(q, x, witness) is gen(q, x, q.element(gen0(q, Vector(Z2, (0,)))))

    with pytest.raises(CounitMismatch):
        gen(q, x, q.element(gen0(q, Vector(Z2, (1,)))))


def test_gen_needs_cycle() -> None:
    x = disk(Z2, 1, 2)
    q = Q(x)
    one = Vector(Z2, (1,))
    lower = q.element(gen(q, one, q.element(gen0(q, one))))
    with pytest.raises(NotACycle):
        gen(q, Vector(Z2, ()), lower)


def test_epsilon_and_differential(z2_disk) -> None:
    q = Q(z2_disk)
    one = Vector(Z2, (1,))
    bottom = q.element(gen0(q, one))
    top = gen(q, one, bottom)
    assert epsilon(q, bottom) == one
    assert epsilon(q, top.element) == one
    assert epsilon(q, q.zero(1)) == Vector(Z2, (0,))
    assert epsilon(q, top.element + q.element(gen(q, Vector(Z2, (0,)), q.zero(0)))) == one
    assert q_diff(q, top.element) == bottom
    assert q_diff(q, q.zero(1)).is_zero()


def test_delta(z2_disk) -> None:
    """Tests both clauses of the comultiplication."""
    q = Q(z2_disk)
    one = Vector(Z2, (1,))
    bottom = q.element(gen0(q, one))
    top = q.element(gen(q, one, bottom))
    doubled = q.double
    assert doubled is Q(q)
    assert delta(q, bottom) == doubled.element(doubled.gen0(bottom))
    expected = doubled.gen(top, delta(q, bottom))
    assert delta(q, top) == doubled.element(expected)
    assert doubled.epsilon(delta(q, top)) == top


def test_q_map_functoriality() -> None:
    x = random_complex(Z2, (2, 1, 1), seed=7)
    total, (projection, _), (inclusion, _) = direct_sum(x, disk(Z2, 1, 2))
    composite = compose_maps(projection, inclusion)
    for generator in Q(x).materialize(2, 1024).generators[2][:20]:
        element = generator.element
        assert q_map(identity_map(x), element) == element
        twice = q_map(projection, q_map(inclusion, element))
        assert q_map(composite, element) == twice
        assert Q(x).epsilon(q_map(composite, element)) == Q(x).epsilon(element)
    assert functor(projection).source is Q(total)


def test_canonical_liftings(z2_point) -> None:
    q = Q(z2_point)
    aaf = canonical_liftings(q)
    one = Vector(Z2, (1,))
    assert solve_lifting(aaf, LiftingSquare(0, aaf.f, None, one)).vec == q.element(gen0(q, one))
    witness = q.element(gen0(q, Vector(Z2, (0,))))
    filler = solve_lifting(aaf, LiftingSquare(1, aaf.f, witness, Vector(Z2, ()))).vec
    assert q.q_diff(filler) == witness
    assert validate_aaf(aaf).ok


def test_initial_morphism_of_the_counit(complex: ChainComplex) -> None:
    """Tests that the canonical liftings induce the identity of QX."""
    q = Q(complex)
    initial = InitialMorphism(canonical_liftings(q))
    for dim in range(min(2, complex.trunc) + 1):
        for generator in generators(q, dim, make_rng(0), 512)[0]:
            assert initial.apply(generator.element) == generator.element


@pytest.mark.parametrize("name", ["point-z2", "disk-z2", "random-z3"])
def test_initial_morphism_lies_over_x(name: str) -> None:
    x = CORPUS[name]
    q = Q(x)
    for aaf in aaf_cases(x):
        initial = InitialMorphism(aaf)
        for dim in range(min(2, x.trunc) + 1):
            for generator in generators(q, dim, make_rng(0), 512)[0]:
                image = initial.image(generator)
                assert aaf.f.apply(image, dim) == generator.x


def test_initial_morphism_is_the_comultiplication(z2_disk) -> None:
    q = Q(z2_disk)
    composed = compose_liftings(canonical_liftings(q.double), canonical_liftings(q))
    initial = InitialMorphism(composed, q)
    for generator in q.materialize(1).generators[1]:
        assert initial.apply(generator.element) == q.delta(generator.element)


def test_generator_keys(z2_point) -> None:
    q = Q(z2_point)
    bottom = gen0(q, Vector(Z2, (1,)))
    assert bottom.key_json == {"x": [1]}
    top = gen(q, Vector(Z2, ()), q.element(gen0(q, Vector(Z2, (0,)))))
    assert top.key_json == {"x": [], "z": [[{"x": [0]}, 1]]}
    report = q.materialize(1).to_json()
    assert report["ranks"] == [2, 2]
    assert len(report["generators"][1]) == 2


def test_sampled_generators() -> None:
    """Tests seeded sampling beyond the guard."""
    x = random_complex(Z3, (2, 2), seed=3)
    q = Q(x)
    pool, sampled = generators(q, 1, make_rng(4), limit=100)
    assert sampled
    again, _ = generators(q, 1, make_rng(4), limit=100)
    assert all(generator.dim == 1 for generator in pool)
    assert [g.key_str for g in pool] == [g.key_str for g in again]
    assert len(sample_generators(q, 0, 5, make_rng(4), limit=100)) <= 5
    for generator in pool:
        assert q.epsilon(q.q_diff(generator.element)) == x.diff(generator.x, 1)


def test_concurrent_registration() -> None:
    """Tests that concurrent creation registers each generator once."""
    q = QComplex(zero_complex(Z3, 1))
    base = q.element(q.gen0(Vector(Z3, ())))
    found = []

    def register() -> None:
        found.append([q.gen(Vector(Z3, ()), c * base) for c in range(3)])

    threads = [threading.Thread(target=register) for _ in range(8)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    assert len(q) == 4
    for generators_found in found:
        assert all(a is b for a, b in zip(generators_found, found[0]))


def test_cache_lifetimes() -> None:
    """Tests that unreferenced Q-complexes leave the cache and functors are bounded."""
    x = random_complex(Z2, (1, 2), seed=23)
    q = Q(x)
    generator = q.gen0(Vector(Z2, (1,)))
    del q
    gc.collect()
    assert Q(x) is generator.complex

    del generator
    gc.collect()
    assert x not in qcomonad._Q_CACHE
    assert Q(x).base == x
    assert functor.cache_info().maxsize == DEFAULTS.cache.functors
