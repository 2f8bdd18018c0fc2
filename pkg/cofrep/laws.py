"""Law suites for the comonad Q, evaluated on generators.

Every suite walks the generators of QX dimension by dimension, using the
full materialisation while it fits the size guard and a seeded sample
beyond it, and returns a Verdict with the first failing generator.
"""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterator, List, Sequence, Tuple

from .algebra import Vector
from .complex import ChainComplex, IdentityMap, ObjectMismatch, direct_sum, disk
from .options import OPTIONS
from .qcomonad import (
    Comultiplication,
    Counit,
    InitialMorphism,
    QComplex,
    QElement,
    QGenerator,
    Q,
    canonical_liftings,
    functor,
    generators,
)
from .utils import Verdict, make_rng, progress
from .wfs import (
    ChoiceOfLiftings,
    LiftingNotPreserved,
    NotOverX,
    compose_liftings,
    perturbed_liftings,
    solver_liftings,
    verify_aaf_morphism,
)

logger = logging.getLogger(__name__)

DeltaFunction = Callable[[QElement], QElement]


@dataclass(frozen=True)
class DeltaMap:
    """A comultiplication given as a plain function, as a graded map."""

    q: QComplex
    delta: DeltaFunction

    @property
    def source(self) -> QComplex:
        return self.q

    @property
    def target(self) -> QComplex:
        return self.q.double

    def apply(self, element: QElement, dim: int | None = None) -> QElement:
        return self.delta(element)


def corrupt_delta(q: QComplex) -> DeltaFunction:
    """A faulty comultiplication adding the zero generator [0] in dimension 0.

    It still satisfies the counit law against epsilon of QX but breaks
    coassociativity.
    """
    extra = q.double.element(q.double.gen0(q.zero(0)))

    def delta(element: QElement) -> QElement:
        image = q.delta(element)
        if element.dim == 0:
            image = image + sum(coeff for _, coeff in element) * extra
        return image

    return delta


def _settings(
    upto: int | None, limit: int | None, seed: int | None, space: Any
) -> Tuple[int, int, int]:
    upto = OPTIONS.guards.max_dim if upto is None else upto
    limit = OPTIONS.guards.max_elems if limit is None else limit
    seed = OPTIONS.sampling.seed if seed is None else seed
    return min(upto, space.trunc), limit, seed


def walk_generators(
    q: QComplex,
    verdict: Verdict,
    upto: int,
    limit: int,
    seed: int,
    strict: bool = False,
) -> Iterator[Tuple[int, QGenerator]]:
    """Yields (dim, generator) pairs and records them in the verdict."""
    rng = make_rng(seed)
    for dim in range(upto + 1):
        if strict:
            pool, sampled = q.materialize(dim, limit).generators[dim], False
        else:
            pool, sampled = generators(q, dim, rng, limit)
        if sampled:
            verdict.mark_sampled(seed)
        for generator in progress(pool, f"{verdict.name} dimension {dim}"):
            yield dim, generator
        verdict.record(dim, len(pool))


def _witness(
    generator: QGenerator, space: Any, expected: Any, actual: Any, **extra: Any
) -> Dict[str, Any]:
    return {
        "dim": generator.dim,
        "generator": generator.key_json,
        "expected": space.element_to_json(expected),
        "actual": space.element_to_json(actual),
        **extra,
    }


def check_d_squared(
    x: Any,
    upto: int | None = None,
    limit: int | None = None,
    seed: int | None = None,
    strict: bool = False,
) -> Verdict:
    """d . d = 0 on QX."""
    q = Q(x)
    upto, limit, seed = _settings(upto, limit, seed, x)
    verdict = Verdict("d-squared")
    for dim, generator in walk_generators(q, verdict, upto, limit, seed, strict):
        if dim < 2:
            continue
        image = q.q_diff(q.q_diff(generator.element))
        if not image.is_zero():
            return verdict.fail(_witness(generator, q, q.zero(dim - 2), image))
    return verdict


def check_counit(
    x: Any,
    upto: int | None = None,
    limit: int | None = None,
    seed: int | None = None,
    delta: DeltaFunction | None = None,
    strict: bool = False,
) -> Verdict:
    """epsilon_QX . delta = id and Q(epsilon_X) . delta = id."""
    q = Q(x)
    delta = q.delta if delta is None else delta
    upto, limit, seed = _settings(upto, limit, seed, x)
    counit_map = functor(Counit(q))
    verdict = Verdict("counit")
    for _, generator in walk_generators(q, verdict, upto, limit, seed, strict):
        element = generator.element
        doubled = delta(element)
        left = q.double.epsilon(doubled)
        if left != element:
            return verdict.fail(_witness(generator, q, element, left, law="epsilon_Q . delta"))
        right = counit_map.apply(doubled)
        if right != element:
            return verdict.fail(_witness(generator, q, element, right, law="Q(epsilon) . delta"))
    return verdict


def check_coassociativity(
    x: Any,
    upto: int | None = None,
    limit: int | None = None,
    seed: int | None = None,
    delta: DeltaFunction | None = None,
    strict: bool = False,
) -> Verdict:
    """delta_QX . delta = Q(delta_X) . delta."""
    q = Q(x)
    delta = q.delta if delta is None else delta
    upto, limit, seed = _settings(upto, limit, seed, x)
    lifted = functor(Comultiplication(q))
    triple = q.double.double
    verdict = Verdict("coassociativity")
    for _, generator in walk_generators(q, verdict, upto, limit, seed, strict):
        doubled = delta(generator.element)
        left = q.double.delta(doubled)
        right = lifted.apply(doubled)
        if left != right:
            return verdict.fail(_witness(generator, triple, right, left))
    return verdict


def check_naturality(
    f: Any,
    upto: int | None = None,
    limit: int | None = None,
    seed: int | None = None,
    strict: bool = False,
) -> Verdict:
    """epsilon_B . Qf = f . epsilon_A and delta_B . Qf = QQf . delta_A."""
    qa, qb = Q(f.source), Q(f.target)
    lifted = functor(f)
    twice = functor(lifted)
    upto, limit, seed = _settings(upto, limit, seed, f.source)
    verdict = Verdict("naturality")
    for dim, generator in walk_generators(qa, verdict, upto, limit, seed, strict):
        element = generator.element
        image = lifted.apply(element)
        left, right = qb.epsilon(image), f.apply(qa.epsilon(element), dim)
        if left != right:
            return verdict.fail(_witness(generator, f.target, right, left, law="epsilon"))
        left, right = qb.delta(image), twice.apply(qa.delta(element))
        if left != right:
            return verdict.fail(_witness(generator, qb.double, right, left, law="delta"))
    return verdict


def check_chain_maps(
    x: Any,
    maps: Sequence[Any] = (),
    upto: int | None = None,
    limit: int | None = None,
    seed: int | None = None,
    delta: DeltaFunction | None = None,
    strict: bool = False,
) -> Verdict:
    """The differential of QX commutes with epsilon, delta and every Qf."""
    q = Q(x)
    delta = q.delta if delta is None else delta
    if any(f.source != x for f in maps):
        raise ObjectMismatch("All maps must start at the checked complex.")

    upto, limit, seed = _settings(upto, limit, seed, x)
    lifted = [functor(f) for f in maps]
    verdict = Verdict("chain-maps")
    for dim, generator in walk_generators(q, verdict, upto, limit, seed, strict):
        if dim == 0:
            continue
        element = generator.element
        boundary = q.q_diff(element)

        left, right = q.epsilon(boundary), x.diff(q.epsilon(element), dim)
        if left != right:
            return verdict.fail(_witness(generator, x, right, left, law="epsilon"))

        left, right = delta(boundary), q.double.q_diff(delta(element))
        if left != right:
            return verdict.fail(_witness(generator, q.double, right, left, law="delta"))

        for index, qf in enumerate(lifted):
            left, right = qf.apply(boundary), qf.target.q_diff(qf.apply(element))
            if left != right:
                return verdict.fail(
                    _witness(generator, qf.target, right, left, law=f"Qf[{index}]")
                )
    return verdict


def composed_canonical_liftings(q: QComplex) -> ChoiceOfLiftings:
    """The liftings of epsilon_X . epsilon_QX: (x, z) |-> [[x, epsilon_Q(z)], z]."""
    return compose_liftings(canonical_liftings(q.double), canonical_liftings(q))


def check_delta_characterisation(
    x: Any,
    upto: int | None = None,
    limit: int | None = None,
    seed: int | None = None,
    delta: DeltaFunction | None = None,
    strict: bool = False,
) -> Verdict:
    """delta is the initial morphism into the composed canonical liftings.

    Compares delta with the initiality recursion on generators and certifies
    it as a lifting-preserving map from the canonical liftings.
    """
    q = Q(x)
    delta = q.delta if delta is None else delta
    upto, limit, seed = _settings(upto, limit, seed, x)
    composed = composed_canonical_liftings(q)
    initial = InitialMorphism(composed, q)
    verdict = Verdict("delta-characterisation")
    for _, generator in walk_generators(q, verdict, upto, limit, seed, strict):
        left, right = delta(generator.element), initial.image(generator)
        if left != right:
            return verdict.fail(_witness(generator, q.double, right, left))

    try:
        certificate = verify_aaf_morphism(
            DeltaMap(q, delta), canonical_liftings(q), composed, limit, upto, seed
        )
    except (NotOverX, LiftingNotPreserved) as error:
        return verdict.fail({"error": type(error).__name__, **error.witness})
    verdict.record(upto, certificate.checked)
    if certificate.sampled:
        verdict.mark_sampled(seed)
    return verdict


class UnrolledInitialMorphism:
    """The initial morphism QX -> Y rebuilt with an explicit work stack.

    Generator images go into a table straight from the chosen fillers,
    lower generators first, without solving lifting squares. Used as a
    uniqueness candidate next to InitialMorphism.

    Parameters
    ----------
    aaf : ChoiceOfLiftings
    source : QComplex, optional
        A Q-complex over the fibration's base, by default Q(X).
    """

    def __init__(self, aaf: ChoiceOfLiftings, source: QComplex | None = None) -> None:
        self.aaf = aaf
        self.source = Q(aaf.target) if source is None else source
        if self.source.base != aaf.target:
            raise ObjectMismatch("The Q-complex is not built over the fibration's base.")
        self.target = aaf.source
        self._table: Dict[int, Any] = {}

    def _combine(self, element: QElement) -> Any:
        result = self.target.zero(element.dim)
        for generator, coeff in element:
            result = result + coeff * self._table[generator.id]
        return result

    def image(self, generator: QGenerator) -> Any:
        stack = [generator]
        while stack:
            top = stack[-1]
            if top.id in self._table:
                stack.pop()
                continue

            below = [] if top.dim == 0 else [inner for inner, _ in top.z]
            missing = [inner for inner in below if inner.id not in self._table]
            if missing:
                stack.extend(missing)
                continue

            stack.pop()
            if top.dim == 0:
                self._table[top.id] = self.aaf.lift(0, top.x)
            else:
                self._table[top.id] = self.aaf.lift(top.dim, top.x, self._combine(top.z))
        return self._table[generator.id]

    def apply(self, element: QElement, dim: int | None = None) -> Any:
        result = self.target.zero(element.dim)
        for generator, coeff in element:
            result = result + coeff * self.image(generator)
        return result


def check_initiality(
    aaf: ChoiceOfLiftings,
    candidates: Sequence[Any] = (),
    upto: int | None = None,
    limit: int | None = None,
    seed: int | None = None,
    strict: bool = False,
) -> Verdict:
    """The initial morphism h: QX -> Y of an AAF and its uniqueness.

    Checks f . h = epsilon on generators, certifies h with
    verify_aaf_morphism, and compares h with every candidate that passes
    the same certification. The indices of candidates that fail it are
    listed under "rejected" in the verdict's details.
    """
    q = Q(aaf.target)
    upto, limit, seed = _settings(upto, limit, seed, aaf.target)
    initial = InitialMorphism(aaf, q)
    verdict = Verdict(f"initiality[{aaf.name}]")
    pool: List[QGenerator] = []
    for dim, generator in walk_generators(q, verdict, upto, limit, seed, strict):
        pool.append(generator)
        image = initial.image(generator)
        left, right = aaf.f.apply(image, dim), q.epsilon(generator.element)
        if left != right:
            return verdict.fail(_witness(generator, aaf.target, right, left, law="f . h"))

    canonical = canonical_liftings(q)
    try:
        verify_aaf_morphism(initial, canonical, aaf, limit, upto, seed)
    except (NotOverX, LiftingNotPreserved) as error:
        return verdict.fail({"error": type(error).__name__, **error.witness})

    rejected = []
    for index, candidate in enumerate(candidates):
        try:
            verify_aaf_morphism(candidate, canonical, aaf, limit, upto, seed)
        except (NotOverX, LiftingNotPreserved) as error:
            logger.info("Candidate %d is not a morphism of AAFs: %s", index, error)
            rejected.append(index)
            continue
        for generator in pool:
            left = candidate.apply(generator.element, generator.dim)
            right = initial.image(generator)
            if left != right:
                return verdict.fail(
                    _witness(generator, aaf.source, right, left, candidate=index)
                )
    verdict.details.update(candidates=len(candidates), rejected=rejected)
    return verdict


def default_initiality_cases(
    x: Any,
) -> List[Tuple[ChoiceOfLiftings, List[Any]]]:
    """AAFs over x with candidate morphisms used by run_laws.

    The canonical liftings of epsilon, with the identity of QX as a
    candidate, and for finite complexes with a dimension 1 three AAFs
    built on the projection Y = X + 2_1 -> X: the solver liftings, the
    solver liftings made non-linear over 0 in dimension 0, and the
    composite with the projection Y + 2_1 -> Y. Each is offered its
    unrolled initial morphism.
    """
    q = Q(x)
    canonical = canonical_liftings(q)
    cases = [(canonical, [IdentityMap(q), UnrolledInitialMorphism(canonical, q)])]
    if isinstance(x, ChainComplex) and x.trunc >= 1:
        solved = solver_liftings(_projection_onto(x))
        y = solved.source
        kernel = Vector.unit(x.field, y.rank(0), y.rank(0) - 1)
        perturbed = perturbed_liftings(solved, 0, x.zero(0), kernel)
        tower = compose_liftings(solver_liftings(_projection_onto(y)), solved)
        cases += [
            (solved, [UnrolledInitialMorphism(solved, q)]),
            (perturbed, [UnrolledInitialMorphism(perturbed, q)]),
            (tower, [UnrolledInitialMorphism(tower, q)]),
        ]
    return cases


def _projection_onto(x: ChainComplex) -> Any:
    _, (projection, _), _ = direct_sum(x, disk(x.field, 1, x.trunc))
    return projection


def run_laws(
    x: Any,
    maps: Sequence[Any] = (),
    upto: int | None = None,
    limit: int | None = None,
    seed: int | None = None,
    delta: DeltaFunction | None = None,
    strict: bool = False,
    cases: Sequence[Tuple[ChoiceOfLiftings, Sequence[Any]]] | None = None,
) -> Dict[str, Any]:
    """Runs every suite and collects the report of ``cofrep q-laws``."""
    seed = OPTIONS.sampling.seed if seed is None else seed
    options = dict(upto=upto, limit=limit, seed=seed, strict=strict)
    verdicts = [
        check_d_squared(x, **options),
        check_counit(x, delta=delta, **options),
        check_coassociativity(x, delta=delta, **options),
        check_chain_maps(x, [f for f in maps if f.source == x], delta=delta, **options),
    ]
    verdicts += [check_naturality(f, **options) for f in maps]
    verdicts.append(check_delta_characterisation(x, delta=delta, **options))

    cases = default_initiality_cases(x) if cases is None else cases
    verdicts += [check_initiality(aaf, candidates, **options) for aaf, candidates in cases]
    for verdict in verdicts:
        status = "ok" if verdict else "FAILED"
        logger.info("%s: %s (%d cases)", verdict.name, status, verdict.checked)

    return {
        "ok": all(verdicts),
        "seed": seed,
        "suites": [verdict.to_json() for verdict in verdicts],
    }
