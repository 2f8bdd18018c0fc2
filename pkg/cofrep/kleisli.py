"""The co-Kleisli category of Q.

A homomorphism A ~> B is a chain map QA -> B, determined by its values on
the generators of QA. Identities are the counits and g composed with f is
g . Qf . delta, evaluated per generator without building QQA.
"""

import logging
from typing import Any, Callable, Dict, Tuple

from .algebra import SizeGuardExceeded, as_index, as_int
from .complex import ChainComplex, ChainMap, ObjectMismatch, validate_map
from .laws import walk_generators
from .options import OPTIONS
from .qcomonad import InitialMorphism, QElement, QGenerator, QMap, Q
from .utils import Verdict, canonical_json
from .wfs import ChoiceOfLiftings

logger = logging.getLogger(__name__)


class FixtureError(ValueError):
    """Raised when a homomorphism fixture is incomplete or not a chain map."""


class Homomorphism:
    """A homomorphism A ~> B, a chain map QA -> B given on generators.

    Parameters
    ----------
    domain : GradedComplex
        The complex A.
    codomain : GradedComplex
        The complex B.
    on_generator : callable
        Sends a generator of QA to an element of B in the same dimension.
    name : str, optional
    """

    def __init__(
        self,
        domain: Any,
        codomain: Any,
        on_generator: Callable[[QGenerator], Any],
        name: str = "h",
    ) -> None:
        self.domain, self.codomain = domain, codomain
        self.source, self.target = Q(domain), codomain
        self.name = name
        self._on_generator = on_generator
        self._memo: Dict[int, Any] = {}

    def __repr__(self) -> str:
        return f"Homomorphism({self.name!r})"

    def image(self, generator: QGenerator) -> Any:
        image = self._memo.get(generator.id)
        if image is None:
            image = self._memo[generator.id] = self._on_generator(generator)
        return image

    def eval(self, element: QElement) -> Any:
        self.source.check_element(element, element.dim)
        result = self.codomain.zero(element.dim)
        for generator, coeff in element:
            result = result + coeff * self.image(generator)
        return result

    def apply(self, element: QElement, dim: int | None = None) -> Any:
        return self.eval(element)


class KleisliLift(QMap):
    """The lift QA -> QB of a homomorphism A ~> B, i.e. Qh . delta_A.

    [x] |-> [h([x])] and [x, z] |-> [h([x, z]), lift(z)].
    """

    def __init__(self, hom: Homomorphism) -> None:
        super().__init__(hom, source=hom.source, target=Q(hom.codomain))

    def payload(self, generator: QGenerator) -> Any:
        return self.f.image(generator)


def from_strict(f: Any) -> Homomorphism:
    """The homomorphism f . epsilon of a strict map."""
    return Homomorphism(
        f.source, f.target, lambda generator: f.apply(generator.x, generator.dim), "strict"
    )


def identity_hom(domain: Any) -> Homomorphism:
    """The counit of QA as a homomorphism A ~> A."""
    return Homomorphism(domain, domain, lambda generator: generator.x, "id")


def from_initial(aaf: ChoiceOfLiftings) -> Homomorphism:
    """The initial morphism of an AAF Y -> X as a homomorphism X ~> Y."""
    initial = InitialMorphism(aaf)
    return Homomorphism(aaf.target, aaf.source, initial.image, f"initial[{aaf.name}]")


def compose_hom(g: Homomorphism, f: Homomorphism) -> Homomorphism:
    """The composite g . Qf . delta of f: A ~> B and g: B ~> C."""
    if f.codomain != g.domain:
        raise ObjectMismatch("The first homomorphism does not end where the second starts.")
    lift = KleisliLift(f)
    return Homomorphism(
        f.domain,
        g.codomain,
        lambda generator: g.image(lift.image(generator)),
        f"({g.name} . {f.name})",
    )


def hom_equal(
    first: Homomorphism,
    second: Homomorphism,
    upto: int | None = None,
    limit: int | None = None,
    seed: int | None = None,
    strict: bool = False,
    name: str | None = None,
) -> Verdict:
    """Compares two homomorphisms on the generators up to a dimension.

    Exhaustive while the generators fit the guard, on a seeded sample
    beyond it unless ``strict``.

    Raises
    ------
    SizeGuardExceeded
        In strict mode only.
    """
    if first.domain != second.domain or first.codomain != second.codomain:
        raise ObjectMismatch("Homomorphisms with different domains or codomains.")

    upto = OPTIONS.guards.max_dim if upto is None else upto
    limit = OPTIONS.guards.max_elems if limit is None else limit
    seed = OPTIONS.sampling.seed if seed is None else seed
    upto = min(upto, first.domain.trunc)
    verdict = Verdict(f"{first.name} == {second.name}" if name is None else name)
    for _, generator in walk_generators(first.source, verdict, upto, limit, seed, strict):
        left, right = first.image(generator), second.image(generator)
        if left != right:
            return verdict.fail(
                {
                    "dim": generator.dim,
                    "generator": generator.key_json,
                    "first": first.codomain.element_to_json(left),
                    "second": second.codomain.element_to_json(right),
                }
            )
    return verdict


def check_hom(
    h: Homomorphism,
    upto: int | None = None,
    limit: int | None = None,
    seed: int | None = None,
    strict: bool = False,
) -> Verdict:
    """Checks h(d e) = d h(e) and the dimensions of the values on generators."""
    upto = OPTIONS.guards.max_dim if upto is None else upto
    limit = OPTIONS.guards.max_elems if limit is None else limit
    seed = OPTIONS.sampling.seed if seed is None else seed
    upto = min(upto, h.domain.trunc)
    verdict = Verdict(f"chain-map[{h.name}]")
    for dim, generator in walk_generators(h.source, verdict, upto, limit, seed, strict):
        image = h.image(generator)
        try:
            h.codomain.check_element(image, dim)
        except ValueError as error:
            return verdict.fail(
                {"dim": dim, "generator": generator.key_json, "error": str(error)}
            )
        if dim == 0:
            continue
        left = h.eval(h.source.q_diff(generator.element))
        right = h.codomain.diff(image, dim)
        if left != right:
            return verdict.fail(
                {
                    "dim": dim,
                    "generator": generator.key_json,
                    "expected": h.codomain.element_to_json(right),
                    "actual": h.codomain.element_to_json(left),
                }
            )
    return verdict


def hom_to_json(
    h: Homomorphism, upto: int | None = None, limit: int | None = None
) -> Dict[str, Any]:
    """Tabulates h on every generator up to a dimension.

    Raises
    ------
    SizeGuardExceeded
        If the generators do not fit the guard.
    """
    upto = OPTIONS.guards.max_dim if upto is None else upto
    upto = min(upto, h.domain.trunc)
    materialization = h.source.materialize(upto, limit)
    assignments = [
        [
            [generator.key_json, h.codomain.element_to_json(h.image(generator))]
            for generator in layer
        ]
        for layer in materialization.generators
    ]
    return {
        "domain": h.domain.to_json(),
        "codomain": h.codomain.to_json(),
        "upto": upto,
        "assignments": assignments,
    }


def _normal_key(key: Dict[str, Any], p: int) -> Dict[str, Any]:
    """A generator key with reduced entries and sorted, nonzero witness terms."""
    normal = {"x": [as_int(entry) % p for entry in key["x"]]}
    if "z" in key:
        terms: Dict[str, Tuple[Dict[str, Any], int]] = {}
        for inner, coeff in key["z"]:
            inner = _normal_key(inner, p)
            text = canonical_json(inner)
            total = terms.get(text, (inner, 0))[1] + as_int(coeff, "coefficient")
            terms[text] = (inner, total % p)
        normal["z"] = [
            [inner, coeff] for _, (inner, coeff) in sorted(terms.items()) if coeff
        ]
    return normal


def hom_from_json(
    data: Dict[str, Any],
    domain: ChainComplex | None = None,
    codomain: ChainComplex | None = None,
    limit: int | None = None,
) -> Homomorphism:
    """Reads a homomorphism fixture.

    The fixture is either {"strict": chain map} or assignment lists
    {"upto": n, "assignments": [[[generator key, vector], ...], ...]}, one
    list per dimension, covering every generator of QA up to n. Both
    variants carry (or are given) their domain and codomain.

    Raises
    ------
    FixtureError
        If a generator is missing or the values violate the chain-map law.
    """
    domain = ChainComplex.from_json(data["domain"]) if domain is None else domain
    codomain = ChainComplex.from_json(data["codomain"]) if codomain is None else codomain
    if "strict" in data:
        f = ChainMap.from_json(data["strict"], domain, codomain)
        validate_map(f)
        return from_strict(f)

    p, upto = domain.field.p, as_index(data["upto"])
    table: Dict[Tuple[int, str], Any] = {}
    for dim, layer in enumerate(data["assignments"]):
        for key, value in layer:
            key = canonical_json(_normal_key(key, p))
            table[dim, key] = codomain.element_from_json(value, dim)

    def on_generator(generator: QGenerator) -> Any:
        try:
            return table[generator.dim, generator.key_str]
        except KeyError:
            raise FixtureError(
                f"No value assigned to the generator {generator.key_str}."
            ) from None

    h = Homomorphism(domain, codomain, on_generator, data.get("name", "fixture"))
    try:
        verdict = check_hom(h, upto, limit, strict=True)
    except SizeGuardExceeded as error:
        raise FixtureError(f"The fixture's generators do not fit the guard: {error}") from error
    if not verdict:
        raise FixtureError(f"The fixture is not a chain map: {verdict.witness}")
    logger.debug("Loaded a homomorphism on %d generators.", verdict.checked)
    return h

