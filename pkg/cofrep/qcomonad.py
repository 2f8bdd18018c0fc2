"""The universal cofibrant replacement comonad on chain complexes.

QX is free in every dimension. (QX)_0 is generated by [x] for every
element x of X_0, and (QX)_(i+1) by [x, z] for every x in X_(i+1) and
every cycle z of (QX)_i with epsilon(z) = d(x); the counit and the
differential send [x, z] to x and z respectively. Generators are
created on demand and interned, so equal payloads give the identical
generator and elements of QX compare by their term lists.
"""

import itertools
import logging
import threading
import weakref
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from .algebra import (
    DimensionMismatch,
    Matrix,
    SizeGuardExceeded,
    Vector,
    enumerate_affine,
    random_vector,
)
from .complex import (
    ChainComplex,
    ObjectMismatch,
    all_elements,
    basis_or_sample,
    cycle_fibres,
    linear_combination,
)
from .options import DEFAULTS, OPTIONS
from .utils import canonical_json, progress
from .wfs import ChoiceOfLiftings, LiftingSquare, solve_lifting

logger = logging.getLogger(__name__)


class NotACycle(ValueError):
    """Raised when the witness of a generator [x, z] is not a cycle."""


class CounitMismatch(ValueError):
    """Raised when epsilon(z) differs from d(x) for a generator [x, z]."""


@dataclass(eq=False)
class QGenerator:
    """An interned free generator [x] or [x, z] of QX.

    Generators compare by identity; the registry of their complex
    guarantees that structurally equal payloads share one generator.
    """

    id: int
    dim: int
    x: Any
    z: "QElement | None"
    complex: "QComplex" = field(repr=False)

    @cached_property
    def key_json(self) -> Dict[str, Any]:
        """The nested JSON key, independent of registration order."""
        key = {"x": self.complex.base.element_to_json(self.x)}
        if self.z is not None:
            key["z"] = self.complex.element_to_json(self.z)
        return key

    @cached_property
    def key_str(self) -> str:
        return canonical_json(self.key_json)

    @property
    def element(self) -> "QElement":
        return self.complex.element(self)

    def __str__(self) -> str:
        return self.key_str


@dataclass(frozen=True)
class QElement:
    """A formal linear combination of generators of one dimension.

    The terms carry no zero coefficients and are ordered by generator id.
    """

    complex: "QComplex"
    dim: int
    terms: Tuple[Tuple[QGenerator, int], ...]

    @classmethod
    def from_mapping(
        cls, complex: "QComplex", dim: int, mapping: Dict[QGenerator, int]
    ) -> "QElement":
        p = complex.field.p
        terms = sorted(
            ((generator, coeff % p) for generator, coeff in mapping.items() if coeff % p),
            key=lambda term: term[0].id,
        )
        return cls(complex, dim, tuple(terms))

    def _check(self, other: "QElement") -> None:
        if other.complex is not self.complex or other.dim != self.dim:
            raise DimensionMismatch("Elements of different Q-complexes or dimensions.")

    def __add__(self, other: "QElement") -> "QElement":
        self._check(other)
        mapping = dict(self.terms)
        for generator, coeff in other.terms:
            mapping[generator] = mapping.get(generator, 0) + coeff
        return QElement.from_mapping(self.complex, self.dim, mapping)

    def __neg__(self) -> "QElement":
        return -1 * self

    def __sub__(self, other: "QElement") -> "QElement":
        return self + (-other)

    def __mul__(self, scalar: int) -> "QElement":
        mapping = {generator: scalar * coeff for generator, coeff in self.terms}
        return QElement.from_mapping(self.complex, self.dim, mapping)

    __rmul__ = __mul__

    def __iter__(self):
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __repr__(self) -> str:
        body = " + ".join(f"{coeff}*g{generator.id}" for generator, coeff in self.terms)
        return f"QElement(dim={self.dim}, {body or '0'})"


@dataclass
class Layer:
    """The generators of one materialised dimension."""

    generators: List[QGenerator]
    diff: Matrix | None
    index: Dict[int, int]


@dataclass
class Materialization:
    """An explicit free complex presenting QX up to a dimension.

    Parameters
    ----------
    complex : ChainComplex
        Ranks are the generator counts, differentials in generator coordinates.
    epsilon : list of Matrix
        The counit in base coordinates, one matrix per dimension.
    generators : list of list of QGenerator
        The basis of each dimension in matrix order.
    """

    complex: ChainComplex
    epsilon: List[Matrix]
    generators: List[List[QGenerator]]

    @property
    def ranks(self) -> Tuple[int, ...]:
        return self.complex.ranks

    def to_json(self) -> Dict[str, Any]:
        return {
            "ranks": list(self.complex.ranks),
            "diffs": [diff.to_json() for diff in self.complex.diffs],
            "epsilon": [matrix.to_json() for matrix in self.epsilon],
            "generators": [
                [generator.key_json for generator in layer] for layer in self.generators
            ],
        }


class QComplex:
    """The lazily generated cofibrant replacement QX of a base complex.

    Parameters
    ----------
    base : GradedComplex
        A finite chain complex or another Q-complex.
    """

    def __init__(self, base: Any) -> None:
        self.base = base
        self.field = base.field
        self._registry: Dict[Tuple, QGenerator] = {}
        self._ids = itertools.count()
        self._lock = threading.RLock()
        self._layers: List[Layer] = []
        self._delta: Dict[int, QGenerator] = {}

    def __repr__(self) -> str:
        return f"QComplex(base={self.base!r})"

    @property
    def trunc(self) -> int:
        return self.base.trunc

    @property
    def double(self) -> "QComplex":
        """The canonical Q-complex over this one."""
        return Q(self)

    def __len__(self) -> int:
        return len(self._registry)

    def _element_key(self, element: Any) -> Any:
        if isinstance(element, QElement):
            return tuple((generator.id, coeff) for generator, coeff in element.terms)
        return element.entries

    def _register(self, dim: int, x: Any, z: "QElement | None") -> QGenerator:
        key = (dim, self._element_key(x), None if z is None else self._element_key(z))
        with self._lock:
            generator = self._registry.get(key)
            if generator is None:
                generator = QGenerator(next(self._ids), dim, x, z, self)
                self._registry[key] = generator
        return generator

    def gen0(self, x: Any) -> QGenerator:
        """The interned generator [x] for x in X_0."""
        self.base.check_element(x, 0)
        return self._register(0, x, None)

    def gen(self, x: Any, z: QElement) -> QGenerator:
        """The interned generator [x, z] in dimension z.dim + 1.

        Raises
        ------
        NotACycle
            If z is not a cycle.
        CounitMismatch
            If epsilon(z) differs from d(x).
        """
        self.check_element(z, z.dim)
        dim = z.dim + 1
        if dim > self.trunc:
            raise DimensionMismatch(f"Dimension {dim} exceeds truncation {self.trunc}.")

        self.base.check_element(x, dim)
        if not self.is_cycle(z, z.dim):
            raise NotACycle(f"The witness {z!r} is not a cycle.")
        if self.epsilon(z) != self.base.diff(x, dim):
            raise CounitMismatch(f"epsilon({z!r}) differs from d(x).")
        return self._register(dim, x, z)

    def element(self, generator: QGenerator, coeff: int = 1) -> QElement:
        if generator.complex is not self:
            raise DimensionMismatch("The generator belongs to another Q-complex.")
        return QElement.from_mapping(self, generator.dim, {generator: coeff})

    def zero(self, dim: int) -> QElement:
        return QElement(self, dim, ())

    def epsilon(self, element: QElement) -> Any:
        """The counit, [x] |-> x and [x, z] |-> x extended linearly."""
        result = self.base.zero(element.dim)
        for generator, coeff in element:
            result = result + coeff * generator.x
        return result

    def q_diff(self, element: QElement) -> QElement:
        """The differential, [x, z] |-> z extended linearly."""
        if element.dim == 0:
            return self.zero(-1)

        result = self.zero(element.dim - 1)
        for generator, coeff in element:
            result = result + coeff * generator.z
        return result

    def diff(self, element: QElement, dim: int) -> QElement:
        return self.q_diff(element)

    def is_cycle(self, element: QElement, dim: int) -> bool:
        return dim == 0 or self.q_diff(element).is_zero()

    def check_element(self, element: Any, dim: int) -> None:
        if not isinstance(element, QElement) or element.complex is not self:
            raise DimensionMismatch(f"{element!r} is not an element of this Q-complex.")
        if element.dim != dim:
            raise DimensionMismatch(f"Expected dimension {dim}, got {element.dim}.")

    def delta(self, element: QElement) -> QElement:
        """The comultiplication QX -> QQX.

        [x] |-> [[x]] and [x, z] |-> [[x, z], delta(z)], memoised per generator.
        """
        target = self.double
        result = target.zero(element.dim)
        for generator, coeff in element:
            result = result + coeff * target.element(self._delta_generator(generator))
        return result

    def _delta_generator(self, generator: QGenerator) -> QGenerator:
        image = self._delta.get(generator.id)
        if image is None:
            target = self.double
            if generator.dim == 0:
                image = target.gen0(self.element(generator))
            else:
                image = target.gen(self.element(generator), self.delta(generator.z))
            self._delta[generator.id] = image
        return image

    def _next_layer(self, dim: int, limit: int) -> Layer:
        base = self.base
        bottoms = all_elements(base, dim, limit)
        if dim == 0:
            generators = [self.gen0(x) for x in bottoms]
            return Layer(generators, None, {g.id: n for n, g in enumerate(generators)})

        pool = [self.element(generator) for generator in self._layers[dim - 1].generators]
        kernel, offsets = cycle_fibres(
            self, dim - 1, pool, self.epsilon, base, [base.diff(x, dim) for x in bottoms]
        )
        required = sum(
            self.field.p ** len(kernel) for offset in offsets if offset is not None
        )
        if required > limit:
            raise SizeGuardExceeded(required, limit, dim)

        generators, columns = [], []
        for x, offset in progress(
            zip(bottoms, offsets), f"Q dimension {dim}", total=len(bottoms)
        ):
            if offset is None:
                continue
            for coefficients in enumerate_affine(kernel, offset, limit):
                z = linear_combination(self, pool, coefficients, dim - 1)
                generators.append(self.gen(x, z))
                columns.append(coefficients)

        diff = Matrix.from_columns(self.field, columns, len(pool))
        return Layer(generators, diff, {g.id: n for n, g in enumerate(generators)})

    def materialize(self, upto: int, limit: int | None = None) -> Materialization:
        """Enumerates all generators up to a dimension.

        Raises
        ------
        SizeGuardExceeded
            With the offending dimension and the required count.
        """
        limit = OPTIONS.guards.max_elems if limit is None else limit
        if not 0 <= upto <= self.trunc:
            raise DimensionMismatch(f"Cannot materialise dimension {upto} of {self.trunc}.")

        with self._lock:
            for dim in range(upto + 1):
                if dim == len(self._layers):
                    self._layers.append(self._next_layer(dim, limit))
                    logger.debug(
                        "Materialised %d generators in dimension %d.",
                        len(self._layers[dim].generators),
                        dim,
                    )
                if len(self._layers[dim].generators) > limit:
                    raise SizeGuardExceeded(len(self._layers[dim].generators), limit, dim)
            layers = self._layers[: upto + 1]

        ranks = tuple(len(layer.generators) for layer in layers)
        complex = ChainComplex(self.field, ranks, tuple(layer.diff for layer in layers[1:]))
        epsilon = []
        for dim, layer in enumerate(layers):
            rows = len(self.base.basis(dim, limit))
            columns = [self.base.coordinates(g.x, dim, limit) for g in layer.generators]
            epsilon.append(Matrix.from_columns(self.field, columns, rows))
        return Materialization(
            complex, epsilon, [list(layer.generators) for layer in layers]
        )

    def basis(self, dim: int, limit: int | None = None) -> List[QElement]:
        """The materialised generators of a dimension as elements."""
        self.materialize(dim, limit)
        return [self.element(generator) for generator in self._layers[dim].generators]

    def coordinates(self, element: QElement, dim: int, limit: int | None = None) -> Vector:
        """The coefficients of an element in the materialised basis."""
        self.materialize(dim, limit)
        layer = self._layers[dim]
        entries = [0] * len(layer.generators)
        for generator, coeff in element:
            entries[layer.index[generator.id]] = coeff
        return Vector(self.field, tuple(entries))

    def local_matrix(self, elements: Sequence[QElement], dim: int) -> Matrix:
        """Coefficients of the elements over the generators they involve."""
        generators = sorted(
            {generator for element in elements for generator, _ in element},
            key=lambda generator: generator.id,
        )
        rows = {generator.id: row for row, generator in enumerate(generators)}
        array = np.zeros((len(generators), len(elements)), dtype=np.int64)
        for col, element in enumerate(elements):
            for generator, coeff in element:
                array[rows[generator.id], col] = coeff
        return Matrix(self.field, array)

    def random_element(
        self, dim: int, rng: np.random.Generator, limit: int | None = None
    ) -> QElement:
        pool, _ = basis_or_sample(self, dim, rng, limit)
        return linear_combination(
            self, pool, random_vector(self.field, len(pool), rng), dim
        )

    def sample_basis(
        self, dim: int, rng: np.random.Generator, limit: int | None = None
    ) -> List[QElement]:
        generators = sample_generators(self, dim, OPTIONS.sampling.pool, rng, limit)
        return [self.element(generator) for generator in generators]

    def element_to_json(self, element: QElement) -> List[List[Any]]:
        """Terms as [generator key, coefficient], sorted by key."""
        terms = sorted(element, key=lambda term: term[0].key_str)
        return [[generator.key_json, coeff] for generator, coeff in terms]


_Q_CACHE: "weakref.WeakValueDictionary[Any, QComplex]" = weakref.WeakValueDictionary()
_Q_LOCK = threading.Lock()


def Q(base: Any) -> QComplex:
    """The canonical Q-complex of a base, one per structurally equal base.

    Entries are dropped once nothing refers to the Q-complex or its
    elements, so a rebuilt Q-complex never meets stale generators.
    """
    with _Q_LOCK:
        q = _Q_CACHE.get(base)
        if q is None:
            q = _Q_CACHE[base] = QComplex(base)
    return q


def gen0(q: QComplex, x: Any) -> QGenerator:
    return q.gen0(x)


def gen(q: QComplex, x: Any, z: QElement) -> QGenerator:
    return q.gen(x, z)


def epsilon(q: QComplex, element: QElement) -> Any:
    return q.epsilon(element)


def q_diff(q: QComplex, element: QElement) -> QElement:
    return q.q_diff(element)


def delta(q: QComplex, element: QElement) -> QElement:
    return q.delta(element)


def materialize(q: QComplex, upto: int, limit: int | None = None) -> Materialization:
    return q.materialize(upto, limit)


@dataclass(frozen=True)
class Counit:
    """The counit QX -> X as a graded map."""

    q: QComplex

    @property
    def source(self) -> QComplex:
        return self.q

    @property
    def target(self) -> Any:
        return self.q.base

    def apply(self, element: QElement, dim: int | None = None) -> Any:
        return self.q.epsilon(element)


@dataclass(frozen=True)
class Comultiplication:
    """The comultiplication QX -> QQX as a graded map."""

    q: QComplex

    @property
    def source(self) -> QComplex:
        return self.q

    @property
    def target(self) -> QComplex:
        return self.q.double

    def apply(self, element: QElement, dim: int | None = None) -> QElement:
        return self.q.delta(element)


class QMap:
    """The functor action Qf: QA -> QB of a graded map f: A -> B.

    [x] |-> [f(x)] and [x, z] |-> [f(x), Qf(z)], memoised per generator.

    Parameters
    ----------
    f : GradedMap
    source, target : QComplex, optional
        Default to Q(f.source) and Q(f.target).
    """

    def __init__(
        self, f: Any, source: QComplex | None = None, target: QComplex | None = None
    ) -> None:
        self.f = f
        self.source = Q(f.source) if source is None else source
        self.target = Q(f.target) if target is None else target
        self._memo: Dict[int, QGenerator] = {}

    def payload(self, generator: QGenerator) -> Any:
        """The image of the generator's first component in the target's base."""
        return self.f.apply(generator.x, generator.dim)

    def image(self, generator: QGenerator) -> QGenerator:
        image = self._memo.get(generator.id)
        if image is None:
            if generator.dim == 0:
                image = self.target.gen0(self.payload(generator))
            else:
                image = self.target.gen(self.payload(generator), self.apply(generator.z))
            self._memo[generator.id] = image
        return image

    def apply(self, element: QElement, dim: int | None = None) -> QElement:
        self.source.check_element(element, element.dim)
        result = self.target.zero(element.dim)
        for generator, coeff in element:
            result = result + coeff * self.target.element(self.image(generator))
        return result


@lru_cache(maxsize=DEFAULTS.cache.functors)
def functor(f: Any) -> QMap:
    """The (cached) functor action of a hashable graded map."""
    return QMap(f)


def q_map(f: Any, element: QElement) -> QElement:
    """Qf applied to an element of Q(f.source)."""
    return functor(f).apply(element)


def canonical_liftings(q: QComplex) -> ChoiceOfLiftings:
    """The liftings of epsilon given by the inclusion of generators."""

    def k0(x: Any) -> QElement:
        return q.element(q.gen0(x))

    def k(dim: int, x: Any, z: QElement) -> QElement:
        return q.element(q.gen(x, z))

    return ChoiceOfLiftings(Counit(q), k0, k, name="canonical")


class InitialMorphism:
    """The unique lifting-preserving map QX -> Y over X.

    h([x]) = k0(x) and h([x, z]) = k(x, h(z)), memoised per generator.

    Parameters
    ----------
    aaf : ChoiceOfLiftings
        A fibration f: Y -> X with chosen fillers.
    source : QComplex, optional
        A Q-complex over X, by default Q(X).
    """

    def __init__(self, aaf: ChoiceOfLiftings, source: QComplex | None = None) -> None:
        self.aaf = aaf
        self.source = Q(aaf.target) if source is None else source
        if self.source.base != aaf.target:
            raise ObjectMismatch("The Q-complex is not built over the fibration's base.")
        self.target = aaf.source
        self._memo: Dict[int, Any] = {}

    def image(self, generator: QGenerator) -> Any:
        image = self._memo.get(generator.id)
        if image is None:
            z = None if generator.dim == 0 else self.apply(generator.z)
            square = LiftingSquare(generator.dim, self.aaf.f, z, generator.x)
            image = solve_lifting(self.aaf, square).vec
            self._memo[generator.id] = image
        return image

    def apply(self, element: QElement, dim: int | None = None) -> Any:
        result = self.target.zero(element.dim)
        for generator, coeff in element:
            result = result + coeff * self.image(generator)
        return result


def initial_morphism(aaf: ChoiceOfLiftings, q: QComplex | None = None) -> InitialMorphism:
    return InitialMorphism(aaf, q)


def sample_generators(
    q: QComplex,
    dim: int,
    count: int,
    rng: np.random.Generator,
    limit: int | None = None,
) -> List[QGenerator]:
    """Up to ``count`` random generators of a dimension without enumerating it.

    Witnesses are random points of the affine set of cycles over a pool of
    lower generators (materialised if the guard allows, sampled otherwise).
    """
    base = q.base
    bottoms = [base.random_element(dim, rng, limit) for _ in range(count - 1)]
    bottoms.append(base.zero(dim))
    if dim == 0:
        return list(dict.fromkeys(q.gen0(x) for x in bottoms))

    pool, _ = basis_or_sample(q, dim - 1, rng, limit)
    kernel, offsets = cycle_fibres(
        q, dim - 1, pool, q.epsilon, base, [base.diff(x, dim) for x in bottoms]
    )
    generators = []
    for x, offset in zip(bottoms, offsets):
        if offset is None:
            continue
        coefficients = offset
        for vector, scalar in zip(kernel, random_vector(q.field, len(kernel), rng)):
            coefficients = coefficients + scalar * vector
        generators.append(q.gen(x, linear_combination(q, pool, coefficients, dim - 1)))
    return list(dict.fromkeys(generators))


def generators(
    q: QComplex, dim: int, rng: np.random.Generator, limit: int | None = None
) -> Tuple[List[QGenerator], bool]:
    """All generators of a dimension, or a seeded sample beyond the guard.

    Returns
    -------
    generators : list of QGenerator
    sampled : bool
    """
    try:
        return q.materialize(dim, limit).generators[dim], False
    except SizeGuardExceeded as error:
        logger.info("%s Sampling generators instead.", error)
        return sample_generators(q, dim, OPTIONS.sampling.samples, rng, limit), True
