import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Protocol, Sequence, Tuple, runtime_checkable

import numpy as np

from .algebra import (
    DimensionMismatch,
    Matrix,
    PrimeField,
    SizeGuardExceeded,
    Vector,
    as_index,
    as_int,
    enumerate_affine,
    kernel_basis,
    mat_apply,
    random_vector,
    solve,
    vstack,
)
from .options import OPTIONS

logger = logging.getLogger(__name__)


class ComplexError(ValueError):
    """Raised when a chain complex is malformed."""

    def __init__(self, message: str, dim: int | None = None) -> None:
        self.dim = dim
        super().__init__(message)


class ShapeMismatch(ComplexError):
    """A differential does not fit the adjacent ranks."""


class SquareNotZero(ComplexError):
    """The composite d_dim . d_(dim+1) is not zero."""

    def __init__(self, dim: int) -> None:
        super().__init__(f"d_{dim} . d_{dim + 1} is not zero.", dim)


class MapError(ValueError):
    """Raised when a chain map is malformed."""

    def __init__(self, message: str, dim: int | None = None) -> None:
        self.dim = dim
        super().__init__(message)


class NotChainMap(MapError):
    """A square f_(dim-1) . d_dim = d_dim . f_dim fails."""

    def __init__(self, dim: int) -> None:
        super().__init__(f"The square at dimension {dim} does not commute.", dim)


class ObjectMismatch(ValueError):
    """Raised when maps are composed across different objects."""


@runtime_checkable
class GradedComplex(Protocol):
    """The interface shared by finite chain complexes and lazy Q-complexes."""

    field: PrimeField

    @property
    def trunc(self) -> int: ...

    def zero(self, dim: int) -> Any: ...

    def diff(self, element: Any, dim: int) -> Any: ...

    def is_cycle(self, element: Any, dim: int) -> bool: ...

    def check_element(self, element: Any, dim: int) -> None: ...

    def basis(self, dim: int, limit: int | None = None) -> List[Any]: ...

    def coordinates(self, element: Any, dim: int, limit: int | None = None) -> Vector: ...

    def local_matrix(self, elements: Sequence[Any], dim: int) -> Matrix: ...

    def element_to_json(self, element: Any) -> Any: ...


@runtime_checkable
class GradedMap(Protocol):
    """A degree-preserving linear map between graded complexes."""

    source: Any
    target: Any

    def apply(self, element: Any, dim: int) -> Any: ...


@dataclass(frozen=True)
class ChainComplex:
    """A truncated positively graded chain complex of Z/p-vector spaces.

    Parameters
    ----------
    field : PrimeField
    ranks : tuple of int
        The ranks n_0, ..., n_N.
    diffs : tuple of Matrix
        The differentials d_1, ..., d_N with d_i of shape (n_(i-1), n_i).
    """

    field: PrimeField
    ranks: Tuple[int, ...]
    diffs: Tuple[Matrix, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "ranks", tuple(int(rank) for rank in self.ranks))
        object.__setattr__(self, "diffs", tuple(self.diffs))

    @property
    def trunc(self) -> int:
        return len(self.ranks) - 1

    def rank(self, dim: int) -> int:
        return self.ranks[dim] if 0 <= dim <= self.trunc else 0

    def diff_matrix(self, dim: int) -> Matrix:
        """The matrix of d_dim; d_0 is the zero map to the zero module."""
        if dim == 0:
            return Matrix.zeros(self.field, 0, self.rank(0))
        return self.diffs[dim - 1]

    def zero(self, dim: int) -> Vector:
        return Vector.zeros(self.field, self.rank(dim))

    def diff(self, element: Vector, dim: int) -> Vector:
        return mat_apply(self.diff_matrix(dim), element)

    def is_cycle(self, element: Vector, dim: int) -> bool:
        return dim == 0 or self.diff(element, dim).is_zero()

    def check_element(self, element: Vector, dim: int) -> None:
        if not isinstance(element, Vector) or element.field != self.field:
            raise DimensionMismatch(f"{element!r} is not a vector over {self.field}.")
        if len(element) != self.rank(dim):
            raise DimensionMismatch(
                f"Expected length {self.rank(dim)} in dimension {dim}, got {len(element)}."
            )

    def basis(self, dim: int, limit: int | None = None) -> List[Vector]:
        """The standard basis of the dim-th module."""
        return [
            Vector.unit(self.field, self.rank(dim), index)
            for index in range(self.rank(dim))
        ]

    def coordinates(self, element: Vector, dim: int, limit: int | None = None) -> Vector:
        return element

    def local_matrix(self, elements: Sequence[Vector], dim: int) -> Matrix:
        return Matrix.from_columns(self.field, list(elements), self.rank(dim))

    def random_element(
        self, dim: int, rng: np.random.Generator, limit: int | None = None
    ) -> Vector:
        return random_vector(self.field, self.rank(dim), rng)

    def element_to_json(self, element: Vector) -> List[int]:
        return element.to_json()

    def element_from_json(self, data: Sequence[int], dim: int) -> Vector:
        element = Vector(self.field, tuple(self.field.residue(entry) for entry in data))
        self.check_element(element, dim)
        return element

    def to_json(self) -> Dict[str, Any]:
        return {
            "p": self.field.p,
            "trunc": self.trunc,
            "ranks": list(self.ranks),
            "diffs": [diff.to_json() for diff in self.diffs],
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "ChainComplex":
        """Reads the {"p", "trunc", "ranks", "diffs"} format."""
        field = PrimeField(as_int(data["p"], "modulus"))
        ranks = [as_index(rank, "rank") for rank in data["ranks"]]
        if len(ranks) != as_index(data["trunc"], "truncation") + 1:
            raise ShapeMismatch(
                f"{len(ranks)} ranks given for truncation {data['trunc']}."
            )
        diffs = []
        for dim, rows in enumerate(data.get("diffs", []), start=1):
            target = ranks[dim - 1] if dim - 1 < len(ranks) else 0
            if len(rows) != target:
                raise ShapeMismatch(
                    f"d_{dim} has {len(rows)} rows, expected {target}.", dim
                )
            source = ranks[dim] if dim < len(ranks) else 0
            diffs.append(Matrix.from_json(field, rows, cols=source))
        return cls(field, tuple(ranks), tuple(diffs))

    def __str__(self) -> str:
        return f"ChainComplex over {self.field} with ranks {list(self.ranks)}"


@dataclass(frozen=True)
class ChainMap:
    """A chain map given by one matrix per dimension 0, ..., N."""

    source: ChainComplex
    target: ChainComplex
    comps: Tuple[Matrix, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "comps", tuple(self.comps))

    def apply(self, element: Vector, dim: int) -> Vector:
        return mat_apply(self.comps[dim], element)

    def to_json(self, objects: bool = False) -> Dict[str, Any]:
        data = {"comps": [comp.to_json() for comp in self.comps]}
        if objects:
            data.update(source=self.source.to_json(), target=self.target.to_json())
        return data

    @classmethod
    def from_json(
        cls,
        data: Dict[str, Any],
        source: ChainComplex | None = None,
        target: ChainComplex | None = None,
    ) -> "ChainMap":
        """Reads {"comps": [...]} with inline or given source and target."""
        source = ChainComplex.from_json(data["source"]) if source is None else source
        target = ChainComplex.from_json(data["target"]) if target is None else target
        if len(data["comps"]) != source.trunc + 1:
            raise MapError(
                f"{len(data['comps'])} components given for truncation {source.trunc}."
            )
        comps = [
            Matrix.from_json(source.field, rows, cols=source.rank(dim))
            for dim, rows in enumerate(data["comps"])
        ]
        return cls(source, target, tuple(comps))


@dataclass(frozen=True)
class DimensionedElement:
    """An element of a complex together with its dimension."""

    complex: Any
    dim: int
    vec: Any

    def __post_init__(self) -> None:
        self.complex.check_element(self.vec, self.dim)

    def to_json(self) -> Dict[str, Any]:
        return {"dim": self.dim, "element": self.complex.element_to_json(self.vec)}


@dataclass(frozen=True)
class ComposedMap:
    """The lazily evaluated composite outer . inner."""

    outer: Any
    inner: Any

    @property
    def source(self) -> Any:
        return self.inner.source

    @property
    def target(self) -> Any:
        return self.outer.target

    def apply(self, element: Any, dim: int) -> Any:
        return self.outer.apply(self.inner.apply(element, dim), dim)


def validate_complex(chain_complex: ChainComplex) -> None:
    """Checks shapes and d . d = 0.

    Raises
    ------
    ShapeMismatch
        If a differential does not fit the adjacent ranks.
    SquareNotZero
        At the first dimension i with d_i . d_(i+1) != 0.
    """
    if any(rank < 0 for rank in chain_complex.ranks):
        raise ShapeMismatch("Ranks must be nonnegative.")

    if len(chain_complex.diffs) != chain_complex.trunc:
        raise ShapeMismatch(
            f"{len(chain_complex.diffs)} differentials for truncation {chain_complex.trunc}."
        )

    for dim, diff in enumerate(chain_complex.diffs, start=1):
        expected = (chain_complex.rank(dim - 1), chain_complex.rank(dim))
        if diff.field != chain_complex.field or diff.shape != expected:
            raise ShapeMismatch(
                f"d_{dim} has shape {diff.shape}, expected {expected}.", dim
            )

    for dim in range(1, chain_complex.trunc):
        square = chain_complex.diff_matrix(dim) @ chain_complex.diff_matrix(dim + 1)
        if not square.is_zero():
            raise SquareNotZero(dim)


def validate_map(chain_map: ChainMap) -> None:
    """Checks that all squares f_(i-1) . d_i = d_i . f_i commute.

    Raises
    ------
    MapError
        If the objects or component shapes do not fit.
    NotChainMap
        At the first dimension whose square fails.
    """
    source, target = chain_map.source, chain_map.target
    if source.field != target.field or source.trunc != target.trunc:
        raise MapError("Source and target need the same field and truncation.")

    if len(chain_map.comps) != source.trunc + 1:
        raise MapError(f"Expected {source.trunc + 1} components.")

    for dim, comp in enumerate(chain_map.comps):
        if comp.shape != (target.rank(dim), source.rank(dim)):
            raise MapError(f"f_{dim} has shape {comp.shape}.", dim)

    for dim in range(1, source.trunc + 1):
        left = chain_map.comps[dim - 1] @ source.diff_matrix(dim)
        right = target.diff_matrix(dim) @ chain_map.comps[dim]
        if left != right:
            raise NotChainMap(dim)


def cycles(chain_complex: ChainComplex, dim: int) -> List[Vector]:
    """A basis of the cycles Z_dim, with every chain a cycle in dimension 0."""
    if dim == 0:
        return chain_complex.basis(0)
    return kernel_basis(chain_complex.diff_matrix(dim))


def identity_map(chain_complex: ChainComplex) -> ChainMap:
    comps = [
        Matrix.identity(chain_complex.field, rank) for rank in chain_complex.ranks
    ]
    return ChainMap(chain_complex, chain_complex, tuple(comps))


def zero_map(source: ChainComplex, target: ChainComplex) -> ChainMap:
    comps = [
        Matrix.zeros(source.field, target.rank(dim), source.rank(dim))
        for dim in range(source.trunc + 1)
    ]
    return ChainMap(source, target, tuple(comps))


def compose_maps(outer: ChainMap, inner: ChainMap) -> ChainMap:
    """The dimension-wise composite outer . inner."""
    if inner.target != outer.source:
        raise ObjectMismatch("The inner map's target is not the outer map's source.")
    comps = [left @ right for left, right in zip(outer.comps, inner.comps)]
    return ChainMap(inner.source, outer.target, tuple(comps))


def compose(outer: Any, inner: Any) -> Any:
    """Composes graded maps; two chain maps compose to a chain map."""
    if isinstance(outer, ChainMap) and isinstance(inner, ChainMap):
        return compose_maps(outer, inner)

    if inner.target != outer.source:
        raise ObjectMismatch("The inner map's target is not the outer map's source.")
    return ComposedMap(outer, inner)


def zero_complex(field: PrimeField, trunc: int) -> ChainComplex:
    diffs = [Matrix.zeros(field, 0, 0) for _ in range(trunc)]
    return ChainComplex(field, (0,) * (trunc + 1), tuple(diffs))


def disk(field: PrimeField, index: int, trunc: int) -> ChainComplex:
    """The complex 2_index: S in dimensions index and index - 1, joined by 1."""
    if not 0 <= index <= trunc:
        raise DimensionMismatch(f"2_{index} does not fit truncation {trunc}.")
    ranks = [int(dim in (index, index - 1)) for dim in range(trunc + 1)]
    diffs = [
        Matrix.identity(field, 1)
        if dim == index
        else Matrix.zeros(field, ranks[dim - 1], ranks[dim])
        for dim in range(1, trunc + 1)
    ]
    return ChainComplex(field, tuple(ranks), tuple(diffs))


def sphere(field: PrimeField, index: int, trunc: int) -> ChainComplex:
    """The boundary complex of 2_index: S in dimension index - 1 only."""
    if not 0 <= index <= trunc:
        raise DimensionMismatch(f"The boundary of 2_{index} does not fit truncation {trunc}.")
    ranks = [int(dim == index - 1) for dim in range(trunc + 1)]
    diffs = [
        Matrix.zeros(field, ranks[dim - 1], ranks[dim]) for dim in range(1, trunc + 1)
    ]
    return ChainComplex(field, tuple(ranks), tuple(diffs))


def direct_sum(
    first: ChainComplex, second: ChainComplex
) -> Tuple[ChainComplex, Tuple[ChainMap, ChainMap], Tuple[ChainMap, ChainMap]]:
    """The direct sum with its projections and inclusions."""
    if first.field != second.field or first.trunc != second.trunc:
        raise ObjectMismatch("Summands need the same field and truncation.")

    field, trunc = first.field, first.trunc
    ranks = tuple(first.rank(dim) + second.rank(dim) for dim in range(trunc + 1))
    diffs = []
    for dim in range(1, trunc + 1):
        block = np.zeros((ranks[dim - 1], ranks[dim]), dtype=np.int64)
        block[: first.rank(dim - 1), : first.rank(dim)] = first.diff_matrix(dim).array
        block[first.rank(dim - 1) :, first.rank(dim) :] = second.diff_matrix(dim).array
        diffs.append(Matrix(field, block))
    total = ChainComplex(field, ranks, tuple(diffs))

    def blocks(offset: Callable[[int], int], summand: ChainComplex) -> List[Matrix]:
        comps = []
        for dim in range(trunc + 1):
            array = np.zeros((summand.rank(dim), ranks[dim]), dtype=np.int64)
            start = offset(dim)
            array[:, start : start + summand.rank(dim)] = np.eye(summand.rank(dim))
            comps.append(Matrix(field, array))
        return comps

    first_blocks, second_blocks = blocks(lambda _: 0, first), blocks(first.rank, second)
    projections = (
        ChainMap(total, first, tuple(first_blocks)),
        ChainMap(total, second, tuple(second_blocks)),
    )
    inclusions = (
        ChainMap(first, total, tuple(comp.transpose() for comp in first_blocks)),
        ChainMap(second, total, tuple(comp.transpose() for comp in second_blocks)),
    )
    return total, projections, inclusions


def random_complex(
    field: PrimeField, ranks: Sequence[int], seed: int | None = None
) -> ChainComplex:
    """A seeded random complex with d . d = 0.

    Every column of d_(i+1) is a random combination of the kernel basis of d_i.
    """
    seed = OPTIONS.sampling.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    ranks, diffs = tuple(ranks), []
    for dim in range(1, len(ranks)):
        if dim == 1:
            kernel = [Vector.unit(field, ranks[0], index) for index in range(ranks[0])]
        else:
            kernel = kernel_basis(diffs[-1])

        if kernel:
            span = np.array([vector.entries for vector in kernel], dtype=np.int64)
            coefficients = rng.integers(0, field.p, size=(ranks[dim], len(kernel)))
            diffs.append(Matrix(field, (coefficients @ span).T))
        else:
            diffs.append(Matrix.zeros(field, ranks[dim - 1], ranks[dim]))
    logger.debug("Random complex over %s with ranks %s (seed %d).", field, ranks, seed)
    return ChainComplex(field, ranks, tuple(diffs))


def linear_combination(
    space: Any, pool: Sequence[Any], coefficients: Vector | Sequence[int], dim: int
) -> Any:
    """The element sum_j c_j pool_j of ``space`` in dimension ``dim``."""
    result = space.zero(dim)
    for coefficient, element in zip(coefficients, pool):
        if coefficient:
            result = result + coefficient * element
    return result


def all_elements(space: Any, dim: int, limit: int | None = None) -> List[Any]:
    """Every element of the dim-th module in lexicographic coordinate order.

    Raises
    ------
    SizeGuardExceeded
        If p^rank exceeds ``limit``.
    """
    limit = OPTIONS.guards.max_elems if limit is None else limit
    pool = space.basis(dim, limit)
    units = [Vector.unit(space.field, len(pool), index) for index in range(len(pool))]
    try:
        coefficients = enumerate_affine(units, Vector.zeros(space.field, len(pool)), limit)
    except SizeGuardExceeded as error:
        raise SizeGuardExceeded(error.required, limit, dim) from error
    return [linear_combination(space, pool, vector, dim) for vector in coefficients]


def cycle_fibres(
    space: Any,
    dim: int,
    pool: Sequence[Any],
    image: Callable[[Any], Any],
    target: Any,
    rhs: Sequence[Any],
) -> Tuple[List[Vector], List[Vector | None]]:
    """The affine sets {c : sum c_j pool_j is a cycle with image r} for each r.

    Parameters
    ----------
    space : GradedComplex
        The complex the pool lives in.
    dim : int
        The dimension of the pool.
    pool : list
        Elements of ``space`` in dimension ``dim``; coefficients refer to them.
    image : callable
        A linear map from ``space`` to ``target`` in dimension ``dim``.
    target : GradedComplex
    rhs : list
        Elements of ``target`` in dimension ``dim``.

    Returns
    -------
    kernel : list of Vector
        A basis of the shared homogeneous solution space.
    offsets : list of Vector or None
        One particular solution per right-hand side, None where there is none.
    """
    images = target.local_matrix([image(element) for element in pool] + list(rhs), dim)
    system, values = images.columns(0, len(pool)), images.columns(len(pool))
    if dim > 0:
        diffs = space.local_matrix([space.diff(element, dim) for element in pool], dim - 1)
        system = vstack(diffs, system)
        values = vstack(Matrix.zeros(space.field, diffs.rows, len(rhs)), values)

    kernel = kernel_basis(system)
    offsets = [solve(system, values.column(index)) for index in range(len(rhs))]
    return kernel, offsets


@dataclass(frozen=True)
class IdentityMap:
    """The identity of any graded complex."""

    space: Any

    @property
    def source(self) -> Any:
        return self.space

    @property
    def target(self) -> Any:
        return self.space

    def apply(self, element: Any, dim: int) -> Any:
        return element


def basis_or_sample(
    space: Any, dim: int, rng: np.random.Generator, limit: int | None = None
) -> Tuple[List[Any], bool]:
    """The basis of a dimension, or a seeded sample of it beyond the guard.

    Returns
    -------
    pool : list
    sampled : bool
    """
    limit = OPTIONS.guards.max_elems if limit is None else limit
    try:
        return space.basis(dim, limit), False
    except SizeGuardExceeded:
        if not hasattr(space, "sample_basis"):
            raise
        logger.info("Basis of dimension %d exceeds %d, sampling instead.", dim, limit)
        return space.sample_basis(dim, rng, limit), True
