"""Generating cofibrations, lifting squares and algebraic acyclic fibrations.

A map into a complex Y out of the boundary of 2_i is a cycle of Y in
dimension i - 1, and a map out of 2_i is an element of dimension i.
Lifting problems against the inclusions of the boundaries are
therefore pairs (x, z) with x in X_i and z a cycle in Y_(i-1) such that
d(x) = f(z), and a filler is an element y of Y_i with f(y) = x and
d(y) = z.
"""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List

import numpy as np

from .algebra import (
    Matrix,
    NotSurjective,
    PrimeField,
    SizeGuardExceeded,
    Vector,
    as_index,
    concat,
    enumerate_affine,
    random_vector,
    section_of_surjection,
    solve,
    vstack,
)
from .complex import (
    ChainComplex,
    ChainMap,
    DimensionedElement,
    IdentityMap,
    ObjectMismatch,
    all_elements,
    basis_or_sample,
    compose,
    cycle_fibres,
    disk,
    identity_map,
    linear_combination,
    sphere,
)
from .options import OPTIONS
from .utils import Verdict, canonical_json, make_rng

logger = logging.getLogger(__name__)


class IncompatibleSquare(ValueError):
    """Raised when a square does not commute or its top is no cycle."""


class SectionLawViolated(ValueError):
    """Raised when a chosen filler misses one of its triangles."""

    def __init__(self, dim: int, witness: Dict[str, Any]) -> None:
        self.dim, self.witness = dim, witness
        super().__init__(f"Section law violated in dimension {dim}: {witness}")


class NotAcyclicFibration(ValueError):
    """Raised when a compatible pair has no preimage at all."""

    def __init__(self, dim: int, message: str = "") -> None:
        self.dim = dim
        super().__init__(message or f"No filler exists in dimension {dim}.")


class NotOverX(ValueError):
    """Raised when a map between fibrations does not commute with them."""

    def __init__(self, witness: Dict[str, Any]) -> None:
        self.witness = witness
        super().__init__(f"The map does not lie over the base: {witness}")


class LiftingNotPreserved(ValueError):
    """Raised when a map over the base does not preserve the chosen fillers."""

    def __init__(self, witness: Dict[str, Any]) -> None:
        self.witness = witness
        super().__init__(f"Chosen fillers are not preserved: {witness}")


@dataclass(frozen=True)
class GeneratingCofibration:
    """The boundary inclusion of 2_index."""

    index: int

    def check(self, trunc: int) -> None:
        if not 0 <= self.index <= trunc:
            raise ValueError(f"The cofibration {self.index} exceeds truncation {trunc}.")

    def source(self, field: PrimeField, trunc: int) -> ChainComplex:
        return sphere(field, self.index, trunc)

    def target(self, field: PrimeField, trunc: int) -> ChainComplex:
        return disk(field, self.index, trunc)

    def inclusion(self, field: PrimeField, trunc: int) -> ChainMap:
        """The inclusion of the boundary into 2_index as a chain map."""
        self.check(trunc)
        source, target = self.source(field, trunc), self.target(field, trunc)
        comps = [
            Matrix.identity(field, 1)
            if dim == self.index - 1
            else Matrix.zeros(field, target.rank(dim), source.rank(dim))
            for dim in range(trunc + 1)
        ]
        return ChainMap(source, target, tuple(comps))


@dataclass(frozen=True)
class LiftingSquare:
    """A lifting problem of the boundary inclusion of 2_dim against f.

    Parameters
    ----------
    dim : int
    f : GradedMap
        The right-hand map Y -> X.
    z : element of Y or None
        The top: a cycle of Y in dimension dim - 1, None when dim is 0.
    x : element of X
        The bottom: an element of X in dimension dim.
    """

    dim: int
    f: Any
    z: Any
    x: Any

    def check(self) -> None:
        """Raises IncompatibleSquare unless the square commutes."""
        source, target = self.f.source, self.f.target
        try:
            target.check_element(self.x, self.dim)
        except ValueError as error:
            raise IncompatibleSquare(str(error)) from error

        if self.dim == 0:
            if self.z is not None:
                raise IncompatibleSquare("A square in dimension 0 has no top.")
            return

        if self.z is None:
            raise IncompatibleSquare(f"A square in dimension {self.dim} needs a top.")

        try:
            source.check_element(self.z, self.dim - 1)
        except ValueError as error:
            raise IncompatibleSquare(str(error)) from error

        if not source.is_cycle(self.z, self.dim - 1):
            raise IncompatibleSquare("The top of the square is not a cycle.")
        if target.diff(self.x, self.dim) != self.f.apply(self.z, self.dim - 1):
            raise IncompatibleSquare("The square does not commute: d(x) != f(z).")

    def to_json(self) -> Dict[str, Any]:
        return {
            "i": self.dim,
            "z": None if self.z is None else self.f.source.element_to_json(self.z),
            "x": self.f.target.element_to_json(self.x),
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any], f: Any) -> "LiftingSquare":
        """Reads {"i", "z", "x"} against a map between finite complexes."""
        dim = as_index(data["i"])
        z = data.get("z")
        if z is not None and dim > 0:
            z = f.source.element_from_json(z, dim - 1)
        return cls(dim, f, z, f.target.element_from_json(data["x"], dim))


@dataclass(frozen=True)
class ChoiceOfLiftings:
    """A map f: Y -> X together with chosen fillers.

    Parameters
    ----------
    f : GradedMap
    k0 : callable
        x |-> y in dimension 0, a section of f_0.
    k : callable
        (dim, x, z) |-> y for compatible pairs in dimensions dim >= 1.
    name : str, optional
    """

    f: Any
    k0: Callable[[Any], Any]
    k: Callable[[int, Any, Any], Any]
    name: str = "liftings"

    @property
    def source(self) -> Any:
        return self.f.source

    @property
    def target(self) -> Any:
        return self.f.target

    def lift(self, dim: int, x: Any, z: Any = None) -> Any:
        """The chosen filler without any checks."""
        return self.k0(x) if dim == 0 else self.k(dim, x, z)


@dataclass(frozen=True)
class AAFOver:
    """An algebraic acyclic fibration into a fixed base."""

    base: Any
    liftings: ChoiceOfLiftings

    def __post_init__(self) -> None:
        if self.liftings.target != self.base:
            raise ObjectMismatch("The fibration does not end in the base.")

    @property
    def f(self) -> Any:
        return self.liftings.f


def _witness(square: LiftingSquare, **elements: Any) -> Dict[str, Any]:
    witness = square.to_json()
    for key, (space, element) in elements.items():
        witness[key] = space.element_to_json(element)
    return witness


def solve_lifting(aaf: ChoiceOfLiftings, square: LiftingSquare) -> DimensionedElement:
    """The chosen filler of a square, checked against both triangles.

    Raises
    ------
    IncompatibleSquare
        If the square is not a square against ``aaf.f``.
    SectionLawViolated
        If the chosen filler misses a triangle.
    """
    if square.f is not aaf.f and square.f != aaf.f:
        raise IncompatibleSquare("The square's right-hand map is not the fibration.")
    square.check()

    source, target = aaf.source, aaf.target
    filler = aaf.lift(square.dim, square.x, square.z)
    try:
        source.check_element(filler, square.dim)
    except ValueError as error:
        raise SectionLawViolated(
            square.dim, _witness(square) | {"error": str(error)}
        ) from error

    if aaf.f.apply(filler, square.dim) != square.x:
        raise SectionLawViolated(square.dim, _witness(square, y=(source, filler)))
    if square.dim > 0 and source.diff(filler, square.dim) != square.z:
        raise SectionLawViolated(square.dim, _witness(square, y=(source, filler)))
    return DimensionedElement(source, square.dim, filler)


def squares(f: Any, dim: int, limit: int | None = None) -> List[LiftingSquare]:
    """Every lifting square of the boundary inclusion of 2_dim against f.

    Raises
    ------
    SizeGuardExceeded
        If more than ``limit`` squares (or bottoms) exist.
    """
    limit = OPTIONS.guards.max_elems if limit is None else limit
    source, target = f.source, f.target
    bottoms = all_elements(target, dim, limit)
    if dim == 0:
        return [LiftingSquare(0, f, None, x) for x in bottoms]

    pool = source.basis(dim - 1, limit)
    kernel, offsets = cycle_fibres(
        source,
        dim - 1,
        pool,
        lambda element: f.apply(element, dim - 1),
        target,
        [target.diff(x, dim) for x in bottoms],
    )
    required = sum(
        source.field.p ** len(kernel) for offset in offsets if offset is not None
    )
    if required > limit:
        raise SizeGuardExceeded(required, limit, dim)

    result = []
    for x, offset in zip(bottoms, offsets):
        if offset is None:
            continue
        for coefficients in enumerate_affine(kernel, offset, limit):
            z = linear_combination(source, pool, coefficients, dim - 1)
            result.append(LiftingSquare(dim, f, z, x))
    return result


def sample_squares(
    f: Any,
    dim: int,
    count: int,
    rng: np.random.Generator,
    limit: int | None = None,
) -> List[LiftingSquare]:
    """Up to ``count`` random lifting squares against f in dimension dim."""
    limit = OPTIONS.guards.max_elems if limit is None else limit
    source, target = f.source, f.target
    bottoms = [target.random_element(dim, rng, limit) for _ in range(count)]
    if dim == 0:
        return [LiftingSquare(0, f, None, x) for x in bottoms]

    pool, _ = basis_or_sample(source, dim - 1, rng, limit)
    kernel, offsets = cycle_fibres(
        source,
        dim - 1,
        pool,
        lambda element: f.apply(element, dim - 1),
        target,
        [target.diff(x, dim) for x in bottoms],
    )
    result = []
    for x, offset in zip(bottoms, offsets):
        if offset is None:
            continue
        coefficients = offset
        for vector, scalar in zip(kernel, random_vector(source.field, len(kernel), rng)):
            coefficients = coefficients + scalar * vector
        z = linear_combination(source, pool, coefficients, dim - 1)
        result.append(LiftingSquare(dim, f, z, x))
    return result


def _squares_or_sample(
    f: Any, dim: int, limit: int, rng: np.random.Generator, verdict: Verdict, seed: int
) -> List[LiftingSquare]:
    try:
        return squares(f, dim, limit)
    except SizeGuardExceeded as error:
        logger.info("Squares in dimension %d: %s Sampling instead.", dim, error)
        verdict.mark_sampled(seed)
        return sample_squares(f, dim, OPTIONS.sampling.samples, rng, limit)


def _upto(space: Any, upto: int | None) -> int:
    upto = OPTIONS.guards.max_dim if upto is None else upto
    return min(upto, space.trunc)


def validate_aaf(
    aaf: ChoiceOfLiftings,
    limit: int | None = None,
    upto: int | None = None,
    seed: int | None = None,
) -> Verdict:
    """Checks the section laws on every square (or a seeded sample).

    Raises
    ------
    SectionLawViolated
        With the dimension and the first failing square.
    """
    limit = OPTIONS.guards.max_elems if limit is None else limit
    seed = OPTIONS.sampling.seed if seed is None else seed
    rng, verdict = make_rng(seed), Verdict(aaf.name)
    for dim in range(_upto(aaf.target, upto) + 1):
        cases = _squares_or_sample(aaf.f, dim, limit, rng, verdict, seed)
        for square in cases:
            solve_lifting(aaf, square)
        verdict.record(dim, len(cases))
    return verdict


def compose_liftings(phi: ChoiceOfLiftings, psi: ChoiceOfLiftings) -> ChoiceOfLiftings:
    """The liftings of g . f from liftings phi of f: C -> D and psi of g: D -> E.

    A square (x over E, z over C) is first lifted against g with top f(z),
    and the result is lifted against f with top z.
    """
    if phi.target != psi.source:
        raise ObjectMismatch("The liftings do not compose: target and source differ.")

    f = phi.f

    def k0(x: Any) -> Any:
        return phi.lift(0, psi.lift(0, x))

    def k(dim: int, x: Any, z: Any) -> Any:
        return phi.lift(dim, psi.lift(dim, x, f.apply(z, dim - 1)), z)

    return ChoiceOfLiftings(
        compose(psi.f, f), k0, k, name=f"({phi.name} . {psi.name})"
    )


def verify_aaf_morphism(
    u: Any,
    src: AAFOver | ChoiceOfLiftings,
    dst: AAFOver | ChoiceOfLiftings,
    limit: int | None = None,
    upto: int | None = None,
    seed: int | None = None,
) -> Verdict:
    """Checks that u: Y -> Z lies over X and preserves the chosen fillers.

    Raises
    ------
    NotOverX
        If dst.f . u differs from src.f on a basis element.
    LiftingNotPreserved
        If u(phi(x, z)) differs from psi(x, u(z)) for some square.
    """
    src = src.liftings if isinstance(src, AAFOver) else src
    dst = dst.liftings if isinstance(dst, AAFOver) else dst
    if src.target != dst.target:
        raise ObjectMismatch("The fibrations live over different bases.")

    limit = OPTIONS.guards.max_elems if limit is None else limit
    seed = OPTIONS.sampling.seed if seed is None else seed
    rng, verdict = make_rng(seed), Verdict("aaf-morphism")
    source, base = src.source, src.target
    for dim in range(_upto(base, upto) + 1):
        pool, sampled = basis_or_sample(source, dim, rng, limit)
        if sampled:
            verdict.mark_sampled(seed)
        for element in pool:
            if dst.f.apply(u.apply(element, dim), dim) != src.f.apply(element, dim):
                raise NotOverX(
                    {"dim": dim, "element": source.element_to_json(element)}
                )

        cases = _squares_or_sample(src.f, dim, limit, rng, verdict, seed)
        for square in cases:
            image = u.apply(src.lift(dim, square.x, square.z), dim)
            top = None if dim == 0 else u.apply(square.z, dim - 1)
            expected = dst.lift(dim, square.x, top)
            if image != expected:
                raise LiftingNotPreserved(
                    _witness(square, u_phi=(dst.source, image), psi=(dst.source, expected))
                )
        verdict.record(dim, len(pool) + len(cases))
    return verdict


def identity_liftings(space: Any) -> ChoiceOfLiftings:
    """The canonical liftings of the identity, k(x, z) = x."""
    f = identity_map(space) if isinstance(space, ChainComplex) else IdentityMap(space)
    return ChoiceOfLiftings(f, lambda x: x, lambda dim, x, z: x, name="identity")


def solver_liftings(f: ChainMap) -> ChoiceOfLiftings:
    """Liftings of a map between finite complexes by linear solving.

    Dimension 0 uses the canonical section of f_0; above, a filler solves
    (f_i; d_i) y = (x; z) with all free variables zero.

    Raises
    ------
    NotAcyclicFibration
        When f_0 is not surjective; in higher dimensions once a compatible
        pair without a filler is met.
    """
    source = f.source
    try:
        section = section_of_surjection(f.comps[0])
    except NotSurjective as error:
        raise NotAcyclicFibration(0, str(error)) from error

    systems = [
        vstack(f.comps[dim], source.diff_matrix(dim)) for dim in range(1, source.trunc + 1)
    ]

    def k(dim: int, x: Vector, z: Vector) -> Vector:
        filler = solve(systems[dim - 1], concat(x, z))
        if filler is None:
            raise NotAcyclicFibration(dim)
        return filler

    return ChoiceOfLiftings(f, section, k, name="solver")


def perturbed_liftings(
    aaf: ChoiceOfLiftings, dim: int, point: Any, delta: Any
) -> ChoiceOfLiftings:
    """The liftings with ``delta`` added to every filler over ``point`` in ``dim``.

    Adding an element of ker f (and of ker d above dimension 0) gives another,
    non-linear, choice of liftings; anything else breaks the section laws.
    """

    def k0(x: Any) -> Any:
        filler = aaf.lift(0, x)
        return filler + delta if dim == 0 and x == point else filler

    def k(index: int, x: Any, z: Any) -> Any:
        filler = aaf.lift(index, x, z)
        return filler + delta if index == dim and x == point else filler

    return ChoiceOfLiftings(aaf.f, k0, k, name=f"{aaf.name}+perturbed")


def table_liftings(
    f: Any, k0_table: Dict[str, Any], k_tables: Dict[int, Dict[str, Any]]
) -> ChoiceOfLiftings:
    """Liftings read from explicit tables keyed by serialised (x, z) pairs."""
    source, target = f.source, f.target

    def k0(x: Any) -> Any:
        key = canonical_json(target.element_to_json(x))
        if key not in k0_table:
            raise NotAcyclicFibration(0, f"No filler recorded for x = {key}.")
        return k0_table[key]

    def k(dim: int, x: Any, z: Any) -> Any:
        key = canonical_json(
            [target.element_to_json(x), source.element_to_json(z)]
        )
        if key not in k_tables.get(dim, {}):
            raise NotAcyclicFibration(dim, f"No filler recorded for (x, z) = {key}.")
        return k_tables[dim][key]

    return ChoiceOfLiftings(f, k0, k, name="table")


def liftings_from_json(
    data: Dict[str, Any], source: ChainComplex, target: ChainComplex
) -> ChoiceOfLiftings:
    """Reads an AAF fixture: a map and either "solve" or explicit tables."""
    f = ChainMap.from_json(data["map"], source, target)
    tables = data.get("liftings", "solve")
    if tables == "solve":
        return solver_liftings(f)

    k0_table = {
        canonical_json(target.element_from_json(x, 0).to_json()): source.element_from_json(y, 0)
        for x, y in tables.get("k0", [])
    }
    k_tables = {}
    for key, rows in tables.get("k", {}).items():
        dim = as_index(int(key) if key.isdecimal() else key)
        k_tables[dim] = {
            canonical_json(
                [
                    target.element_from_json(x, dim).to_json(),
                    source.element_from_json(z, dim - 1).to_json(),
                ]
            ): source.element_from_json(y, dim)
            for x, z, y in rows
        }
    return table_liftings(f, k0_table, k_tables)


def liftings_to_json(
    aaf: ChoiceOfLiftings, limit: int | None = None, upto: int | None = None
) -> Dict[str, Any]:
    """Tabulates the chosen fillers of an AAF between finite complexes."""
    tables: Dict[str, Any] = {"k0": [], "k": {}}
    for dim in range(_upto(aaf.target, upto) + 1):
        rows = []
        for square in squares(aaf.f, dim, limit):
            filler = aaf.lift(dim, square.x, square.z)
            if dim == 0:
                tables["k0"].append([square.x.to_json(), filler.to_json()])
            else:
                rows.append([square.x.to_json(), square.z.to_json(), filler.to_json()])
        if dim > 0:
            tables["k"][str(dim)] = rows
    return {
        "source": aaf.source.to_json(),
        "target": aaf.target.to_json(),
        "map": aaf.f.to_json(),
        "liftings": tables,
    }
