"""One step of the small object argument for chain maps.

For f: X -> Y, every lifting square of a boundary inclusion against f
attaches one free generator to X, with boundary the square's top and
image under rho the square's bottom. This gives f = rho . lambda with
lambda: X -> P the inclusion.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List

import numpy as np

from .algebra import Matrix
from .complex import (
    ChainComplex,
    ChainMap,
    ComplexError,
    MapError,
    compose_maps,
    validate_complex,
    validate_map,
)
from .options import OPTIONS
from .qcomonad import Q
from .utils import Verdict, progress
from .wfs import LiftingSquare, squares

logger = logging.getLogger(__name__)


def enumerate_squares(f: ChainMap, dim: int, limit: int | None = None) -> List[LiftingSquare]:
    """All squares against f in a dimension, ordered by their (top, bottom) entries.

    Raises
    ------
    SizeGuardExceeded
    """
    if not 0 <= dim <= f.target.trunc:
        raise ValueError(f"Dimension {dim} exceeds truncation {f.target.trunc}.")

    def order(square: LiftingSquare) -> tuple:
        return (() if square.z is None else square.z.entries, square.x.entries)

    return sorted(squares(f, dim, limit), key=order)


@dataclass(frozen=True)
class Factorisation:
    """A factorisation f = rho . lambda through the complex P.

    Parameters
    ----------
    lam : ChainMap
        The inclusion X -> P.
    rho : ChainMap
        The map P -> Y.
    ledger : list of dict
        For every attached generator its dimension, its index in P and
        the square it was attached for.
    """

    lam: ChainMap
    rho: ChainMap
    ledger: List[Dict[str, Any]]

    @property
    def middle(self) -> ChainComplex:
        return self.lam.target

    def attached(self, dim: int) -> List[Dict[str, Any]]:
        return [entry for entry in self.ledger if entry["dim"] == dim]

    def to_json(self) -> Dict[str, Any]:
        return {
            "P": self.middle.to_json(),
            "lambda": self.lam.to_json(),
            "rho": self.rho.to_json(),
            "ledger": self.ledger,
        }


def one_step(f: ChainMap, limit: int | None = None) -> Factorisation:
    """Attaches a free generator for every square in every dimension.

    Raises
    ------
    SizeGuardExceeded
        If the squares of some dimension do not fit the guard.
    """
    limit = OPTIONS.guards.max_elems if limit is None else limit
    source, target, field = f.source, f.target, f.source.field
    trunc = source.trunc
    cases = [
        enumerate_squares(f, dim, limit)
        for dim in progress(range(trunc + 1), "squares", total=trunc + 1)
    ]
    ranks = tuple(source.rank(dim) + len(cases[dim]) for dim in range(trunc + 1))

    diffs = []
    for dim in range(1, trunc + 1):
        block = np.zeros((ranks[dim - 1], ranks[dim]), dtype=np.int64)
        block[: source.rank(dim - 1), : source.rank(dim)] = source.diff_matrix(dim).array
        for column, square in enumerate(cases[dim], start=source.rank(dim)):
            block[: source.rank(dim - 1), column] = square.z.entries
        diffs.append(block)
    middle = ChainComplex(field, ranks, tuple(Matrix(field, array) for array in diffs))

    lam_comps, rho_comps, ledger = [], [], []
    for dim in range(trunc + 1):
        inclusion = np.zeros((ranks[dim], source.rank(dim)), dtype=np.int64)
        inclusion[: source.rank(dim), :] = np.eye(source.rank(dim), dtype=np.int64)
        lam_comps.append(inclusion)

        projection = np.zeros((target.rank(dim), ranks[dim]), dtype=np.int64)
        projection[:, : source.rank(dim)] = f.comps[dim].array
        for column, square in enumerate(cases[dim], start=source.rank(dim)):
            projection[:, column] = square.x.entries
            ledger.append({"dim": dim, "index": column, "square": square.to_json()})
        rho_comps.append(projection)

    logger.debug("Attached %s generators.", [len(layer) for layer in cases])
    lam = ChainMap(source, middle, tuple(Matrix(field, array) for array in lam_comps))
    rho = ChainMap(middle, target, tuple(Matrix(field, array) for array in rho_comps))
    return Factorisation(lam, rho, ledger)


def verify_factorisation(factorisation: Factorisation, f: ChainMap) -> Verdict:
    """Checks that P is a complex, lambda and rho are chain maps and rho . lambda = f."""
    verdict = Verdict("factorisation")
    try:
        validate_complex(factorisation.middle)
        validate_map(factorisation.lam)
        validate_map(factorisation.rho)
    except (ComplexError, MapError) as error:
        return verdict.fail({"error": type(error).__name__, "dim": error.dim})

    composite = compose_maps(factorisation.rho, factorisation.lam)
    for dim, (left, right) in enumerate(zip(composite.comps, f.comps)):
        verdict.record(dim)
        if left != right:
            return verdict.fail(
                {"dim": dim, "expected": right.to_json(), "actual": left.to_json()}
            )

    middle = factorisation.middle
    for entry in factorisation.ledger:
        dim = entry["dim"]
        if dim > 1:
            boundary = middle.diff_matrix(dim).column(entry["index"])
            if not middle.is_cycle(boundary, dim - 1):
                return verdict.fail({"error": "NotACycle", **entry})
    return verdict


def q_agreement(factorisation: Factorisation, limit: int | None = None) -> Verdict:
    """Matches the generators attached in dimension 0 with those of Q(Y)_0.

    Both sets are indexed by the elements of Y_0, through rho and through
    the counit respectively.
    """
    target = factorisation.rho.target
    verdict = Verdict("q-agreement")
    free = sorted(
        tuple(factorisation.rho.comps[0].column(entry["index"]))
        for entry in factorisation.attached(0)
    )
    generated = sorted(
        tuple(generator.x) for generator in Q(target).materialize(0, limit).generators[0]
    )
    verdict.record(0, len(free))
    if free != generated:
        return verdict.fail(
            {"free": [list(x) for x in free], "q": [list(x) for x in generated]}
        )
    return verdict
