from typing import List

import pytest

from cofrep.algebra import Matrix
from cofrep.complex import (
    ChainComplex,
    ChainMap,
    identity_map,
    validate_map,
    zero_complex,
    zero_map,
)
from cofrep.soa import enumerate_squares, one_step, q_agreement, verify_factorisation

from conftest import CORPUS, Z2, point, projection_onto


def corpus_maps(x: ChainComplex) -> List[ChainMap]:
    zero = zero_complex(x.field, x.trunc)
    return [identity_map(x), zero_map(x, zero), zero_map(zero, x), projection_onto(x)]


def test_squares_from_the_zero_complex() -> None:
    x = point(Z2, 1)
    f = zero_map(zero_complex(Z2, 1), x)
    assert [square.x.entries for square in enumerate_squares(f, 0)] == [(0,), (1,)]
    assert len(enumerate_squares(f, 1)) == 1
    with pytest.raises(ValueError):
        enumerate_squares(f, 2)


def test_one_step_of_the_point() -> None:
    """Tests the free generators attached for 0 -> point."""
    x = point(Z2, 1)
    factorisation = one_step(zero_map(zero_complex(Z2, 1), x))
    assert factorisation.middle.ranks == (2, 1)
    assert factorisation.rho.comps[0] == Matrix.from_rows(Z2, [[0, 1]])
    assert [entry["dim"] for entry in factorisation.ledger] == [0, 0, 1]
    assert [entry["index"] for entry in factorisation.ledger] == [0, 1, 0]
    assert factorisation.ledger[2]["square"] == {"i": 1, "z": [], "x": []}
    assert q_agreement(factorisation)


def test_one_step_of_the_identity() -> None:
    zero = zero_complex(Z2, 1)
    factorisation = one_step(identity_map(zero))
    assert factorisation.middle.ranks == (1, 1)
    assert len(factorisation.attached(1)) == 1
    assert verify_factorisation(factorisation, identity_map(zero))


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_factorisations(name: str) -> None:
    """Tests rho . lambda = f and the chain-map laws on the corpus."""
    x = CORPUS[name]
    for f in corpus_maps(x):
        factorisation = one_step(f, limit=4096)
        verdict = verify_factorisation(factorisation, f)
        assert verdict.ok, verdict.witness
        for dim in range(x.trunc + 1):
            expected = f.source.rank(dim) + len(enumerate_squares(f, dim))
            assert factorisation.middle.rank(dim) == expected
        validate_map(factorisation.lam)


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_q_agreement(name: str) -> None:
    """Tests that the generators attached in dimension 0 over 0 -> X match Q(X)_0."""
    x = CORPUS[name]
    factorisation = one_step(zero_map(zero_complex(x.field, x.trunc), x))
    verdict = q_agreement(factorisation)
    assert verdict.ok
    assert verdict.checked == x.field.p ** x.rank(0)


def test_broken_factorisation(z2_point) -> None:
    factorisation = one_step(identity_map(z2_point))
    verdict = verify_factorisation(factorisation, zero_map(z2_point, z2_point))
    assert not verdict
    assert verdict.witness["dim"] == 0


def test_factorisation_json(z2_point) -> None:
    data = one_step(identity_map(z2_point)).to_json()
    assert set(data) == {"P", "lambda", "rho", "ledger"}
    assert data["P"]["ranks"] == [3, 1]
    assert ChainComplex.from_json(data["P"]).ranks == (3, 1)
