import json

import numpy as np

from cofrep.options import DEFAULTS, OPTIONS, reset_options, to_namespace
from cofrep.utils import Verdict, canonical_json, dump_report, make_rng, progress


def test_defaults() -> None:
    """Tests the packaged defaults and that descriptions are dropped."""
    assert OPTIONS.guards.max_dim == 2
    assert OPTIONS.guards.max_elems == 4096
    assert OPTIONS.sampling.seed == 0
    assert not OPTIONS.progress.enabled
    assert not hasattr(DEFAULTS.guards, "description")


def test_to_namespace() -> None:
    namespace = to_namespace({"a": {"b": 1, "description": "x"}, "c": 2})
    assert namespace.a.b == 1 and namespace.c == 2
    assert not hasattr(namespace.a, "description")


def test_reset_options() -> None:
    OPTIONS.guards.max_elems = 3
    OPTIONS.sampling.seed = 11
    reset_options()
    assert OPTIONS.guards.max_elems == DEFAULTS.guards.max_elems
    assert OPTIONS.sampling.seed == DEFAULTS.sampling.seed


def test_verdict() -> None:
    verdict = Verdict("check")
    verdict.record(1, 3)
    verdict.record(0)
    verdict.record(1)
    assert verdict and verdict.checked == 5
    assert verdict.to_json() == {
        "name": "check",
        "ok": True,
        "checked": 5,
        "dims": [0, 1],
        "sampled": False,
    }

    verdict.mark_sampled(7)
    assert verdict.fail({"dim": 1}) is verdict
    verdict.fail({"dim": 2})
    data = verdict.to_json()
    assert not verdict
    assert data["seed"] == 7
    assert data["witness"] == {"dim": 1}


def test_make_rng() -> None:
    first = make_rng(5).integers(0, 100, size=4)
    assert np.array_equal(first, make_rng(5).integers(0, 100, size=4))
    OPTIONS.sampling.seed = 5
    assert np.array_equal(first, make_rng().integers(0, 100, size=4))


def test_progress() -> None:
    assert list(progress(range(3), "items")) == [0, 1, 2]
    OPTIONS.progress.enabled = True
    assert list(progress(iter("ab"), "letters", total=2)) == ["a", "b"]


def test_reports() -> None:
    report = {"b": [1, {"d": 2, "c": 3}], "a": True}
    assert canonical_json(report) == '{"a":true,"b":[1,{"c":3,"d":2}]}'
    assert dump_report(report) == dump_report(json.loads(dump_report(report)))
    assert dump_report(report).splitlines()[1] == '  "a": true,'
