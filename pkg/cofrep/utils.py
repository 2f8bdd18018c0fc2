import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List

import numpy as np
from tqdm import tqdm

from .options import OPTIONS

logger = logging.getLogger(__name__)


@dataclass
class Verdict:
    """The outcome of an enumerating check.

    Parameters
    ----------
    name : str
        What was checked.
    ok : bool
        Whether every checked case passed.
    checked : int
        The number of checked cases.
    dims : list of int
        The dimensions that were checked.
    sampled : bool
        Whether (part of) the verdict rests on a seeded sample.
    seed : int, optional
        The seed of the sample.
    witness : dict, optional
        The first failing case.
    details : dict
        Suite-specific counts, reported when non-empty.
    """

    name: str
    ok: bool = True
    checked: int = 0
    dims: List[int] = field(default_factory=list)
    sampled: bool = False
    seed: int | None = None
    witness: Dict[str, Any] | None = None
    details: Dict[str, Any] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok

    def record(self, dim: int, count: int = 1) -> None:
        """Counts checked cases in a dimension."""
        self.checked += count
        if dim not in self.dims:
            self.dims.append(dim)

    def mark_sampled(self, seed: int) -> None:
        self.sampled, self.seed = True, seed

    def fail(self, witness: Dict[str, Any]) -> "Verdict":
        """Records the first failing case."""
        if self.ok:
            self.ok, self.witness = False, witness
            logger.info("Check '%s' failed: %s", self.name, witness)
        return self

    def to_json(self) -> Dict[str, Any]:
        data = {
            "name": self.name,
            "ok": self.ok,
            "checked": self.checked,
            "dims": sorted(self.dims),
            "sampled": self.sampled,
        }
        if self.sampled:
            data["seed"] = self.seed
        if self.witness is not None:
            data["witness"] = self.witness
        if self.details:
            data["details"] = self.details
        return data


def make_rng(seed: int | None = None) -> np.random.Generator:
    """A numpy generator for the given (or configured) seed."""
    seed = OPTIONS.sampling.seed if seed is None else seed
    return np.random.default_rng(seed)


def progress(iterable: Iterable, description: str, total: int | None = None) -> Iterable:
    """Wraps an iterable into a stderr progress bar if enabled."""
    return tqdm(
        iterable,
        desc=description,
        total=total,
        disable=not OPTIONS.progress.enabled,
        leave=False,
    )


def canonical_json(data: Any) -> str:
    """A canonical string form used for keys and sorting."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def dump_report(report: Dict[str, Any]) -> str:
    """The byte-stable textual form of a report."""
    return json.dumps(report, sort_keys=True, indent=2)
