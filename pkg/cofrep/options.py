from pathlib import Path
from types import SimpleNamespace
from typing import Any, Dict

import toml


def to_namespace(dictionary: Dict[str, Any]) -> SimpleNamespace:
    """Converts a (nested) dictionary into a namespace, dropping descriptions."""
    return SimpleNamespace(
        **{
            key: to_namespace(value) if isinstance(value, dict) else value
            for key, value in dictionary.items()
            if key != "description"
        }
    )


def load_toml_to_namespace(toml_file: Path) -> SimpleNamespace:
    """Loads a toml file into a namespace."""
    with open(toml_file, "r") as file:
        data = toml.load(file)["DEFAULTS"]

    return to_namespace(data)


DEFAULTS = load_toml_to_namespace(Path(__file__).parent / "config" / "defaults.toml")

# NOTE: Guards
guards = SimpleNamespace(
    max_dim=DEFAULTS.guards.max_dim, max_elems=DEFAULTS.guards.max_elems
)

# NOTE: Sampling
sampling = SimpleNamespace(
    seed=DEFAULTS.sampling.seed,
    samples=DEFAULTS.sampling.samples,
    pool=DEFAULTS.sampling.pool,
)

# NOTE: Diagnostics
log = SimpleNamespace(
    level=DEFAULTS.logging.level, format=DEFAULTS.logging.format
)
progress = SimpleNamespace(enabled=DEFAULTS.progress.enabled)

# NOTE: All options
OPTIONS = SimpleNamespace(
    guards=guards, sampling=sampling, logging=log, progress=progress
)


def reset_options() -> None:
    """Resets the options to the packaged defaults."""
    OPTIONS.guards.max_dim = DEFAULTS.guards.max_dim
    OPTIONS.guards.max_elems = DEFAULTS.guards.max_elems
    OPTIONS.sampling.seed = DEFAULTS.sampling.seed
    OPTIONS.sampling.samples = DEFAULTS.sampling.samples
    OPTIONS.sampling.pool = DEFAULTS.sampling.pool
    OPTIONS.logging.level = DEFAULTS.logging.level
    OPTIONS.progress.enabled = DEFAULTS.progress.enabled
