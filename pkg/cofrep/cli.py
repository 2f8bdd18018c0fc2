"""The ``cofrep`` command line.

Every command prints one JSON report to stdout and returns 0 on success,
1 on a failed check or a domain error and 2 if an input cannot be read
or parsed. Diagnostics are logged to stderr.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Sequence, Tuple

from . import __version__
from .algebra import MalformedEntry, SizeGuardExceeded
from .complex import (
    ChainComplex,
    ChainMap,
    compose_maps,
    validate_complex,
    validate_map,
)
from .kleisli import (
    compose_hom,
    from_strict,
    hom_equal,
    hom_from_json,
    hom_to_json,
    identity_hom,
)
from .laws import corrupt_delta, run_laws
from .options import OPTIONS
from .qcomonad import Q
from .soa import one_step, q_agreement, verify_factorisation
from .utils import dump_report
from .wfs import LiftingSquare, liftings_from_json, solve_lifting

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILURE, EXIT_INPUT = 0, 1, 2

Report = Tuple[Dict[str, Any], int]


class InputError(Exception):
    """Raised when an input file cannot be read or parsed."""

    def __init__(
        self, path: Path, message: str, line: int | None = None, column: int | None = None
    ) -> None:
        self.path, self.line, self.column = path, line, column
        where = "" if line is None else f":{line}:{column}"
        super().__init__(f"{path}{where}: {message}")
        self.message = message

    def to_json(self) -> Dict[str, Any]:
        data = {
            "ok": False,
            "error": "ParseError",
            "path": str(self.path),
            "message": self.message,
        }
        if self.line is not None:
            data.update(line=self.line, column=self.column)
        return data


def read_json(path: Path) -> Any:
    """Reads a JSON file, reporting the line and column of syntax errors."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as error:
        raise InputError(path, error.strerror or str(error)) from error
    except UnicodeDecodeError as error:
        raise InputError(path, f"Not UTF-8 at byte {error.start}: {error.reason}") from error
    try:
        return json.loads(text)
    except json.JSONDecodeError as error:
        raise InputError(path, error.msg, error.lineno, error.colno) from error


def resolve(value: Any, base: Path) -> Any:
    """An inline object, or the JSON file it names relative to ``base``."""
    return read_json(base / value) if isinstance(value, str) else value


def _structured(path: Path, reader: Callable[[Any, Path], Any]) -> Any:
    data = read_json(path)
    try:
        return reader(data, Path(path).parent)
    except MalformedEntry as error:
        raise InputError(path, str(error)) from error
    except (KeyError, TypeError, IndexError, AttributeError) as error:
        raise InputError(path, f"Malformed fixture: {error!r}") from error


def _complex(data: Any, base: Path) -> ChainComplex:
    complex = ChainComplex.from_json(resolve(data, base))
    validate_complex(complex)
    return complex


def load_complex(path: Path) -> ChainComplex:
    return _structured(path, _complex)


def _map(data: Dict[str, Any], base: Path) -> ChainMap:
    source, target = _complex(data["source"], base), _complex(data["target"], base)
    chain_map = ChainMap.from_json(data, source, target)
    validate_map(chain_map)
    return chain_map


def load_map(path: Path) -> ChainMap:
    return _structured(path, _map)


def _error_report(error: Exception) -> Dict[str, Any]:
    report: Dict[str, Any] = {"ok": False, "error": type(error).__name__, "message": str(error)}
    if getattr(error, "dim", None) is not None:
        report["dim"] = error.dim
    if isinstance(error, SizeGuardExceeded):
        report.update(required=error.required, limit=error.limit)
    if getattr(error, "witness", None) is not None:
        report["witness"] = error.witness
    return report


def _upto(args: argparse.Namespace, space: Any) -> int:
    upto = OPTIONS.guards.max_dim if args.max_dim is None else args.max_dim
    return min(upto, space.trunc)


def cmd_validate(args: argparse.Namespace) -> Report:
    """Validates complex and chain-map files."""
    objects: List[Dict[str, Any]] = []
    for path in args.paths:
        data = read_json(path)
        kind = "map" if isinstance(data, dict) and "comps" in data else "complex"
        entry: Dict[str, Any] = {"path": str(path), "kind": kind, "ok": True}
        try:
            _structured(path, _map if kind == "map" else _complex)
        except ValueError as error:
            entry.update(_error_report(error))
        objects.append(entry)

    report: Dict[str, Any] = {"ok": all(entry["ok"] for entry in objects), "objects": objects}
    failures = [entry for entry in objects if not entry["ok"]]
    if failures:
        report.update(
            {key: failures[0][key] for key in ("error", "dim") if key in failures[0]}
        )
    return report, EXIT_OK if report["ok"] else EXIT_FAILURE


def cmd_q_materialize(args: argparse.Namespace) -> Report:
    """Materialises QX up to --max-dim."""
    complex = load_complex(args.path)
    materialization = Q(complex).materialize(_upto(args, complex), args.max_elems)
    return {"ok": True, **materialization.to_json()}, EXIT_OK


def cmd_q_laws(args: argparse.Namespace) -> Report:
    """Runs the comonad law suites on QX and the naturality of given maps."""
    complex = load_complex(args.path)
    maps = [load_map(path) for path in args.maps]
    delta = corrupt_delta(Q(complex)) if args.inject_fault == "delta" else None
    report = run_laws(
        complex,
        maps,
        upto=_upto(args, complex),
        limit=args.max_elems,
        seed=args.seed,
        delta=delta,
        strict=args.strict,
    )
    return report, EXIT_OK if report["ok"] else EXIT_FAILURE


def _aaf(data: Dict[str, Any], base: Path) -> Any:
    source, target = _complex(data["source"], base), _complex(data["target"], base)
    return liftings_from_json(data, source, target)


def cmd_lift(args: argparse.Namespace) -> Report:
    """Solves a lifting square against an AAF fixture."""
    aaf = _structured(args.aaf, _aaf)
    square = _structured(args.square, lambda data, _: LiftingSquare.from_json(data, aaf.f))
    filler = solve_lifting(aaf, square)
    return {"ok": True, "square": square.to_json(), "filler": filler.to_json()}, EXIT_OK


def _hom(data: Dict[str, Any], base: Path) -> Any:
    domain, codomain = _complex(data["domain"], base), _complex(data["codomain"], base)
    hom = hom_from_json(data, domain, codomain)
    strict = None
    if "strict" in data:
        strict = ChainMap.from_json(data["strict"], domain, codomain)
    return hom, strict


def cmd_compose_hom(args: argparse.Namespace) -> Report:
    """Composes two homomorphism fixtures and checks the category laws."""
    f, f_strict = _structured(args.f, _hom)
    g, g_strict = _structured(args.g, _hom)
    composite = compose_hom(g, f)
    options = dict(upto=args.max_dim, limit=args.max_elems, seed=args.seed, strict=args.strict)

    left_unit = compose_hom(identity_hom(g.codomain), composite)
    right_unit = compose_hom(composite, identity_hom(f.domain))
    checks = [
        hom_equal(left_unit, composite, name="left-unit", **options),
        hom_equal(right_unit, composite, name="right-unit", **options),
    ]
    if f_strict is not None and g_strict is not None:
        strict = from_strict(compose_maps(g_strict, f_strict))
        checks.append(hom_equal(strict, composite, name="strict-functoriality", **options))
    if args.check_assoc is not None:
        h, _ = _structured(args.check_assoc, _hom)
        left, right = compose_hom(h, composite), compose_hom(compose_hom(h, g), f)
        checks.append(hom_equal(left, right, name="associativity", **options))

    ok = all(checks)
    report = {
        "ok": ok,
        "composite": hom_to_json(composite, _upto(args, f.domain), args.max_elems),
        "checks": [check.to_json() for check in checks],
    }
    return report, EXIT_OK if ok else EXIT_FAILURE


def cmd_soa_step(args: argparse.Namespace) -> Report:
    """Runs one step of the small object argument on a chain map."""
    f = load_map(args.path)
    factorisation = one_step(f, args.max_elems)
    checks = [verify_factorisation(factorisation, f)]
    if all(rank == 0 for rank in f.source.ranks):
        checks.append(q_agreement(factorisation, args.max_elems))

    ok = all(checks)
    report = {
        "ok": ok,
        "factorisation": factorisation.to_json(),
        "checks": [check.to_json() for check in checks],
    }
    return report, EXIT_OK if ok else EXIT_FAILURE


def cmd_info(args: argparse.Namespace) -> Report:
    """Reports the version, the commands and the effective defaults."""
    report = {
        "ok": True,
        "version": __version__,
        "commands": sorted(COMMANDS),
        "defaults": {
            "max_dim": OPTIONS.guards.max_dim,
            "max_elems": OPTIONS.guards.max_elems,
            "seed": OPTIONS.sampling.seed,
            "samples": OPTIONS.sampling.samples,
            "pool": OPTIONS.sampling.pool,
        },
    }
    return report, EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace], Report]] = {
    "validate": cmd_validate,
    "q-materialize": cmd_q_materialize,
    "q-laws": cmd_q_laws,
    "lift": cmd_lift,
    "compose-hom": cmd_compose_hom,
    "soa-step": cmd_soa_step,
    "info": cmd_info,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--max-dim", type=int, default=None, help="Highest dimension to build.")
    common.add_argument(
        "--max-elems", type=int, default=None, help="Size guard for enumerations."
    )
    common.add_argument("--seed", type=int, default=None, help="Seed for sampled checks.")
    common.add_argument(
        "--strict", action="store_true", help="Fail on the size guard instead of sampling."
    )
    common.add_argument("-v", "--verbose", action="store_true", help="Log debug messages.")
    common.add_argument("--progress", action="store_true", help="Show progress bars on stderr.")
    common.add_argument(
        "--inject-fault", choices=["delta"], default=None, help=argparse.SUPPRESS
    )

    parser = argparse.ArgumentParser(
        prog="cofrep",
        description="Cofibrant replacement of chain complexes over Z/p.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    validate = commands.add_parser("validate", parents=[common], help=cmd_validate.__doc__)
    validate.add_argument("paths", nargs="+", type=Path)

    materialize = commands.add_parser(
        "q-materialize", parents=[common], help=cmd_q_materialize.__doc__
    )
    materialize.add_argument("path", type=Path)

    laws = commands.add_parser("q-laws", parents=[common], help=cmd_q_laws.__doc__)
    laws.add_argument("path", type=Path)
    laws.add_argument(
        "--map", dest="maps", action="append", type=Path, default=[],
        help="A chain map file for the naturality suite. Repeatable.",
    )

    lift = commands.add_parser("lift", parents=[common], help=cmd_lift.__doc__)
    lift.add_argument("aaf", type=Path)
    lift.add_argument("square", type=Path)

    compose = commands.add_parser("compose-hom", parents=[common], help=cmd_compose_hom.__doc__)
    compose.add_argument("f", type=Path)
    compose.add_argument("g", type=Path)
    compose.add_argument(
        "--check-assoc", type=Path, default=None, metavar="H_PATH",
        help="A third homomorphism for the associativity check.",
    )

    soa = commands.add_parser("soa-step", parents=[common], help=cmd_soa_step.__doc__)
    soa.add_argument("path", type=Path)

    commands.add_parser("info", parents=[common], help=cmd_info.__doc__)
    return parser


def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else OPTIONS.logging.level
    logging.basicConfig(stream=sys.stderr, format=OPTIONS.logging.format)
    logging.getLogger("cofrep").setLevel(level)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    enabled = OPTIONS.progress.enabled
    OPTIONS.progress.enabled = enabled or args.progress
    try:
        report, code = COMMANDS[args.command](args)
    except InputError as error:
        logger.error("%s", error)
        report, code = error.to_json(), EXIT_INPUT
    except ValueError as error:
        logger.error("%s: %s", type(error).__name__, error)
        report, code = _error_report(error), EXIT_FAILURE
    finally:
        OPTIONS.progress.enabled = enabled

    print(dump_report(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
