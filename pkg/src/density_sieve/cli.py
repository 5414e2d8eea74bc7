"""
CLI interface for density-sieve.

Subcommands: ``extract``, ``verify``, ``pseudo-union``, ``counterexample``,
``demo``. Every file written is canonical JSON embedding the resolved
configuration, so rerunning a command line reproduces it byte for byte.

Exit codes: 0 success, 2 invalid input, 3 budget or certification failure
(including a failed verification verdict).
"""

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, List, Optional, Sequence, Tuple

from .config import SieveConfig, load_config
from .counterexample import build_cantor_system, coverage_count, defeat, validate_system
from .cover_family import CoverFamily, DyadicFamily, family_from_spec
from .errors import SieveError, SpecError
from .extractor import BlockStructure, ExtractionCertificate, extract, select_subsequence
from .index_sets import (
    BUILTIN_SETS,
    IndexSet,
    density_at,
    from_json,
    powers,
    squares,
)
from .measure_sets import format_rational, measure, parse_rational
from .models import (
    CertificateRecord,
    FamilySpec,
    PseudoUnionRecord,
    parse_document,
    read_document,
    read_json,
    write_document,
)
from .pideal import almost_containment, pseudo_union
from .verify import (
    bc_bound_check,
    monte_carlo_points,
    render_report,
    report,
    residual_entry,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SPEC = 2
EXIT_FAILURE = 3


# ------------------------------------------------------------------
# Helpers
# ------------------------------------------------------------------


def _guarded(action: Callable[[], int]) -> int:
    """Run *action*, mapping library errors to exit codes."""
    try:
        return action()
    except (SpecError, FileNotFoundError, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_SPEC
    except SieveError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_FAILURE


def _family_spec(args: argparse.Namespace) -> FamilySpec:
    if args.family_file:
        return read_document(Path(args.family_file), FamilySpec)
    params = {}
    if args.family == "rotation":
        params = {"step": args.step, "length": args.length}
    elif args.family == "random":
        params = {"schedule": args.schedule}
    return parse_document(
        {"kind": args.family, "params": params, "seed": args.family_seed}, FamilySpec
    )


def _resolve_builtin(name: str) -> IndexSet:
    """``empty``, ``squares``, ``powers``, ``squares:J`` (offset J), ``powers:B`` (base B)."""
    kind, _, arg = name.partition(":")
    if not arg:
        if kind not in BUILTIN_SETS:
            raise SpecError(f"Unknown builtin set {name!r}; expected one of {sorted(BUILTIN_SETS)}")
        return BUILTIN_SETS[kind]()
    try:
        value = int(arg)
    except ValueError as exc:
        raise SpecError(f"Builtin parameter must be an integer in {name!r}") from exc
    if kind == "squares":
        return squares(offset=value)
    if kind == "powers":
        return powers(base=value)
    raise SpecError(f"Builtin {kind!r} takes no parameter")


def _load_index_set(path: str) -> IndexSet:
    return from_json(read_json(Path(path)))


def _write(path: str, doc: Any, verbose: bool) -> None:
    write_document(Path(path), doc)
    if verbose:
        print(f"Wrote {path}")


# ------------------------------------------------------------------
# Commands
# ------------------------------------------------------------------


def cmd_extract(args: argparse.Namespace, config: SieveConfig) -> int:
    spec = _family_spec(args)
    family = family_from_spec(spec)
    epsilon = parse_rational(args.epsilon)
    seed_note = "" if args.seed is not None else " (default)"
    seed = args.seed if args.seed is not None else config.default_seed

    cert = extract(family, epsilon, args.depth, seed, iter_cap=config.iter_cap)
    blocks = cert.blocks
    print("=== Extraction ===")
    print(f"Family   : {spec.kind}")
    print(f"Epsilon  : {format_rational(epsilon)}")
    print(f"Seed     : {seed}{seed_note}")
    print(f"Blocks   : {list(blocks.boundaries)}")
    print(f"Density  : {format_rational(density_at(cert.z, blocks.end))} at N_K={blocks.end}")
    print(f"mu(X_eps): {format_rational(measure(cert.x_eps))}")
    print("| k | N_k | minimal end | residual | target |")
    print("|---|-----|-------------|----------|--------|")
    for k, residual in enumerate(blocks.residuals, start=1):
        print(
            f"| {k} | {blocks.boundaries[k]} | {blocks.minimal_ends[k - 1]} | "
            f"{format_rational(residual)} | {format_rational(epsilon / 2**k)} |"
        )
    _write(args.output, cert.to_record(config), args.verbose)
    return EXIT_OK


def _certificate_and_family(
    args: argparse.Namespace, config: SieveConfig
) -> Tuple[CoverFamily, ExtractionCertificate]:
    if args.cert:
        record = read_document(Path(args.cert), CertificateRecord)
        cert = ExtractionCertificate.from_record(record)
        try:
            spec = parse_document(
                {k: record.family.get(k) for k in ("window", "kind", "params", "seed")},
                FamilySpec,
            )
        except SpecError as exc:
            raise SpecError(f"Certificate family cannot be rebuilt: {exc}") from exc
        family = family_from_spec(spec)
        problems = cert.violations(family)
        if problems:
            raise SpecError(f"Certificate disagrees with its family: {'; '.join(problems)}")
        return family, cert
    if args.epsilon is None or args.depth is None:
        raise SpecError("verify needs --cert or inline --epsilon and --depth")
    family = family_from_spec(_family_spec(args))
    seed = args.seed if args.seed is not None else config.default_seed
    cert = extract(family, parse_rational(args.epsilon), args.depth, seed, iter_cap=config.iter_cap)
    return family, cert


def cmd_verify(args: argparse.Namespace, config: SieveConfig) -> int:
    family, cert = _certificate_and_family(args, config)
    K = args.K if args.K is not None else cert.blocks.depth
    entries = []
    if args.residual:
        entries.append(residual_entry(family, cert, args.j, K, args.m))
    if args.seeds:
        blocks = cert.blocks
        if K < blocks.depth:
            blocks = BlockStructure(
                blocks.boundaries[: K + 1],
                blocks.residuals[:K],
                blocks.epsilon,
                blocks.minimal_ends[:K],
            )
        elif K > blocks.depth:
            raise SpecError(f"K={K} exceeds certificate depth {blocks.depth}")
        entries.append(
            bc_bound_check(
                family,
                cert.epsilon,
                K,
                args.j,
                range(args.seeds),
                workers=args.workers,
                config=config,
                blocks=blocks,
            )
        )
    if args.points:
        n_max = args.n_max if args.n_max is not None else cert.blocks.end
        stats = monte_carlo_points(family, cert.z, n_max, args.points, cert.seed)
        entries.append(stats.to_entry())
    if not entries:
        raise SpecError("Nothing to verify: pass --residual, --seeds and/or --points")

    inputs = {
        "family": cert.family,
        "epsilon": format_rational(cert.epsilon),
        "depth": cert.blocks.depth,
        "seed": cert.seed,
        "j": args.j,
        "K": K,
        "m": args.m,
    }
    doc = report(inputs, entries, config)
    print(render_report(doc), end="")
    _write(args.output, doc, args.verbose)
    return EXIT_OK if doc.passed else EXIT_FAILURE


def cmd_pseudo_union(args: argparse.Namespace, config: SieveConfig) -> int:
    parts: List[IndexSet] = [_load_index_set(p) for p in args.files]
    parts += [_resolve_builtin(name) for name in args.builtin or []]
    if not parts:
        raise SpecError("pseudo-union needs index-set files or --builtin names")

    result = pseudo_union(parts, check_factor=config.check_factor, iter_cap=config.iter_cap)
    containment = almost_containment(parts, result, iter_cap=config.iter_cap)
    print("=== Pseudo-union ===")
    print("| part | cutoff t_m | certified density | missed below cutoff |")
    print("|------|------------|-------------------|---------------------|")
    for entry, t in zip(containment, result.certified):
        print(f"| {entry.part} | {t} | <= 1/{entry.part + 1} | {len(entry.missed)} |")
    record = PseudoUnionRecord(
        result=result.to_json(),
        cutoffs=list(result.certified),
        containment=containment,
        config=config.to_dict(),
    )
    _write(args.output, record, args.verbose)
    return EXIT_OK


def cmd_counterexample(args: argparse.Namespace, config: SieveConfig) -> int:
    system = build_cantor_system(args.depth, config=config)
    if args.z:
        z = _load_index_set(args.z)
    elif args.builtin == "selection":
        seed = args.seed if args.seed is not None else config.default_seed
        zeros = tuple(Fraction(0) for _ in range(system.depth))
        z = select_subsequence(BlockStructure(system.boundaries, zeros, Fraction(1)), seed)
    else:
        z = _resolve_builtin(args.builtin)

    validation = validate_system(system)
    result = defeat(system, z, check_factor=config.check_factor, iter_cap=config.iter_cap)
    hits = coverage_count(system, result.point, z)
    print("=== Cantor counterexample ===")
    print(f"Boundaries : {list(system.boundaries[:4])}{' ...' if system.depth > 3 else ''}")
    print(f"Validation : {'PASS' if validation.passed else 'FAIL'}")
    print(f"n0         : {result.n0}")
    print(f"Start block: {result.start_block}")
    print(f"Chain      : {list(result.chain)}")
    print(f"Coverage   : {hits}")
    _write(args.output, result.to_record(system, z, validation, config), args.verbose)
    return EXIT_OK if validation.passed else EXIT_FAILURE


def cmd_demo(args: argparse.Namespace, config: SieveConfig) -> int:
    rows = []
    family = DyadicFamily()
    cert = extract(family, Fraction(1, 4), 3, 0, iter_cap=config.iter_cap)
    rows.append(("extract dyadic eps=1/4 K=3", str(list(cert.blocks.boundaries))))
    rows.append(
        ("residual j=1 m=1", residual_entry(family, cert, 1, 3, 1).metrics["residual"])
    )

    parts = [squares(), powers()]
    union = pseudo_union(parts, check_factor=config.check_factor, iter_cap=config.iter_cap)
    missed = sum(len(e.missed) for e in almost_containment(parts, union))
    rows.append(("pseudo-union squares+powers", f"cutoffs={list(union.certified)} missed={missed}"))

    system = build_cantor_system(min(4, config.cantor_depth_cap), config=config)
    z = squares()
    result = defeat(system, z, check_factor=config.check_factor, iter_cap=config.iter_cap)
    rows.append(
        (
            "cantor defeat of squares",
            f"n0={result.n0} chain={list(result.chain)} "
            f"coverage={coverage_count(system, result.point, z)}",
        )
    )

    print("| Step | Result |")
    print("|------|--------|")
    for step, outcome in rows:
        print(f"| {step} | {outcome} |")
    return EXIT_OK


# ------------------------------------------------------------------
# Parser
# ------------------------------------------------------------------


def _add_family_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--family",
        choices=["dyadic", "rotation", "random"],
        default="dyadic",
        help="Builtin cover family (default: dyadic)",
    )
    parser.add_argument("--family-file", default=None, help="FamilySpec JSON file")
    parser.add_argument("--step", default="1/3", help="Rotation step p/q (default: 1/3)")
    parser.add_argument("--length", default="1/2", help="Rotation length p/q (default: 1/2)")
    parser.add_argument(
        "--schedule", default="quarter-harmonic", help="Random family length schedule"
    )
    parser.add_argument("--family-seed", type=int, default=None, help="Random family seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="density-sieve", description="Density-zero subsequences of covering families"
    )
    parser.add_argument(
        "--config",
        dest="config_path",
        default=None,
        help="Path to .density-sieve.yml (default: auto-detect in working directory)",
    )
    subparsers = parser.add_subparsers(dest="command", help="Commands")

    extract_parser = subparsers.add_parser("extract", help="Build blocks and select Z")
    _add_family_args(extract_parser)
    extract_parser.add_argument("--epsilon", required=True, help="Residual budget p/q")
    extract_parser.add_argument("--depth", type=int, required=True, help="Number of blocks K")
    extract_parser.add_argument("--seed", type=int, default=None, help="Seed (default: 0)")
    extract_parser.add_argument(
        "-o", "--output", default="certificate.json", help="Certificate JSON path"
    )
    extract_parser.add_argument("-v", "--verbose", action="store_true", help="Verbose output")

    verify_parser = subparsers.add_parser("verify", help="Check coverage of an extraction")
    verify_parser.add_argument("--cert", default=None, help="Certificate JSON from extract")
    _add_family_args(verify_parser)
    verify_parser.add_argument("--epsilon", default=None, help="Inline extraction epsilon")
    verify_parser.add_argument("--depth", type=int, default=None, help="Inline extraction depth")
    verify_parser.add_argument("--seed", type=int, default=None, help="Inline extraction seed")
    verify_parser.add_argument("--residual", action="store_true", help="Exact truncated residual")
    verify_parser.add_argument("--j", type=int, default=1, help="First block (default: 1)")
    verify_parser.add_argument("--K", type=int, default=None, help="Last block (default: depth)")
    verify_parser.add_argument("--m", type=int, default=1, help="Multiplicity (default: 1)")
    verify_parser.add_argument("--seeds", type=int, default=0, help="Seed ensemble size")
    verify_parser.add_argument("--workers", type=int, default=1, help="Ensemble threads")
    verify_parser.add_argument("--points", type=int, default=0, help="Monte Carlo points")
    verify_parser.add_argument("--n-max", type=int, default=None, help="Monte Carlo index bound")
    verify_parser.add_argument("-o", "--output", default="report.json", help="Report JSON path")
    verify_parser.add_argument("-v", "--verbose", action="store_true", help="Verbose output")

    union_parser = subparsers.add_parser("pseudo-union", help="Certified pseudo-union")
    union_parser.add_argument("files", nargs="*", help="Index-set JSON files")
    union_parser.add_argument(
        "--builtin", action="append", help="Builtin set: empty, squares[:J], powers[:B]"
    )
    union_parser.add_argument(
        "-o", "--output", default="pseudo_union.json", help="Result JSON path"
    )
    union_parser.add_argument("-v", "--verbose", action="store_true", help="Verbose output")

    cantor_parser = subparsers.add_parser("counterexample", help="Cantor block system defeat")
    cantor_parser.add_argument("--depth", type=int, default=4, help="System depth (default: 4)")
    cantor_parser.add_argument("--z", default=None, help="Index-set JSON file to defeat")
    cantor_parser.add_argument(
        "--builtin",
        default="empty",
        help="Builtin z: empty, squares[:J], powers[:B], selection (default: empty)",
    )
    cantor_parser.add_argument("--seed", type=int, default=None, help="Seed for selection")
    cantor_parser.add_argument(
        "-o", "--output", default="defeat.json", help="Defeat report JSON path"
    )
    cantor_parser.add_argument("-v", "--verbose", action="store_true", help="Verbose output")

    demo_parser = subparsers.add_parser("demo", help="Small end-to-end run")
    demo_parser.add_argument("-v", "--verbose", action="store_true", help="Verbose output")
    return parser


COMMANDS = {
    "extract": cmd_extract,
    "verify": cmd_verify,
    "pseudo-union": cmd_pseudo_union,
    "counterexample": cmd_counterexample,
    "demo": cmd_demo,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point; returns the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_SPEC

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    def run() -> int:
        config = load_config(args.config_path)
        return COMMANDS[args.command](args, config)

    return _guarded(run)


if __name__ == "__main__":
    sys.exit(main())
