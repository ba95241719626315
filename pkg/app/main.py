"""
Command-line entry point for the Shimura signature engine.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from app import __version__
from app.config import Settings, get_settings
from app.errors import AmbiguousIdeal, InputError, ShimuraError
from app.models.pydantic_models import OutputFormatEnum, RunConfig, TableAudit
from app.services.cmorders import admissible_q
from app.services.curves import audit, render
from app.services.emit import write_rows
from app.services.enumeration import (
    bound_table,
    enumerate_fields,
    field_scan_report,
    naive_enumerate,
    resolve_curve,
)
from app.services.quadfield import check_aprim, make_field
from app.services.tables_io import audit_tables, load_golden, records_audit, rh_audit, verify

logger = logging.getLogger(__name__)


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _run_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command,
        genus=getattr(args, "genus", 2),
        degree=getattr(args, "degree", 2),
        d_F=getattr(args, "dF", None),
        all_fields=getattr(args, "all_fields", False),
        output_format=getattr(args, "format", OutputFormatEnum.TEXT.value),
        refine=getattr(args, "refine", False),
    )


def _settings(args: argparse.Namespace) -> Settings:
    return get_settings().with_overrides(
        elliptic_constant=args.elliptic_constant,
        override_path=Path(args.override_file) if args.override_file else None,
        workers=args.workers,
        golden_path=Path(args.golden) if args.golden else None,
        strict_counts=True if args.strict else None,
    )


def _output_path(args: argparse.Namespace, settings: Settings) -> Optional[Path]:
    if not args.output:
        return None
    path = Path(args.output)
    return path if path.is_absolute() else settings.output_dir / path


def _field_list(args: argparse.Namespace, config: RunConfig, settings: Settings) -> List[int]:
    if config.degree == 1:
        return [1]
    if config.d_F is not None:
        return [config.d_F]
    if config.all_fields:
        return field_scan_report(config.genus).discriminants
    if args.command == "verify":
        return sorted({r.d_F for r in load_golden(settings) if r.degree == 2})
    raise InputError("degree 2 needs --dF or --all-fields")


# =============================================================================
# Commands
# =============================================================================

def _histogram_note(table: TableAudit) -> None:
    if table.histogram_discrepancy:
        print(
            f"note: genus histogram {table.genus_histogram} differs from the printed "
            f"{table.printed_histogram}"
        )


def cmd_signature(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    F = make_field(args.dF)
    record, datum = resolve_curve(F, args.D, args.N, args.label, settings)
    if args.audit:
        print(audit(datum, settings).model_dump_json(indent=2))
        return 0
    if config.output_format == OutputFormatEnum.JSON:
        print(record.model_dump_json(indent=2))
        return 0
    label = f" [{record.ideal_label}]" if record.ideal_label else ""
    print(
        f"d_F={F.d} D={record.D} N={record.N}{label}  {render(record.signature)}  "
        f"area={record.signature.area}  ({record.discriminant}, {record.level})"
    )
    counts = record.signature.elliptic_counts
    line = " ".join(f"e_{q}={counts.get(q, 0)}" for q in admissible_q(F))
    if datum.is_modular:
        line += f" e_inf={record.signature.cusps}"
    print(f"  {line}")
    return 0


def cmd_enumerate(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    fields = _field_list(args, config, settings)
    if args.naive:
        records = [r for d in fields for r in naive_enumerate(make_field(d), config.genus, settings)]
    else:
        records = enumerate_fields(fields, config.genus, settings, config.refine)
    text = write_rows(records, config.output_format, _output_path(args, settings))
    if not args.output:
        sys.stdout.write(text)
    logger.info(f"{len(records)} curves of genus <= {config.genus} over {len(fields)} fields")
    return 0


def cmd_verify(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    golden = load_golden(settings)
    fields = _field_list(args, config, settings)
    computed = enumerate_fields(fields, config.genus, settings, config.refine)
    exit_code = 0
    for d in fields:
        report = verify(computed, golden, config.degree, None if config.degree == 1 else d, config.genus)
        status = "ok" if report.passed else "DIFF"
        print(f"d_F={d}: computed {report.computed_count}, golden {report.golden_count}  {status}")
        for entry in report.missing:
            print(f"  missing    D={entry.D} N={entry.N} {entry.ideal_label} {entry.signature}")
        for entry in report.unexpected:
            print(f"  unexpected D={entry.D} N={entry.N} {entry.ideal_label} {entry.signature}")
        if args.report:
            path = Path(args.report)
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "a", encoding="utf-8") as f:
                f.write(report.model_dump_json() + "\n")
        if not report.passed:
            exit_code = 1
    _histogram_note(audit_tables(golden))
    return exit_code


def cmd_scan_fields(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    report = field_scan_report(config.genus)
    print(
        f"genus <= {report.genus}: {report.count} fields, d_F in [{report.minimum}, {report.maximum}]"
    )
    if args.show_bound:
        print(f"root discriminant bound {report.bound:.6f}, d_F < {report.bound ** 2:.3f}")
    if report.genus == 2 and report.discrepancy:
        print(
            f"note: printed maximum {report.printed_maximum} and count {report.printed_count} "
            f"differ from the computed scan"
        )
    if args.list:
        print(" ".join(str(d) for d in report.discriminants))
    return 0


def cmd_bounds(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    for row in bound_table(config.genus, range(1, args.max_degree + 1)):
        print(f"n={row.degree:2d}  g<={row.genus}  rd_F < {row.bound:.4f}")
    return 0


def cmd_records(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    rows = load_golden(settings)
    table = audit_tables(rows)
    print(
        f"rows {table.row_count}/{table.expected_rows}, genus {table.genus_histogram} "
        f"(printed {table.printed_histogram}), degree {table.degree_histogram}"
    )
    _histogram_note(table)
    for record in records_audit(rows):
        flag = "recomputed" if record.recomputed else "from data"
        print(
            f"{record.description}: {record.area} at d_F={record.d_F}, D={record.D}, N={record.N} "
            f"{record.signature} ({flag})"
        )
    failures = rh_audit(rows)
    print(f"Riemann-Hurwitz audit: {len(failures)} inconsistent rows")
    for row in failures:
        print(f"  line {row.line}: d_F={row.d_F} D={row.D} N={row.N} {row.signature}")
    return 1 if failures else 0


def cmd_emit(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    rows = [
        r for r in load_golden(settings)
        if r.genus <= config.genus
        and (args.table_degree is None or r.degree == args.table_degree)
        and (config.d_F is None or r.d_F == config.d_F)
    ]
    text = write_rows(rows, config.output_format, _output_path(args, settings))
    if not args.output:
        sys.stdout.write(text)
    return 0


def cmd_zeta(args: argparse.Namespace, config: RunConfig, settings: Settings) -> int:
    for d in args.fields or [1]:
        exact, numeric = check_aprim(d, settings.zeta_precision)
        print(f"d_F={d}: A_prim = {exact} = {numeric:.15f}  |delta| = {abs(float(exact) - numeric):.2e}")
    return 0


# =============================================================================
# Parser
# =============================================================================

def create_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shimura", description="Exact Shimura curve signatures")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    ap.add_argument("--elliptic-constant", choices=["class_number", "half_class_number"], default=None)
    ap.add_argument("--override-file", default=None, help="YAML file of unit-index overrides")
    ap.add_argument("--golden", default=None, help="golden tables CSV")
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--strict", action="store_true", help="fail on golden row count mismatches")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("signature", help="signature of one curve")
    s.add_argument("--dF", type=int, default=1)
    s.add_argument("--D", type=int, required=True)
    s.add_argument("--N", type=int, default=1)
    s.add_argument("--label", default=None, help="ideal label when (d_F, D, N) is ambiguous")
    s.add_argument("--audit", action="store_true", help="print every elliptic term")
    s.add_argument("--format", choices=["text", "json"], default="text")
    s.set_defaults(func=cmd_signature)

    e = sub.add_parser("enumerate", help="all curves of genus <= g")
    _add_field_options(e)
    e.add_argument("--format", choices=[f.value for f in OutputFormatEnum], default="text")
    e.add_argument("--output", default=None)
    e.add_argument("--refine", action="store_true", help="tighter cap on the last discriminant prime")
    e.add_argument("--naive", action="store_true", help="exhaustive search without pruning")
    e.set_defaults(func=cmd_enumerate)

    v = sub.add_parser("verify", help="compare enumeration with the golden tables")
    _add_field_options(v)
    v.add_argument("--refine", action="store_true")
    v.add_argument("--report", default=None, help="append JSON diff reports to this file")
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("scan-fields", help="real quadratic fields that can carry genus <= g")
    f.add_argument("--genus", type=int, default=2)
    f.add_argument("--show-bound", action="store_true")
    f.add_argument("--list", action="store_true")
    f.set_defaults(func=cmd_scan_fields)

    b = sub.add_parser("bounds", help="root discriminant bounds by degree")
    b.add_argument("--genus", type=int, default=2)
    b.add_argument("--max-degree", type=int, default=10)
    b.set_defaults(func=cmd_bounds)

    r = sub.add_parser("records", help="audits of the golden tables")
    r.set_defaults(func=cmd_records)

    m = sub.add_parser("emit", help="render the golden tables")
    m.add_argument("--degree", dest="table_degree", type=int, default=None)
    m.add_argument("--dF", type=int, default=None)
    m.add_argument("--genus", type=int, default=2)
    m.add_argument("--format", choices=[f.value for f in OutputFormatEnum], default="text")
    m.add_argument("--output", default=None)
    m.set_defaults(func=cmd_emit)

    z = sub.add_parser("zeta", help="cross-check A_prim against the analytic value")
    z.add_argument("--dF", dest="fields", type=int, nargs="*", default=None)
    z.set_defaults(func=cmd_zeta)
    return ap


def _add_field_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--degree", type=int, choices=[1, 2], default=2)
    parser.add_argument("--dF", type=int, default=None)
    parser.add_argument("--all-fields", action="store_true")
    parser.add_argument("--genus", type=int, default=2)


def main(argv: Optional[List[str]] = None) -> int:
    args = create_parser().parse_args(argv)
    base = get_settings()
    configure_logging("DEBUG" if base.debug else args.log_level or base.log_level)
    try:
        config = _run_config(args)
        settings = _settings(args)
        logger.debug(f"Run config: {config.model_dump()}")
        return args.func(args, config, settings)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return InputError.exit_code
    except AmbiguousIdeal as e:
        print(f"error: {e.message}; use --label with one of {', '.join(e.labels)}", file=sys.stderr)
        return e.exit_code
    except ShimuraError as e:
        logger.debug("Failure detail", exc_info=True)
        print(f"error: {e.message}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
