"""
Golden tables: parsing, audits, lookup and verification of computed records.
"""
import csv
import logging
from collections import Counter
from fractions import Fraction
from pathlib import Path
from typing import Iterable, List, Optional, Set, Tuple

from app.config import Settings, get_settings
from app.errors import CountMismatch, NotFound, ParseError
from app.models.pydantic_models import AreaRecord, CurveRecord, DiffEntry, DiffReport, GoldenRow, TableAudit
from app.services.curves import parse_signature, render
from app.services.quadfield import make_field, phi_of, psi_of

logger = logging.getLogger(__name__)

COLUMNS = ["degree", "d_F", "field_index", "D", "N", "ideal_label", "signature", "genus"]
EXPECTED_ROWS = 858
PRINTED_GENUS_HISTOGRAM = {0: 258, 1: 334, 2: 266}


# =============================================================================
# Parsing and audit
# =============================================================================

def parse_tables(path: Optional[Path] = None, strict: Optional[bool] = None) -> List[GoldenRow]:
    """Read the golden CSV; CountMismatch only in strict mode."""
    settings = get_settings()
    path = Path(path or settings.golden_path)
    strict = settings.strict_counts if strict is None else strict
    rows: List[GoldenRow] = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != COLUMNS:
            raise ParseError(f"unexpected header {header}", line=1)
        for line, fields in enumerate(reader, start=2):
            if not fields:
                continue
            rows.append(_parse_row(fields, line))
    audit = audit_tables(rows)
    if not audit.complete:
        message = f"Golden tables hold {audit.row_count} rows (expected {audit.expected_rows})"
        if strict:
            raise CountMismatch(message)
        logger.warning(message)
    if audit.histogram_discrepancy:
        logger.info(
            f"Genus histogram {audit.genus_histogram} differs from the printed {audit.printed_histogram}"
        )
    logger.info(f"Loaded {len(rows)} golden rows from {path}")
    return rows


def _parse_row(fields: List[str], line: int) -> GoldenRow:
    if len(fields) != len(COLUMNS):
        raise ParseError(f"expected {len(COLUMNS)} columns, found {len(fields)}", line=line)
    try:
        degree, d_f, field_index, big_d, big_n = (int(x) for x in fields[:5])
        genus = int(fields[7])
    except ValueError as e:
        raise ParseError(f"non-integer field: {e}", line=line)
    try:
        sig = parse_signature(fields[6])
    except ValueError as e:
        raise ParseError(str(e), line=line)
    if sig.genus != genus:
        raise ParseError(f"genus column {genus} disagrees with signature {fields[6]}", line=line)
    if genus > 2:
        raise ParseError(f"genus {genus} above 2", line=line)
    return GoldenRow(
        degree=degree,
        d_F=d_f,
        field_index=field_index,
        D=big_d,
        N=big_n,
        ideal_label=fields[5].strip(),
        signature=render(sig),
        genus=genus,
        line=line,
    )


def audit_tables(rows: List[GoldenRow]) -> TableAudit:
    return TableAudit(
        row_count=len(rows),
        expected_rows=EXPECTED_ROWS,
        genus_histogram=dict(sorted(Counter(r.genus for r in rows).items())),
        printed_histogram=PRINTED_GENUS_HISTOGRAM,
        degree_histogram=dict(sorted(Counter(r.degree for r in rows).items())),
    )


# =============================================================================
# Lookup and verification
# =============================================================================

def lookup(rows: Iterable[GoldenRow], d_F: int, D: int, N: int, label: Optional[str] = None) -> List[GoldenRow]:
    matches = [
        r for r in rows
        if r.d_F == d_F and r.D == D and r.N == N and (label is None or r.ideal_label == label)
    ]
    if not matches:
        raise NotFound(f"no golden row for d_F={d_F}, D={D}, N={N}" + (f", label={label}" if label else ""))
    return matches


Key = Tuple[int, int, int, str, str]


def _record_keys(records: Iterable[CurveRecord]) -> Set[Key]:
    return {(r.d_F, r.D, r.N, r.ideal_label, render(r.signature)) for r in records}


def _golden_keys(rows: Iterable[GoldenRow]) -> Set[Key]:
    return {(r.d_F, r.D, r.N, r.ideal_label, r.signature) for r in rows}


def verify(
    computed: List[CurveRecord],
    golden: List[GoldenRow],
    degree: int,
    d_F: Optional[int] = None,
    genus: int = 2,
) -> DiffReport:
    """Symmetric difference of (d_F, D, N, label, signature) tuples."""
    chosen_golden = [
        r for r in golden if r.degree == degree and r.genus <= genus and (d_F is None or r.d_F == d_F)
    ]
    chosen_computed = [
        r for r in computed if r.degree == degree and r.genus <= genus and (d_F is None or r.d_F == d_F)
    ]
    mine, theirs = _record_keys(chosen_computed), _golden_keys(chosen_golden)

    def entries(keys: Set[Key], side: str) -> List[DiffEntry]:
        return [
            DiffEntry(d_F=k[0], D=k[1], N=k[2], ideal_label=k[3], signature=k[4], side=side)
            for k in sorted(keys)
        ]

    report = DiffReport(
        degree=degree,
        d_F=d_F,
        computed_count=len(mine),
        golden_count=len(theirs),
        missing=entries(theirs - mine, "golden"),
        unexpected=entries(mine - theirs, "computed"),
    )
    logger.info(
        f"Verification degree {degree}: {len(report.missing)} missing, {len(report.unexpected)} unexpected"
    )
    return report


# =============================================================================
# Data audits
# =============================================================================

def _norm_areas(d_F: int, D: int, N: int) -> Set[Fraction]:
    """A_prim Phi Psi over all valid ideal pairs with the given norms."""
    F = make_field(d_F)
    areas = set()
    for disc in F.ideals_of_norm(D):
        if not disc.is_squarefree() or (len(disc.primes) + F.degree) % 2 == 0:
            continue
        for level in F.ideals_of_norm(N):
            if level.is_coprime(disc):
                areas.add(F.aprim * phi_of(disc) * psi_of(level))
    return areas


def rh_audit(rows: Iterable[GoldenRow]) -> List[GoldenRow]:
    """Degree <= 2 rows whose signature area matches no A_prim Phi Psi."""
    failures = []
    for row in rows:
        if row.degree > 2:
            continue
        sig_area = parse_signature(row.signature).orbifold_area()
        if sig_area not in _norm_areas(row.d_F, row.D, row.N):
            failures.append(row)
    if failures:
        logger.warning(f"Riemann-Hurwitz audit: {len(failures)} rows inconsistent")
    return failures


def _area_record(description: str, row: GoldenRow) -> AreaRecord:
    sig_area = parse_signature(row.signature).orbifold_area()
    recomputed = row.degree <= 2 and sig_area in _norm_areas(row.d_F, row.D, row.N)
    return AreaRecord(
        description=description,
        d_F=row.d_F,
        D=row.D,
        N=row.N,
        signature=row.signature,
        area=str(sig_area),
        recomputed=recomputed,
    )


def records_audit(rows: List[GoldenRow]) -> List[AreaRecord]:
    """Smallest genus-1 and genus-2 areas, then the largest area of each genus."""

    def area_of(row: GoldenRow) -> Fraction:
        return parse_signature(row.signature).orbifold_area()

    by_genus = {g: [r for r in rows if r.genus == g] for g in (0, 1, 2)}
    return [
        _area_record("smallest genus-1 area", min(by_genus[1], key=area_of)),
        _area_record("smallest genus-2 area", min(by_genus[2], key=area_of)),
        _area_record("largest genus-0 area", max(by_genus[0], key=area_of)),
        _area_record("largest genus-1 area", max(by_genus[1], key=area_of)),
        _area_record("largest genus-2 area", max(by_genus[2], key=area_of)),
    ]


def load_golden(settings: Optional[Settings] = None) -> List[GoldenRow]:
    settings = settings or get_settings()
    return parse_tables(settings.golden_path, settings.strict_counts)
