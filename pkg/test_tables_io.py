"""
Tests for golden table parsing, audits, lookup and verification.
"""
from fractions import Fraction

import pytest

from app.config import DATA_DIR
from app.errors import CountMismatch, NotFound, ParseError
from app.models.pydantic_models import CurveRecord
from app.services.curves import parse_signature
from app.services.tables_io import (
    EXPECTED_ROWS,
    PRINTED_GENUS_HISTOGRAM,
    audit_tables,
    lookup,
    parse_tables,
    records_audit,
    rh_audit,
    verify,
)

HEADER = "degree,d_F,field_index,D,N,ideal_label,signature,genus\n"


def test_bundle_audit(golden_rows):
    audit = audit_tables(golden_rows)
    assert audit.row_count == EXPECTED_ROWS == 858
    assert audit.complete
    assert audit.genus_histogram == {0: 257, 1: 335, 2: 266}
    assert audit.printed_histogram == PRINTED_GENUS_HISTOGRAM == {0: 258, 1: 334, 2: 266}
    assert audit.histogram_discrepancy
    assert audit.degree_histogram == {1: 52, 2: 199, 3: 212, 4: 228, 5: 104, 6: 42, 7: 21}


def test_row_from_level_36_over_q_sqrt13(golden_rows):
    (row,) = lookup(golden_rows, 13, 36, 1)
    assert row.signature == "(1;2^4)"
    assert len([r for r in golden_rows if r.d_F == 13]) == 11


def test_strict_mode_raises_on_shortfall(tmp_path):
    assert len(parse_tables(DATA_DIR / "golden_tables.csv", strict=True)) == 858
    path = tmp_path / "short.csv"
    path.write_text(HEADER + '1,1,0,6,1,,"(0;2^2,3^2)",0\n', encoding="utf-8")
    assert len(parse_tables(path, strict=False)) == 1
    with pytest.raises(CountMismatch):
        parse_tables(path, strict=True)


def test_parse_error_carries_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(HEADER + '1,1,0,6,1,,"(0;2^2,3^2)",0\n1,1,0,10,1,,"(0;3^4",0\n', encoding="utf-8")
    with pytest.raises(ParseError) as exc:
        parse_tables(path, strict=False)
    assert exc.value.line == 3


def test_genus_column_must_match(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(HEADER + '1,1,0,6,1,,"(0;2^2,3^2)",1\n', encoding="utf-8")
    with pytest.raises(ParseError):
        parse_tables(path, strict=False)


def test_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n", encoding="utf-8")
    with pytest.raises(ParseError) as exc:
        parse_tables(path, strict=False)
    assert exc.value.line == 1


def test_lookup(golden_rows):
    (row,) = lookup(golden_rows, 1, 6, 1)
    assert row.signature == "(0;2^2,3^2)"
    assert len(lookup(golden_rows, 8, 2, 49)) == 2
    assert lookup(golden_rows, 8, 2, 49, "square")[0].genus == 2
    with pytest.raises(NotFound):
        lookup(golden_rows, 1, 6, 2)


def _record(D, N, text, label=""):
    return CurveRecord(degree=1, d_F=1, D=D, N=N, ideal_label=label, signature=parse_signature(text))


def test_verify_reports_both_sides(golden_rows):
    computed = [_record(6, 1, "(0;2^2,3^2)"), _record(10, 1, "(0;3^2)")]
    report = verify(computed, golden_rows, degree=1)
    assert not report.passed
    assert report.golden_count == 52
    assert [(e.D, e.signature) for e in report.unexpected] == [(10, "(0;3^2)")]
    assert (10, "(0;3^4)") in [(e.D, e.signature) for e in report.missing]
    assert all(e.side == "golden" for e in report.missing)


def test_verify_passes_on_identical_rows(golden_rows):
    rows = [r for r in golden_rows if r.degree == 1]
    computed = [_record(r.D, r.N, r.signature) for r in rows]
    assert verify(computed, golden_rows, degree=1).passed


def test_records_audit(golden_rows):
    genus1, genus2, genus0, largest1, largest2 = records_audit(golden_rows)
    assert (genus1.d_F, genus1.D, genus1.N, Fraction(genus1.area)) == (13, 4, 1, Fraction(1, 2))
    assert (genus2.d_F, genus2.D, genus2.N, Fraction(genus2.area)) == (1, 26, 1, Fraction(2))
    assert (genus0.d_F, genus0.D, genus0.N, Fraction(genus0.area)) == (7168, 7, 1, Fraction(17, 2))
    assert genus1.recomputed and genus2.recomputed
    assert not genus0.recomputed
    assert (largest1.d_F, largest1.D, largest1.N, Fraction(largest1.area)) == (30056, 2, 1, Fraction(38, 3))
    assert (largest2.d_F, largest2.D, largest2.N, Fraction(largest2.area)) == (2000, 4, 25, Fraction(15))
    assert not largest1.recomputed and not largest2.recomputed


def test_rh_audit_over_rationals(golden_rows):
    rows = [r for r in golden_rows if r.degree == 1 or r.d_F in (5, 8, 13)]
    assert rh_audit(rows) == []
