"""
Tests for bounds, discriminant pruning, level exploration and labelling.
"""
from fractions import Fraction

import pytest

from app.errors import AmbiguousIdeal, NotFound, NotSquarefree, ParityViolation
from app.models.pydantic_models import OutputFormatEnum
from app.services.arith import factor, is_squarefree
from app.services.curves import area, render, signature, validate
from app.services.emit import render_rows
from app.services.enumeration import (
    _prunes,
    area_cap,
    bound_table,
    candidate_discriminants,
    curves_with_norms,
    enumerate_all,
    enumerate_fields,
    enumerate_levels,
    evaluate_discriminants,
    field_scan,
    field_scan_report,
    naive_enumerate,
    resolve_curve,
    search_bound,
    sz_bound,
)
from app.services.quadfield import Ideal, PrimeIdeal, make_field, phi_of, psi_of
from app.services.tables_io import verify


def _ideal(n):
    return Ideal.from_mapping({PrimeIdeal(p): e for p, e in factor(n).factors})


# =============================================================================
# Bounds
# =============================================================================

def test_search_bounds(rationals, q5):
    assert area_cap(2) == 64
    assert search_bound(rationals, 2) == 384
    assert search_bound(q5, 0) == 640


def test_sz_bound_values():
    assert sz_bound(2, 2) == pytest.approx(29.216, abs=2e-3)
    rows = bound_table(2)
    assert [r.degree for r in rows] == list(range(1, 11))
    assert all(a.bound > b.bound for a, b in zip(rows, rows[1:]))


def test_bound_table_values():
    expected = [29.216, 21.470, 18.405, 16.780, 15.778, 15.098, 14.608, 14.238, 13.949]
    assert [row.bound for row in bound_table(2, range(2, 11))] == pytest.approx(expected, abs=1e-3)


def test_field_scan_flags_printed_maximum():
    fields = field_scan(2)
    assert fields[0] == 5
    assert 849 in fields and 853 in fields
    report = field_scan_report(2)
    assert report.maximum == 853
    assert report.discrepancy
    assert report.count == len(fields)


# =============================================================================
# Discriminants
# =============================================================================

def test_pruning_inequality():
    # A(d) = 1/3, g(d) = 0, two new primes
    assert _prunes(Fraction(1, 3), 0, 30, 2, 0)
    assert not _prunes(Fraction(1, 3), 0, 12, 2, 0)
    assert not _prunes(Fraction(1, 3), 0, 1, 2, 2)


def test_genus_zero_discriminants_over_q(rationals, settings):
    evaluated = evaluate_discriminants(rationals, 0, settings)
    genus_zero = sorted(d.norm for d, g in evaluated.items() if g == 0)
    assert genus_zero == [1, 6, 10, 22]


def test_candidate_discriminants_have_even_prime_count(rationals, settings):
    candidates = candidate_discriminants(rationals, 0, settings)
    assert {1, 6, 10, 22} <= {d.norm for d in candidates}
    assert all(len(d.primes) % 2 == 0 for d in candidates)
    assert all(phi_of(d) < search_bound(rationals, 0) for d in candidates)


def test_refinement_keeps_genus_zero(rationals, settings):
    evaluated = evaluate_discriminants(rationals, 0, settings, refine=True)
    assert sorted(d.norm for d, g in evaluated.items() if g == 0) == [1, 6, 10, 22]


# =============================================================================
# Levels and labels
# =============================================================================

def test_levels_of_discriminant_six(rationals, settings):
    six = Ideal.of_primes([PrimeIdeal(2), PrimeIdeal(3)])
    records = enumerate_levels(rationals, six, 2, settings)
    assert sorted(r.N for r in records) == [1, 5, 7, 13]
    assert {r.N: render(r.signature) for r in records}[13] == "(1;2^4,3^4)"


def test_pruned_search_matches_naive(rationals, settings):
    fast = enumerate_all(rationals, 0, settings)
    slow = naive_enumerate(rationals, 0, settings)
    assert fast == slow
    assert {(r.D, r.N) for r in fast} >= {(1, 1), (6, 1), (10, 1), (22, 1)}


def test_labels_for_ambiguous_level(q8, settings):
    pairs = curves_with_norms(q8, 2, 49, settings)
    labelled = {record.ideal_label: render(record.signature) for record, _ in pairs}
    assert labelled == {"rational": "(1;3^8)", "square": "(2;3^4)"}
    with pytest.raises(AmbiguousIdeal) as exc:
        resolve_curve(q8, 2, 49, settings=settings)
    assert sorted(exc.value.labels) == ["rational", "square"]
    record, datum = resolve_curve(q8, 2, 49, "square", settings)
    assert record.genus == 2
    assert not q8.is_galois_stable(datum.level)


def test_resolve_reports_input_errors(rationals, q5, settings):
    with pytest.raises(NotSquarefree):
        resolve_curve(rationals, 4, 1, settings=settings)
    with pytest.raises(ParityViolation):
        resolve_curve(rationals, 2, 1, settings=settings)
    with pytest.raises(NotFound):
        resolve_curve(q5, 2, 1, settings=settings)
    with pytest.raises(NotFound):
        resolve_curve(rationals, 6, 1, "square", settings)


# =============================================================================
# Against the golden tables
# =============================================================================

@pytest.mark.slow
def test_rationals_reproduce_golden_rows(rationals, settings, golden_rows):
    computed = enumerate_all(rationals, 2, settings)
    report = verify(computed, golden_rows, degree=1)
    assert report.passed, (report.missing, report.unexpected)
    assert report.golden_count == 52


@pytest.mark.slow
@pytest.mark.parametrize("d", [5, 8, 12, 13])
def test_quadratic_fields_reproduce_golden_rows(d, settings, golden_rows):
    computed = enumerate_fields([d], 2, settings)
    report = verify(computed, golden_rows, degree=2, d_F=d)
    assert report.passed, (report.missing, report.unexpected)


@pytest.mark.slow
def test_refined_search_agrees(rationals, settings):
    assert enumerate_all(rationals, 2, settings, refine=True) == enumerate_all(rationals, 2, settings)


@pytest.mark.slow
@pytest.mark.parametrize("d", [1, 5, 8, 12, 13, 17, 21, 24])
def test_pruned_search_matches_naive_at_genus_two(d, settings):
    F = make_field(d)
    assert enumerate_all(F, 2, settings) == naive_enumerate(F, 2, settings)


# =============================================================================
# Property suites over Q
# =============================================================================

GENUS_AT_MOST_TWO = set(range(1, 30)) | {31, 32, 36, 37, 49, 50}


def test_modular_curves_of_genus_at_most_two(rationals, settings):
    small = set()
    for n in range(1, 51):
        datum = validate(rationals, Ideal(), _ideal(n))
        if signature(datum, settings).genus <= 2:
            small.add(n)
    assert small == GENUS_AT_MOST_TWO


@pytest.mark.slow
def test_riemann_hurwitz_below_search_bound(rationals, settings):
    bound = search_bound(rationals, 2)
    checked = 0
    for big_d in range(1, int(bound)):
        if not is_squarefree(big_d) or len(factor(big_d).factors) % 2 == 1:
            continue
        discriminant = _ideal(big_d)
        for big_n in range(1, int(bound)):
            level = _ideal(big_n)
            if not level.is_coprime(discriminant) or phi_of(discriminant) * psi_of(level) >= bound:
                continue
            datum = validate(rationals, discriminant, level)
            sig = signature(datum, settings)
            assert sig.genus >= 0
            assert sig.orbifold_area() == area(datum)
            checked += 1
    assert checked > 250


@pytest.mark.slow
def test_all_quadratic_fields_reproduce_golden_rows(settings, golden_rows):
    computed = enumerate_fields(field_scan(2), 2, settings)
    report = verify(computed, golden_rows, degree=2)
    assert report.passed, (report.missing, report.unexpected)
    assert report.golden_count == 199


@pytest.mark.slow
def test_output_is_identical_across_worker_counts(settings):
    fields = [5, 8, 12, 13, 17]
    serial = render_rows(enumerate_fields(fields, 2, settings), OutputFormatEnum.CSV)
    parallel = render_rows(
        enumerate_fields(fields, 2, settings.with_overrides(workers=3)), OutputFormatEnum.CSV
    )
    assert serial == parallel
    assert serial == render_rows(enumerate_fields(list(reversed(fields)), 2, settings), OutputFormatEnum.CSV)
