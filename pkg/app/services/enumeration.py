"""
Search for all Shimura curves of bounded genus over Q and real quadratic fields.

Discriminants are generated as squarefree products with Phi(D) < M(F, g),
checked layer by layer in the number of prime factors, and pruned with the
Riemann-Hurwitz estimate e_q(d a) <= 2^tau(a) e_q(d). Levels are explored
as multisets of primes, cutting a branch once the genus exceeds the target.
"""
import itertools
import logging
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Tuple

from app.config import Settings, get_settings
from app.errors import AmbiguousIdeal, InputError, NotFound
from app.models.pydantic_models import BoundRow, CurveRecord, FieldScanReport, IdealLabelEnum, Signature
from app.services.arith import is_fundamental
from app.services.curves import ShimuraDatum, area, signature, validate
from app.services.quadfield import BaseField, Ideal, PrimeIdeal, make_field, phi_of, psi_of

logger = logging.getLogger(__name__)

PRINTED_SCAN_MAXIMUM = 849
PRINTED_SCAN_COUNT = 257


# =============================================================================
# Bounds
# =============================================================================

def area_cap(g: int) -> Fraction:
    """Area bound 64(g+1)/3 for congruence groups of genus g."""
    return Fraction(64 * (g + 1), 3)


def search_bound(F: BaseField, g: int) -> Fraction:
    """M(F, g): every curve of genus <= g has Phi(D) Psi(N) < M."""
    return area_cap(g) / F.aprim


def sz_bound(n: int, g: int) -> float:
    """Upper bound on the root discriminant of F carrying a curve of genus <= g."""
    return (2 * math.pi) ** (4 / 3) * (16 * (g + 1) / 3) ** (2 / (3 * n))


def bound_table(g: int = 2, degrees: Iterable[int] = range(1, 11)) -> List[BoundRow]:
    return [BoundRow(degree=n, genus=g, bound=sz_bound(n, g)) for n in degrees]


def field_scan(g: int) -> List[int]:
    """Fundamental discriminants d of real quadratic fields with sqrt(d) < sz_bound(2, g)."""
    cap = sz_bound(2, g) ** 2
    return [d for d in range(5, math.ceil(cap)) if d < cap and is_fundamental(d)]


def field_scan_report(g: int) -> FieldScanReport:
    fields = field_scan(g)
    report = FieldScanReport(
        genus=g,
        bound=sz_bound(2, g),
        discriminants=fields,
        count=len(fields),
        minimum=fields[0],
        maximum=fields[-1],
        printed_maximum=PRINTED_SCAN_MAXIMUM,
        printed_count=PRINTED_SCAN_COUNT,
    )
    if g == 2 and report.discrepancy:
        logger.warning(
            f"Field scan maximum {report.maximum} differs from the printed maximum {PRINTED_SCAN_MAXIMUM}"
        )
    return report


# =============================================================================
# Discriminants
# =============================================================================

def _genus_at_level_one(F: BaseField, discriminant: Ideal, settings: Settings) -> Tuple[int, Fraction]:
    datum = validate(F, discriminant, Ideal())
    return signature(datum, settings).genus, area(datum)


def _squarefree_products(primes: List[PrimeIdeal], bound: Fraction) -> Dict[int, List[Ideal]]:
    """Squarefree products with Phi < bound, grouped by number of primes."""
    layers: Dict[int, List[Ideal]] = defaultdict(list)

    def extend(start: int, chosen: List[PrimeIdeal], phi: int):
        layers[len(chosen)].append(Ideal.of_primes(chosen))
        for i in range(start, len(primes)):
            prime = primes[i]
            if phi * (prime.norm - 1) >= bound:
                break
            extend(i + 1, chosen + [prime], phi * (prime.norm - 1))

    extend(0, [], 1)
    return layers


def _prunes(a_d: Fraction, g_d: int, phi_a: int, tau_a: int, g: int) -> bool:
    return a_d * phi_a - 2**tau_a * (a_d - 2 * g_d + 2) > 2 * g - 2


def _refinement_cap(a_d: Fraction, g_d: int, phi_rest: int, tau_a: int, g: int) -> Fraction:
    """Largest Phi of the last prime that the pruning inequality still admits."""
    return (2 * g - 2 + 2**tau_a * (a_d - 2 * g_d + 2)) / (a_d * phi_rest)


def evaluate_discriminants(
    F: BaseField, g: int, settings: Optional[Settings] = None, refine: bool = False
) -> Dict[Ideal, int]:
    """Genus at level (1) of every discriminant that survives pruning."""
    settings = settings or get_settings()
    bound = search_bound(F, g)
    primes = [p for p in F.primes_up_to(int(bound) + 1) if p.norm - 1 < bound]
    phis = [p.norm - 1 for p in primes]
    evaluated: Dict[Ideal, int] = {}
    areas: Dict[Ideal, Fraction] = {}
    pruned = 0
    layer: List[Tuple[int, ...]] = [()] if F.degree == 1 else [(i,) for i in range(len(primes))]
    while layer:
        for combo in layer:
            candidate = Ideal.of_primes(primes[i] for i in combo)
            if _is_pruned(candidate, evaluated, areas, g):
                pruned += 1
                continue
            genus, a = _genus_at_level_one(F, candidate, settings)
            evaluated[candidate] = genus
            areas[candidate] = a
        layer = _next_layer(layer, primes, phis, bound, evaluated, areas, g, refine)
    logger.info(
        f"d_F={F.d}: {len(evaluated)} discriminants evaluated, {pruned} pruned (M={float(bound):.1f})"
    )
    return evaluated


def _next_layer(
    layer: List[Tuple[int, ...]],
    primes: List[PrimeIdeal],
    phis: List[int],
    bound: Fraction,
    evaluated: Dict[Ideal, int],
    areas: Dict[Ideal, Fraction],
    g: int,
    refine: bool,
) -> List[Tuple[int, ...]]:
    """Extend every candidate by two larger primes, keeping Phi < bound."""
    extended = []
    for combo in layer:
        phi = math.prod(phis[i] for i in combo)
        prefix = Ideal.of_primes(primes[i] for i in combo)
        start = combo[-1] + 1 if combo else 0
        for i in range(start, len(primes)):
            if i + 1 >= len(primes) or phi * phis[i] * phis[i + 1] >= bound:
                break
            cap = None
            if refine and prefix in evaluated:
                cap = _refinement_cap(areas[prefix], evaluated[prefix], phis[i], 2, g)
            for j in range(i + 1, len(primes)):
                if phi * phis[i] * phis[j] >= bound or (cap is not None and phis[j] > cap):
                    break
                extended.append(combo + (i, j))
    return extended


def _is_pruned(
    candidate: Ideal, evaluated: Dict[Ideal, int], areas: Dict[Ideal, Fraction], g: int
) -> bool:
    primes = candidate.primes
    for size in range(len(primes) - 2, -1, -2):
        for subset in itertools.combinations(primes, size):
            divisor = Ideal.of_primes(subset)
            if divisor not in evaluated:
                continue
            rest = Ideal.of_primes(p for p in primes if p not in subset)
            if _prunes(areas[divisor], evaluated[divisor], phi_of(rest), len(rest.primes), g):
                return True
    return False


def candidate_discriminants(
    F: BaseField, g: int, settings: Optional[Settings] = None, refine: bool = False
) -> List[Ideal]:
    evaluated = evaluate_discriminants(F, g, settings, refine)
    return sorted(evaluated, key=lambda ideal: ideal.sort_key)


# =============================================================================
# Levels
# =============================================================================

def _record(datum: ShimuraDatum, sig: Signature) -> CurveRecord:
    return CurveRecord(
        degree=datum.field.degree,
        d_F=datum.field.d,
        D=datum.discriminant.norm,
        N=datum.level.norm,
        discriminant=str(datum.discriminant),
        level=str(datum.level),
        signature=sig,
    )


def _explore_levels(
    F: BaseField, discriminant: Ideal, g: int, settings: Settings
) -> List[Tuple[ShimuraDatum, Signature]]:
    cap = search_bound(F, g) / phi_of(discriminant)
    primes = [
        p for p in F.primes_up_to(int(cap) + 1) if p not in discriminant.primes and p.norm < cap
    ]
    found: List[Tuple[ShimuraDatum, Signature]] = []

    def explore(level: Ideal, start: int):
        datum = validate(F, discriminant, level)
        sig = signature(datum, settings)
        if sig.genus > g:
            return
        found.append((datum, sig))
        psi = psi_of(level)
        for i in range(start, len(primes)):
            prime = primes[i]
            if psi * prime.norm >= cap:
                break
            extended = level * Ideal.of_primes([prime])
            if psi_of(extended) < cap:
                explore(extended, i)

    explore(Ideal(), 0)
    return found


def enumerate_levels(
    F: BaseField, discriminant: Ideal, g: int, settings: Optional[Settings] = None
) -> List[CurveRecord]:
    """All levels N with genus <= g, explored by divisibility."""
    settings = settings or get_settings()
    return [_record(datum, sig) for datum, sig in _explore_levels(F, discriminant, g, settings)]


# =============================================================================
# Whole fields
# =============================================================================

def _canonical(F: BaseField, found: List[Tuple[ShimuraDatum, Signature]]) -> List[CurveRecord]:
    """One record per Galois class, labelled where (d_F, D, N) is ambiguous."""
    return sort_records(record for record, _ in _canonical_pairs(F, found))


def _canonical_pairs(
    F: BaseField, found: List[Tuple[ShimuraDatum, Signature]]
) -> List[Tuple[CurveRecord, ShimuraDatum]]:
    by_class: Dict[tuple, Tuple[ShimuraDatum, Signature]] = {}
    for datum, sig in found:
        key = F.galois_class_key(datum.discriminant, datum.level)
        by_class.setdefault(key, (datum, sig))
    groups: Dict[Tuple[int, int], Dict[Signature, ShimuraDatum]] = defaultdict(dict)
    for key in sorted(by_class):
        datum, sig = by_class[key]
        groups[(datum.discriminant.norm, datum.level.norm)].setdefault(sig, datum)
    pairs = []
    for norms in sorted(groups):
        distinct = groups[norms]
        if len(distinct) == 1:
            sig, datum = next(iter(distinct.items()))
            pairs.append((_record(datum, sig), datum))
            continue
        data = list(distinct.values())
        for (sig, datum), label in zip(distinct.items(), _labels(data)):
            pairs.append((_record(datum, sig).model_copy(update={"ideal_label": label}), datum))
    return pairs


def _labels(data: List[ShimuraDatum]) -> List[str]:
    if len({d.discriminant for d in data}) > 1:
        ordered = sorted(data, key=lambda d: d.discriminant.sort_key)
        return [f"ideal-{ordered.index(d) + 1}" for d in data]
    labels = []
    for datum in data:
        level = datum.level
        if datum.field.is_galois_stable(level):
            labels.append(IdealLabelEnum.RATIONAL.value)
        elif len(level.factors) == 1 and level.factors[0][1] == 2:
            labels.append(IdealLabelEnum.SQUARE.value)
        else:
            labels.append(IdealLabelEnum.SPLIT.value)
    return labels


def data_with_norms(F: BaseField, D: int, N: int) -> List[ShimuraDatum]:
    """Every valid (D, N) ideal pair with the given norms."""
    discriminants = F.ideals_of_norm(D)
    if not discriminants:
        raise NotFound(f"no ideal of norm {D} in d_F={F.d}")
    levels = F.ideals_of_norm(N)
    if not levels:
        raise NotFound(f"no ideal of norm {N} in d_F={F.d}")
    data: List[ShimuraDatum] = []
    first_error: Optional[InputError] = None
    for discriminant in discriminants:
        for level in levels:
            try:
                data.append(validate(F, discriminant, level))
            except InputError as e:
                first_error = first_error or e
    if not data:
        raise first_error
    return data


def curves_with_norms(
    F: BaseField, D: int, N: int, settings: Optional[Settings] = None
) -> List[Tuple[CurveRecord, ShimuraDatum]]:
    """Galois-distinct curves with norms (D, N), labelled as in the tables."""
    settings = settings or get_settings()
    found = [(datum, signature(datum, settings)) for datum in data_with_norms(F, D, N)]
    return _canonical_pairs(F, found)


def resolve_curve(
    F: BaseField, D: int, N: int, label: Optional[str] = None, settings: Optional[Settings] = None
) -> Tuple[CurveRecord, ShimuraDatum]:
    """The unique curve for (d_F, D, N[, label]); AmbiguousIdeal when a label is needed."""
    pairs = curves_with_norms(F, D, N, settings)
    labels = [record.ideal_label for record, _ in pairs]
    if label is not None:
        chosen = [pair for pair in pairs if pair[0].ideal_label == label]
        if not chosen:
            raise NotFound(f"no curve labelled {label!r} for d_F={F.d}, D={D}, N={N}; labels: {labels}")
        return chosen[0]
    if len(pairs) > 1:
        raise AmbiguousIdeal(f"d_F={F.d}, D={D}, N={N} names several curves", labels=labels)
    return pairs[0]


def sort_records(records: Iterable[CurveRecord]) -> List[CurveRecord]:
    return sorted(records, key=lambda r: (r.degree, r.d_F, r.field_index, r.D, r.N, r.ideal_label))


def enumerate_all(
    F: BaseField, g: int, settings: Optional[Settings] = None, refine: bool = False
) -> List[CurveRecord]:
    """SC(F, g), including modular curves over Q."""
    settings = settings or get_settings()
    found: List[Tuple[ShimuraDatum, Signature]] = []
    for discriminant in candidate_discriminants(F, g, settings, refine):
        found.extend(_explore_levels(F, discriminant, g, settings))
    records = _canonical(F, found)
    logger.info(f"d_F={F.d}: {len(records)} curves of genus <= {g}")
    return records


def naive_enumerate(F: BaseField, g: int, settings: Optional[Settings] = None) -> List[CurveRecord]:
    """Exhaustive scan of Phi(D) Psi(N) < M(F, g) without pruning."""
    settings = settings or get_settings()
    bound = search_bound(F, g)
    primes = [p for p in F.primes_up_to(int(bound) + 1) if p.norm - 1 < bound]
    found: List[Tuple[ShimuraDatum, Signature]] = []
    for tau, discriminants in sorted(_squarefree_products(primes, bound).items()):
        if (tau + F.degree) % 2 == 0:
            continue
        for discriminant in discriminants:
            cap = bound / phi_of(discriminant)
            for norm in range(1, math.ceil(cap)):
                for level in F.ideals_of_norm(norm):
                    if not level.is_coprime(discriminant) or psi_of(level) >= cap:
                        continue
                    datum = validate(F, discriminant, level)
                    sig = signature(datum, settings)
                    if sig.genus <= g:
                        found.append((datum, sig))
    return _canonical(F, found)


# =============================================================================
# Many fields
# =============================================================================

def _enumerate_field(job: Tuple[int, int, Settings, bool]) -> List[CurveRecord]:
    d, g, settings, refine = job
    return enumerate_all(make_field(d), g, settings, refine)


def enumerate_fields(
    discriminants: List[int], g: int, settings: Optional[Settings] = None, refine: bool = False
) -> List[CurveRecord]:
    """enumerate_all over several fields, fanned out over worker processes."""
    settings = settings or get_settings()
    jobs = [(d, g, settings, refine) for d in discriminants]
    if settings.workers > 1 and len(jobs) > 1:
        logger.info(f"Enumerating {len(jobs)} fields on {settings.workers} workers")
        with ProcessPoolExecutor(max_workers=settings.workers) as pool:
            results = list(pool.map(_enumerate_field, jobs))
    else:
        results = [_enumerate_field(job) for job in jobs]
    return sort_records(record for batch in results for record in batch)
