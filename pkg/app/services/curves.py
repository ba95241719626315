"""
Shimura data (F, D, N), their areas and signatures.
"""
import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from app.config import Settings, get_settings
from app.errors import InternalInconsistency, NotCoprime, NotSquarefree, ParityViolation
from app.models.pydantic_models import EllipticTerm, Signature, SignatureAudit
from app.services.cmorders import admissible_q
from app.services.embeddings import cusp_count, elliptic_terms
from app.services.quadfield import BaseField, Ideal, phi_of, psi_of

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShimuraDatum:
    field: BaseField
    discriminant: Ideal
    level: Ideal

    @property
    def is_modular(self) -> bool:
        return self.field.degree == 1 and self.discriminant.is_unit()


def validate(F: BaseField, discriminant: Ideal, level: Ideal) -> ShimuraDatum:
    if not discriminant.is_squarefree():
        raise NotSquarefree(f"discriminant {discriminant} is not squarefree")
    if not discriminant.is_coprime(level):
        raise NotCoprime(f"discriminant {discriminant} and level {level} share a prime")
    if (len(discriminant.primes) + F.degree) % 2 == 0:
        raise ParityViolation(
            f"{len(discriminant.primes)} ramified primes over a field of degree {F.degree}"
        )
    return ShimuraDatum(F, discriminant, level)


def area(datum: ShimuraDatum) -> Fraction:
    return datum.field.aprim * phi_of(datum.discriminant) * psi_of(datum.level)


def signature_with_audit(
    datum: ShimuraDatum, settings: Optional[Settings] = None
) -> Tuple[Signature, List[EllipticTerm]]:
    settings = settings or get_settings()
    F = datum.field
    total_area = area(datum)
    counts: Dict[int, int] = {}
    terms: List[EllipticTerm] = []
    for q in admissible_q(F):
        count, q_terms = elliptic_terms(F, q, datum.discriminant, datum.level, settings)
        counts[q] = count
        terms.extend(q_terms)
    cusps = cusp_count(datum.level.norm) if datum.is_modular else 0
    elliptic_part = sum((c * (1 - Fraction(1, q)) for q, c in counts.items()), Fraction(0))
    doubled_genus = total_area - elliptic_part - cusps + 2
    if doubled_genus.denominator != 1 or doubled_genus % 2 or doubled_genus < 0:
        raise InternalInconsistency(
            f"genus {doubled_genus / 2} for d_F={F.d}, D={datum.discriminant}, N={datum.level} "
            f"(area {total_area}, e_q {counts}, s={cusps})"
        )
    genus = int(doubled_genus) // 2
    sig = Signature(
        genus=genus,
        elliptic=tuple((q, c) for q, c in sorted(counts.items()) if c),
        cusps=cusps,
        area=str(total_area),
    )
    return sig, terms


def signature(datum: ShimuraDatum, settings: Optional[Settings] = None) -> Signature:
    return signature_with_audit(datum, settings)[0]


def audit(datum: ShimuraDatum, settings: Optional[Settings] = None) -> SignatureAudit:
    sig, terms = signature_with_audit(datum, settings)
    return SignatureAudit(
        d_F=datum.field.d,
        discriminant=str(datum.discriminant),
        level=str(datum.level),
        area=str(area(datum)),
        elliptic_counts=sig.elliptic_counts,
        terms=terms,
        signature=sig,
    )


# =============================================================================
# Signature grammar: "(g;o1^k1,o2^k2;s)"
# =============================================================================

_SIGNATURE_RE = re.compile(r"^\((\d+);([^;]*)(?:;(\d+))?\)$")
_ORDER_RE = re.compile(r"^(\d+)(?:\^(\d+))?$")


def render(sig: Signature) -> str:
    if sig.elliptic:
        body = ",".join(str(o) if k == 1 else f"{o}^{k}" for o, k in sig.elliptic)
    else:
        body = "-"
    if sig.cusps:
        return f"({sig.genus};{body};{sig.cusps})"
    return f"({sig.genus};{body})"


def parse_signature(text: str) -> Signature:
    """Inverse of render; whitespace is ignored."""
    compact = re.sub(r"\s+", "", text)
    match = _SIGNATURE_RE.match(compact)
    if not match:
        raise ValueError(f"malformed signature {text!r}")
    genus, body, cusps = match.groups()
    elliptic: Dict[int, int] = {}
    if body != "-":
        for part in body.split(","):
            order_match = _ORDER_RE.match(part)
            if not order_match:
                raise ValueError(f"malformed elliptic entry {part!r} in {text!r}")
            order, mult = int(order_match.group(1)), int(order_match.group(2) or 1)
            if order < 2 or mult < 1:
                raise ValueError(f"invalid elliptic entry {part!r} in {text!r}")
            elliptic[order] = elliptic.get(order, 0) + mult
    return Signature(
        genus=int(genus),
        elliptic=tuple(sorted(elliptic.items())),
        cusps=int(cusps or 0),
    )
