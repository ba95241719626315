"""
Local optimal embedding numbers, elliptic cycle counts and cusps.
"""
import logging
import math
from fractions import Fraction
from typing import List, Optional, Tuple

from app.config import Settings, get_settings
from app.errors import InputError, NonIntegralCount
from app.models.pydantic_models import EllipticTerm, EmbeddingRoleEnum, LocalFactor
from app.services.arith import euler_phi, positive_divisors
from app.services.cmorders import CMOrder, LocalPoly, order_lattice
from app.services.quadfield import BaseField, Ideal, PrimeIdeal, PrimeLocal

logger = logging.getLogger(__name__)


# =============================================================================
# Local counts at level primes
# =============================================================================

def _residue_character(local: PrimeLocal, d, delta: int) -> int:
    unit = d / local.uniformizer**delta
    return 1 if local.is_square_unit(unit) else -1


def odd_level_count(local: PrimeLocal, poly: LocalPoly, e: int) -> int:
    """Closed form of #E(e) + [delta > 0] #img for odd P, by counting square roots of d."""
    q = local.prime.norm
    delta = int(local.valuation(poly.d))
    chi = _residue_character(local, poly.d, delta) if delta % 2 == 0 else 0
    if delta == 0:
        return 1 + chi
    if e < delta:
        return q ** (e // 2) + q ** ((e - 1) // 2)
    k = delta // 2
    if e == delta:
        if delta % 2:
            return q**k
        return q**k + (1 + chi) * q ** (k - 1)
    if delta % 2:
        return 0
    return (1 + chi) * (q**k + q ** (k - 1))


def _in_image(local: PrimeLocal, poly: LocalPoly, x, e: int) -> bool:
    value = local.valuation(x * x - poly.t * x + poly.n)
    slope = local.valuation(2 * x - poly.t)
    if slope == 0:
        return value >= e
    return value >= e + 1


def hensel_level_count(local: PrimeLocal, poly: LocalPoly, e: int) -> int:
    """#E(e) + [delta > 0] #img by lifting roots one pi-adic digit at a time."""
    digits = local.residue_digits()
    roots = [local.field.element(0)]
    for r in range(e):
        step = local.uniformizer**r
        roots = [
            y
            for x in roots
            for y in (x + step * digit for digit in digits)
            if local.valuation(y * y - poly.t * y + poly.n) >= r + 1
        ]
    count = len(roots)
    if local.valuation(poly.d) > 0:
        count += sum(1 for x in roots if _in_image(local, poly, x, e))
    return count


def brute_level_count(local: PrimeLocal, poly: LocalPoly, e: int) -> int:
    """Exhaustive count over Z_F / P^e."""
    roots = 0
    image = 0
    ramified = local.valuation(poly.d) > 0
    for x in local.residues(e):
        value = local.valuation(x * x - poly.t * x + poly.n)
        if value >= e:
            roots += 1
            if ramified and _in_image(local, poly, x, e):
                image += 1
    return roots + image


def local_embed(order: CMOrder, prime: PrimeIdeal, role: EmbeddingRoleEnum, e: int = 0) -> LocalFactor:
    """m(R_P, O_P) for an Eichler order of level P^e (e = 0 away from the level)."""
    if role == EmbeddingRoleEnum.UNRAMIFIED:
        count = 1
    elif role == EmbeddingRoleEnum.DISCRIMINANT:
        if order.conductor.exponent(prime) > 0:
            count = 0
        else:
            count = 1 - order.cm.splitting(prime)
    else:
        if e < 1:
            raise InputError(f"level prime {prime} needs a positive exponent")
        key = (prime, e)
        if key not in order._level_counts:
            local = order.cm.field.local(prime)
            poly = order.local_poly(prime)
            if prime.p == 2:
                order._level_counts[key] = hensel_level_count(local, poly, e)
            else:
                order._level_counts[key] = odd_level_count(local, poly, e)
        count = order._level_counts[key]
    return LocalFactor(prime=str(prime), role=role, exponent=e, count=count)


# =============================================================================
# Global counts
# =============================================================================

def elliptic_constant(F: BaseField, settings: Settings) -> Fraction:
    if settings.elliptic_constant == "half_class_number":
        return Fraction(1, 2 * F.class_number)
    return Fraction(1, F.class_number)


def elliptic_terms(
    F: BaseField,
    q: int,
    discriminant: Ideal,
    level: Ideal,
    settings: Optional[Settings] = None,
) -> Tuple[int, List[EllipticTerm]]:
    """e_q with the per-order contributions that produced it."""
    settings = settings or get_settings()
    total = Fraction(0)
    terms = []
    for order in order_lattice(F, q, settings.override_path):
        factors = [local_embed(order, p, EmbeddingRoleEnum.DISCRIMINANT) for p in discriminant.primes]
        factors += [local_embed(order, p, EmbeddingRoleEnum.LEVEL, e) for p, e in level.factors]
        product = 1
        for factor in factors:
            product *= factor.count
        contribution = Fraction(order.class_number, order.q_index) * product
        total += contribution
        terms.append(
            EllipticTerm(
                q=q,
                conductor=order.label,
                class_number=order.class_number,
                unit_index=order.unit_index,
                q_index=order.q_index,
                factors=factors,
                contribution=str(contribution),
            )
        )
    count = elliptic_constant(F, settings) * total
    if count.denominator != 1:
        raise NonIntegralCount(
            f"e_{q} = {count} for d_F={F.d}, D={discriminant}, N={level}"
        )
    return int(count), terms


def elliptic_count(
    F: BaseField,
    q: int,
    discriminant: Ideal,
    level: Ideal,
    settings: Optional[Settings] = None,
) -> int:
    return elliptic_terms(F, q, discriminant, level, settings)[0]


def cusp_count(n: int) -> int:
    """Cusps of X_0(n)."""
    if n < 1:
        raise InputError(f"level must be positive, got {n}")
    return sum(euler_phi(math.gcd(d, n // d)) for d in positive_divisors(n))


