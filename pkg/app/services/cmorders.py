"""
CM extensions K_q = F(zeta_2q) of the base field and their quadratic Z_F-orders.

Elements of K_q are a + b*zeta with a, b in F, where zeta has minimal
polynomial x^2 - s x + 1 over F. An order of conductor f is
R_f = Z_F + f Z_K; locally at a prime P it is Z_F + pi^(f_P) Z_F gamma_P
where gamma_P = (x_P + zeta)/pi^(k_P) generates the maximal order.
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from ruamel.yaml import YAML

from app.errors import (
    ClassNumberUnavailable,
    InputError,
    NonIntegralClassNumber,
    NotAdmissible,
    UnitSearchInconclusive,
)
from app.services.arith import squarefree_kernel
from app.services.quadfield import (
    BaseField,
    FieldElement,
    Ideal,
    PrimeIdeal,
    definite_class_number,
)

logger = logging.getLogger(__name__)

CANDIDATE_Q = (2, 3, 4, 5, 6)


# =============================================================================
# Elements of K_q
# =============================================================================

class CMElement:
    """a + b*zeta over the base field."""

    __slots__ = ("a", "b", "cm")

    def __init__(self, cm: "CMField", a, b=0):
        self.cm = cm
        self.a = a if isinstance(a, FieldElement) else cm.field.element(a)
        self.b = b if isinstance(b, FieldElement) else cm.field.element(b)

    def __add__(self, other: "CMElement") -> "CMElement":
        return CMElement(self.cm, self.a + other.a, self.b + other.b)

    def __sub__(self, other: "CMElement") -> "CMElement":
        return CMElement(self.cm, self.a - other.a, self.b - other.b)

    def __mul__(self, other) -> "CMElement":
        if not isinstance(other, CMElement):
            return CMElement(self.cm, self.a * other, self.b * other)
        s = self.cm.trace_zeta
        bd = self.b * other.b
        return CMElement(
            self.cm,
            self.a * other.a - bd,
            self.a * other.b + self.b * other.a + bd * s,
        )

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, CMElement) and self.a == other.a and self.b == other.b

    def __hash__(self):
        return hash((self.a, self.b))

    def __repr__(self):
        return f"({self.a}) + ({self.b})*zeta"

    def trace(self) -> FieldElement:
        return 2 * self.a + self.b * self.cm.trace_zeta

    def norm(self) -> FieldElement:
        return self.a * self.a + self.a * self.b * self.cm.trace_zeta + self.b * self.b

    def is_integral(self) -> bool:
        return self.trace().is_integral() and self.norm().is_integral()

    def sqrt(self) -> Optional["CMElement"]:
        """A square root in K_q, or None."""
        cm = self.cm
        half_s = cm.trace_zeta / 2
        big_a = self.a + self.b * half_s
        big_b = self.b / 2
        if big_b.is_zero():
            root = big_a.sqrt()
            if root is not None:
                return cm.from_sqrt_basis(root, cm.field.element(0))
            root = (big_a / cm.delta).sqrt()
            if root is not None:
                return cm.from_sqrt_basis(cm.field.element(0), root)
            return None
        n = (big_a * big_a - big_b * big_b * cm.delta).sqrt()
        if n is None:
            return None
        for sign in (1, -1):
            c = ((big_a + sign * n) / 2).sqrt()
            if c is None or c.is_zero():
                continue
            candidate = cm.from_sqrt_basis(c, big_b / (2 * c))
            if candidate * candidate == self:
                return candidate
        return None


# =============================================================================
# Data records
# =============================================================================

@dataclass(frozen=True)
class LocalGenerator:
    """gamma = (shift + zeta)/pi^depth generates Z_K over Z_F locally at prime."""

    prime: PrimeIdeal
    shift: FieldElement
    depth: int


@dataclass(frozen=True)
class LocalPoly:
    """Minimal polynomial x^2 - t x + n of a local generator, d = t^2 - 4n."""

    t: FieldElement
    n: FieldElement
    d: FieldElement


@dataclass(frozen=True)
class UnitOverride:
    d_F: int
    q: int
    conductor: str
    q_index: int
    unit_index: int


# =============================================================================
# The CM field
# =============================================================================

def cyclotomic_trace(F: BaseField, q: int) -> Optional[FieldElement]:
    """2 cos(pi/q) as an element of F, or None when it does not lie in F."""
    if q == 2:
        return F.element(0)
    if q == 3:
        return F.element(1)
    if F.degree == 1:
        return None
    if q == 4:
        return F.element(2).sqrt()
    if q == 6:
        return F.element(3).sqrt()
    if q == 5:
        root5 = F.element(5).sqrt()
        return None if root5 is None else (1 + root5) / 2
    return None


def admissible_q(F: BaseField) -> List[int]:
    return [q for q in CANDIDATE_Q if cyclotomic_trace(F, q) is not None]


class CMField:
    """K_q = F(zeta_2q) with its discriminant, torsion, units and class number."""

    def __init__(self, F: BaseField, q: int):
        s = cyclotomic_trace(F, q)
        if s is None:
            raise NotAdmissible(f"q={q} is not admissible over d_F={F.d}")
        self.field = F
        self.q = q
        self.trace_zeta = s
        self.delta = s * s - 4
        self._generators: Dict[PrimeIdeal, LocalGenerator] = {}
        self._splitting: Dict[PrimeIdeal, int] = {}
        for prime, _ in F.element_ideal(-self.delta).factors:
            self._generators[prime] = self._maximal_generator(prime)

    def __repr__(self):
        return f"CMField(d_F={self.field.d}, q={self.q})"

    # -- elements -----------------------------------------------------------

    def element(self, a=0, b=0) -> CMElement:
        return CMElement(self, a, b)

    @property
    def zeta(self) -> CMElement:
        return self.element(0, 1)

    @cached_property
    def sqrt_delta(self) -> CMElement:
        return self.element(-self.trace_zeta, 2)

    def from_sqrt_basis(self, c: FieldElement, d: FieldElement) -> CMElement:
        """c + d*sqrt(delta) in the zeta basis."""
        return self.element(c - d * self.trace_zeta, 2 * d)

    # -- local structure ----------------------------------------------------

    def _maximal_generator(self, prime: PrimeIdeal) -> LocalGenerator:
        F = self.field
        local = F.local(prime)
        bound = int(local.valuation(self.delta)) // 2
        s = self.trace_zeta
        for k in range(bound, 0, -1):
            for x in local.residues(k):
                if local.valuation(2 * x + s) >= k and local.valuation(x * x + s * x + 1) >= 2 * k:
                    return LocalGenerator(prime, x, k)
        return LocalGenerator(prime, F.element(0), 0)

    def local_generator(self, prime: PrimeIdeal) -> LocalGenerator:
        if prime in self._generators:
            return self._generators[prime]
        return LocalGenerator(prime, self.field.element(0), 0)

    @cached_property
    def max_conductor(self) -> Ideal:
        """Conductor of Z_F[zeta] in Z_K."""
        return Ideal.from_mapping({p: g.depth for p, g in self._generators.items()})

    @cached_property
    def relative_discriminant(self) -> Ideal:
        F = self.field
        mapping = {}
        for prime, gen in self._generators.items():
            mapping[prime] = int(F.valuation(self.delta, prime)) - 2 * gen.depth
        return Ideal.from_mapping(mapping)

    @cached_property
    def absolute_discriminant(self) -> int:
        norm = self.relative_discriminant.norm
        if self.field.degree == 1:
            return -norm
        return self.field.d**2 * norm

    def splitting(self, prime: PrimeIdeal) -> int:
        """(K/P): -1 inert, 0 ramified, +1 split."""
        if prime not in self._splitting:
            self._splitting[prime] = self._compute_splitting(prime)
        return self._splitting[prime]

    def _compute_splitting(self, prime: PrimeIdeal) -> int:
        local = self.field.local(prime)
        if prime.p != 2 and prime not in self._generators:
            return 1 if local.is_square_unit(self.delta) else -1
        if self.relative_discriminant.exponent(prime) > 0:
            return 0
        poly = self.generator_poly(prime, 0)
        roots = sum(
            1 for x in local.residue_digits() if local.valuation(x * x - poly.t * x + poly.n) >= 1
        )
        return 1 if roots else -1

    def generator_poly(self, prime: PrimeIdeal, conductor_exponent: int) -> LocalPoly:
        """Minimal polynomial data of the local generator of R_f at prime."""
        gen = self.local_generator(prime)
        pi = self.field.local(prime).uniformizer
        j = gen.depth - conductor_exponent
        s = self.trace_zeta
        t = (2 * gen.shift + s) / pi**j
        n = (gen.shift * gen.shift + s * gen.shift + 1) / pi ** (2 * j)
        return LocalPoly(t=t, n=n, d=t * t - 4 * n)

    # -- torsion and units --------------------------------------------------

    @cached_property
    def roots_of_unity(self) -> List[CMElement]:
        """W_K, closed under multiplication from zeta_2q' for every q' with K_q' = K_q."""
        F = self.field
        generators = [self.zeta]
        for other in CANDIDATE_Q:
            s_other = cyclotomic_trace(F, other)
            if other == self.q or s_other is None:
                continue
            scale = ((s_other * s_other - 4) / self.delta).sqrt()
            if scale is None:
                continue
            root = self.sqrt_delta * scale
            generators.append(self.element(s_other / 2) + root * Fraction(1, 2))
        group = {self.element(1)}
        frontier = list(group)
        while frontier:
            fresh = []
            for x in frontier:
                for g in generators:
                    y = x * g
                    if y not in group:
                        group.add(y)
                        fresh.append(y)
            frontier = fresh
        return sorted(group, key=lambda z: (z.a.a, z.a.b, z.b.a, z.b.b))

    @property
    def w(self) -> int:
        return len(self.roots_of_unity)

    @cached_property
    def _unit_square_data(self) -> Tuple[int, Optional[CMElement]]:
        F = self.field
        if F.degree == 1 or F.unit_norm == -1:
            return 1, None
        eps = self.element(F.fundamental_unit)
        roots = [(zeta * eps).sqrt() for zeta in self.roots_of_unity]
        found = [r for r in roots if r is not None]
        if not found:
            return 1, None
        if len(found) * 2 != self.w:
            raise UnitSearchInconclusive(
                f"{len(found)} of {self.w} twists of eps are squares in K for d_F={F.d}, q={self.q}"
            )
        return 2, found[0]

    @property
    def hasse_unit_index(self) -> int:
        """[E_K : W_K E_F]."""
        return self._unit_square_data[0]

    @property
    def extra_unit(self) -> Optional[CMElement]:
        """u with u^2 = zeta * eps when the Hasse index is 2."""
        return self._unit_square_data[1]

    def unit_coset_representatives(self) -> List[CMElement]:
        """Representatives of E_K / <eps>, each class of E_K / <-1, eps> twice."""
        reps = list(self.roots_of_unity)
        if self.extra_unit is not None:
            reps += [zeta * self.extra_unit for zeta in self.roots_of_unity]
        return reps

    # -- class number -------------------------------------------------------

    @cached_property
    def class_number(self) -> int:
        F = self.field
        if F.degree == 1:
            return definite_class_number(self.absolute_discriminant)
        w = self.w
        if w % 4 == 0:
            m = -1
        elif w % 3 == 0:
            m = -3
        else:
            return self._class_number_by_minkowski()
        disc_a = _quadratic_discriminant(m)
        disc_b = _quadratic_discriminant(squarefree_kernel(m * squarefree_kernel(F.d)))
        h_a, h_b = definite_class_number(disc_a), definite_class_number(disc_b)
        w_sub = math.lcm(_torsion_count(disc_a), _torsion_count(disc_b))
        numerator = self.hasse_unit_index * (w // w_sub) * F.class_number * h_a * h_b
        if numerator % 2:
            raise NonIntegralClassNumber(f"h(K) = {numerator}/2 for d_F={F.d}, q={self.q}")
        h = numerator // 2
        logger.debug(
            f"h(K) for d_F={F.d}, q={self.q}: Q_H={self.hasse_unit_index}, "
            f"h({disc_a})={h_a}, h({disc_b})={h_b}, h(F)={F.class_number} -> {h}"
        )
        return h

    def _class_number_by_minkowski(self) -> int:
        bound = (4 / math.pi) ** 2 * math.factorial(4) / 4**4 * math.sqrt(abs(self.absolute_discriminant))
        if bound < 2:
            return 1
        raise ClassNumberUnavailable(
            f"cyclic quartic K for d_F={self.field.d}, q={self.q} has Minkowski bound {bound:.3f}"
        )


def _quadratic_discriminant(m: int) -> int:
    return m if m % 4 == 1 else 4 * m


def _torsion_count(disc: int) -> int:
    return {-4: 4, -3: 6}.get(disc, 2)


# =============================================================================
# Orders
# =============================================================================

@dataclass
class CMOrder:
    """R_f = Z_F + f Z_K inside K_q."""

    cm: CMField
    conductor: Ideal
    w: int = 0
    unit_index: int = 1
    q_index: int = 1
    class_number: int = 1
    _polys: Dict[PrimeIdeal, LocalPoly] = field(default_factory=dict, repr=False)
    _level_counts: Dict[Tuple[PrimeIdeal, int], int] = field(default_factory=dict, repr=False)

    @property
    def label(self) -> str:
        return str(self.conductor)

    def contains(self, x: CMElement) -> bool:
        """Membership of an integral element of K_q."""
        if not x.is_integral():
            return False
        F = self.cm.field
        for prime, f in self.conductor.factors:
            depth = self.cm.local_generator(prime).depth
            if F.valuation(x.b, prime) < f - depth:
                return False
        return True

    def local_poly(self, prime: PrimeIdeal) -> LocalPoly:
        if prime not in self._polys:
            self._polys[prime] = self.cm.generator_poly(prime, self.conductor.exponent(prime))
        return self._polys[prime]

    def euler_factor(self) -> Fraction:
        """N(f) prod (1 - (K/P)/NP) over P | f."""
        value = Fraction(self.conductor.norm)
        for prime in self.conductor.primes:
            value *= 1 - Fraction(self.cm.splitting(prime), prime.norm)
        return value


def make_order(cm: CMField, conductor: Ideal, overrides: Optional[Dict] = None) -> CMOrder:
    order = CMOrder(cm=cm, conductor=conductor)
    order.w = sum(1 for zeta in cm.roots_of_unity if order.contains(zeta))
    pinned = (overrides or {}).get((cm.field.d, cm.q, order.label))
    if pinned is not None:
        order.q_index, order.unit_index = pinned.q_index, pinned.unit_index
        logger.info(f"Unit indices pinned by override for d_F={cm.field.d}, q={cm.q}, f={order.label}")
    else:
        order.q_index, order.unit_index = unit_indices(order)
    order.class_number = suborder_class_number(order)
    logger.debug(
        f"Order d_F={cm.field.d} q={cm.q} f={order.label}: w={order.w}, "
        f"[E_K:R*]={order.unit_index}, Q={order.q_index}, h={order.class_number}"
    )
    return order


def unit_indices(order: CMOrder) -> Tuple[int, int]:
    """(Q(R), [Z_K^* : R^*])."""
    cm = order.cm
    reps = cm.unit_coset_representatives()
    members = [u for u in reps if order.contains(u)]
    index = len(reps) // len(members)
    q_index = 1
    if cm.extra_unit is not None:
        twisted = set(zeta * cm.extra_unit for zeta in cm.roots_of_unity)
        if any(u in twisted for u in members):
            q_index = 2
    return q_index, index


def unit_index_Q(order: CMOrder) -> int:
    return order.q_index


def unit_index_max(order: CMOrder) -> int:
    return order.unit_index


def suborder_class_number(order: CMOrder) -> int:
    value = order.cm.class_number * order.euler_factor() / order.unit_index
    if value.denominator != 1 or value < 1:
        raise NonIntegralClassNumber(
            f"h(R) = {value} for d_F={order.cm.field.d}, q={order.cm.q}, f={order.label}"
        )
    return int(value)


def local_poly(order: CMOrder, prime: PrimeIdeal) -> LocalPoly:
    return order.local_poly(prime)


def _divisors(ideal: Ideal) -> List[Ideal]:
    result = [Ideal()]
    for prime, e in ideal.factors:
        result = [d * Ideal.from_mapping({prime: k}) for d in result for k in range(e + 1)]
    return sorted(result, key=lambda i: i.sort_key)


# =============================================================================
# Caches and overrides
# =============================================================================

_CM_CACHE: Dict[Tuple[int, int], CMField] = {}
_ORDER_CACHE: Dict[Tuple[int, int, Optional[str]], List[CMOrder]] = {}


def cm_field(F: BaseField, q: int) -> CMField:
    key = (F.d, q)
    if key not in _CM_CACHE:
        _CM_CACHE[key] = CMField(F, q)
    return _CM_CACHE[key]


def splitting_in_cm(cm: CMField, prime: PrimeIdeal) -> int:
    return cm.splitting(prime)


def order_lattice(F: BaseField, q: int, override_path: Optional[Path] = None) -> List[CMOrder]:
    """Orders R_f, f | conductor of Z_F[zeta], whose torsion is exactly 2q."""
    key = (F.d, q, str(override_path) if override_path else None)
    if key not in _ORDER_CACHE:
        cm = cm_field(F, q)
        overrides = load_unit_overrides(override_path) if override_path else {}
        orders = []
        for conductor in _divisors(cm.max_conductor):
            order = make_order(cm, conductor, overrides)
            if order.w == 2 * q:
                orders.append(order)
            else:
                logger.debug(f"Skipping f={order.label} for d_F={F.d}, q={q}: w(R)={order.w}")
        _ORDER_CACHE[key] = orders
    return _ORDER_CACHE[key]


def load_unit_overrides(path: Path) -> Dict[Tuple[int, int, str], UnitOverride]:
    """Read pinned (Q, unit index) values keyed by (d_F, q, conductor label)."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"Unit override file not found: {path}")
    yaml = YAML(typ="safe")
    with open(path, "r", encoding="utf-8") as f:
        content = yaml.load(f) or []
    overrides = {}
    for entry in content:
        item = UnitOverride(
            d_F=int(entry["d_F"]),
            q=int(entry["q"]),
            conductor=str(entry.get("conductor", "(1)")),
            q_index=int(entry["Q"]),
            unit_index=int(entry["unit_index"]),
        )
        overrides[(item.d_F, item.q, item.conductor)] = item
    logger.info(f"Loaded {len(overrides)} unit overrides from {path}")
    return overrides
