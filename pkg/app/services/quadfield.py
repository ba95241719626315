"""
The totally real base field F: either Q or a real quadratic field.

Elements are written over the integral basis (1, w) with
w = (d_F mod 2 + sqrt(d_F))/2. Ideals are kept fully factored.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import isqrt, prod
from typing import Iterable, Iterator, Optional, Union

import mpmath
from sympy import primerange

from app.errors import NonFundamentalDiscriminant, NotSquarefree, NotTotallyReal, PrecisionTooLow
from app.services.arith import (
    factor,
    is_fundamental,
    kronecker,
    legendre,
    positive_divisors,
    rational_sqrt,
    sigma1,
    valuation,
)

logger = logging.getLogger(__name__)

INFINITY = math.inf

Scalar = Union[int, Fraction]


# =============================================================================
# Elements
# =============================================================================

class FieldElement:
    """a + b*w with rational a, b."""

    __slots__ = ("a", "b", "field")

    def __init__(self, field: "BaseField", a: Scalar = 0, b: Scalar = 0):
        self.field = field
        self.a = Fraction(a)
        self.b = Fraction(b)

    def _coerce(self, other) -> "FieldElement":
        if isinstance(other, FieldElement):
            return other
        if isinstance(other, (int, Fraction)):
            return FieldElement(self.field, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return FieldElement(self.field, self.a + other.a, self.b + other.b)

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.field, -self.a, -self.b)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return FieldElement(self.field, self.a - other.a, self.b - other.b)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        t, n = self.field.trace_omega, self.field.norm_omega
        bd = self.b * other.b
        return FieldElement(
            self.field,
            self.a * other.a - bd * n,
            self.a * other.b + self.b * other.a + bd * t,
        )

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        result = FieldElement(self.field, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return False
        return self.a == other.a and self.b == other.b

    def __hash__(self):
        return hash((self.a, self.b))

    def __repr__(self):
        if self.field.degree == 1 or self.b == 0:
            return f"{self.a}"
        return f"{self.a} + {self.b}*w"

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def is_rational(self) -> bool:
        return self.b == 0

    def conjugate(self) -> "FieldElement":
        if self.field.degree == 1:
            return self
        return FieldElement(self.field, self.a + self.b * self.field.trace_omega, -self.b)

    def norm(self) -> Fraction:
        if self.field.degree == 1:
            return self.a
        t, n = self.field.trace_omega, self.field.norm_omega
        return self.a * self.a + self.a * self.b * t + self.b * self.b * n

    def trace(self) -> Fraction:
        if self.field.degree == 1:
            return self.a
        return 2 * self.a + self.b * self.field.trace_omega

    def inverse(self) -> "FieldElement":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in F")
        if self.field.degree == 1:
            return FieldElement(self.field, 1 / self.a)
        nm = self.norm()
        c = self.conjugate()
        return FieldElement(self.field, c.a / nm, c.b / nm)

    def is_integral(self) -> bool:
        return self.a.denominator == 1 and self.b.denominator == 1

    def denominator(self) -> int:
        return math.lcm(self.a.denominator, self.b.denominator)

    def sqrt(self) -> Optional["FieldElement"]:
        """A square root in F, or None when self is not a square in F."""
        if self.is_zero():
            return self
        if self.field.degree == 1:
            root = rational_sqrt(self.a)
            return None if root is None else FieldElement(self.field, root)
        if self.is_rational():
            root = rational_sqrt(self.a)
            if root is not None:
                return FieldElement(self.field, root)
            root = rational_sqrt(self.a / self.field.d)
            if root is not None:
                return self.field.sqrt_d * root
            return None
        m = rational_sqrt(self.norm())
        if m is None:
            return None
        for sign in (1, -1):
            t = rational_sqrt(self.trace() + 2 * sign * m)
            if not t:
                continue
            candidate = (self + sign * m) / t
            if candidate * candidate == self:
                return candidate
        return None

    def is_square(self) -> bool:
        return self.sqrt() is not None


# =============================================================================
# Prime ideals and ideals
# =============================================================================

@dataclass(frozen=True)
class PrimeIdeal:
    """A prime of Z_F above p; split primes carry the root label r."""

    p: int
    f: int = 1
    e: int = 1
    label: Optional[int] = None

    @property
    def norm(self) -> int:
        return self.p**self.f

    @property
    def kind(self) -> str:
        if self.f == 2:
            return "inert"
        if self.e == 2:
            return "ramified"
        if self.label is not None:
            return "split"
        return "rational"

    @property
    def sort_key(self) -> tuple[int, int, int]:
        return (self.norm, self.p, -1 if self.label is None else self.label)

    def __str__(self):
        if self.label is None:
            return f"P{self.norm}"
        return f"P{self.norm}_{self.label}"


@dataclass(frozen=True)
class Ideal:
    """Integral ideal as sorted (prime, exponent) pairs."""

    factors: tuple[tuple[PrimeIdeal, int], ...] = ()

    @classmethod
    def from_mapping(cls, mapping: dict[PrimeIdeal, int]) -> "Ideal":
        pairs = sorted(((p, e) for p, e in mapping.items() if e > 0), key=lambda pe: pe[0].sort_key)
        return cls(tuple(pairs))

    @classmethod
    def of_primes(cls, primes: Iterable[PrimeIdeal]) -> "Ideal":
        mapping: dict[PrimeIdeal, int] = {}
        for prime in primes:
            mapping[prime] = mapping.get(prime, 0) + 1
        return cls.from_mapping(mapping)

    @cached_property
    def norm(self) -> int:
        return prod(p.norm**e for p, e in self.factors)

    @property
    def primes(self) -> list[PrimeIdeal]:
        return [p for p, _ in self.factors]

    def as_mapping(self) -> dict[PrimeIdeal, int]:
        return dict(self.factors)

    def exponent(self, prime: PrimeIdeal) -> int:
        for p, e in self.factors:
            if p == prime:
                return e
        return 0

    def is_unit(self) -> bool:
        return not self.factors

    def is_squarefree(self) -> bool:
        return all(e == 1 for _, e in self.factors)

    def is_coprime(self, other: "Ideal") -> bool:
        return not set(self.primes) & set(other.primes)

    def divides(self, other: "Ideal") -> bool:
        return all(other.exponent(p) >= e for p, e in self.factors)

    def __mul__(self, other: "Ideal") -> "Ideal":
        mapping = self.as_mapping()
        for p, e in other.factors:
            mapping[p] = mapping.get(p, 0) + e
        return Ideal.from_mapping(mapping)

    def quotient(self, other: "Ideal") -> "Ideal":
        mapping = self.as_mapping()
        for p, e in other.factors:
            mapping[p] = mapping.get(p, 0) - e
            if mapping[p] < 0:
                raise ValueError(f"{other} does not divide {self}")
        return Ideal.from_mapping(mapping)

    @property
    def sort_key(self) -> tuple:
        return (self.norm, tuple((p.sort_key, e) for p, e in self.factors))

    def __str__(self):
        if not self.factors:
            return "(1)"
        return "*".join(str(p) if e == 1 else f"{p}^{e}" for p, e in self.factors)


UNIT_IDEAL = Ideal()


# =============================================================================
# Local data at a prime
# =============================================================================

class PrimeLocal:
    """Uniformizer, valuation and residue systems of Z_F at one prime."""

    def __init__(self, field: "BaseField", prime: PrimeIdeal):
        self.field = field
        self.prime = prime
        self.p = prime.p
        self.root: Optional[int] = None
        self._lifted_roots: dict[int, int] = {}
        p = prime.p
        if field.degree == 1:
            self.uniformizer = field.element(p)
        elif prime.kind == "inert":
            self.uniformizer = field.element(p)
        elif prime.kind == "ramified":
            self.root = field.double_root_mod(p)
            self.uniformizer = field.omega - self.root
        else:
            self.root = prime.label
            c = self.root if field.omega_poly(self.root) % (p * p) else self.root + p
            self.uniformizer = field.omega - c

    def _root_mod(self, k: int) -> int:
        """Lift of the split root to Z/p^k."""
        if k not in self._lifted_roots:
            modulus = self.p**k
            t, n = self.field.trace_omega, self.field.norm_omega
            rho = self.root
            for _ in range(k.bit_length() + 1):
                g = rho * rho - t * rho + n
                dg = 2 * rho - t
                rho = (rho - g * pow(dg, -1, modulus)) % modulus
            self._lifted_roots[k] = rho
        return self._lifted_roots[k]

    def _integral_valuation(self, a: int, b: int) -> int:
        p = self.p
        kind = self.prime.kind
        if kind == "rational":
            return valuation(a, p)
        va = valuation(a, p) if a else INFINITY
        vb = valuation(b, p) if b else INFINITY
        if kind == "inert":
            return min(va, vb)
        t, n = self.field.trace_omega, self.field.norm_omega
        if kind == "ramified":
            j = min(va, vb)
            a //= p**j
            b //= p**j
            nm = a * a + a * b * t + b * b * n
            return 2 * j + (1 if nm % p == 0 else 0)
        nm = a * a + a * b * t + b * b * n
        k = valuation(nm, p) + 1
        z = (a + b * self._root_mod(k)) % p**k
        return valuation(z, p) if z else k

    def valuation(self, x: Union[FieldElement, Scalar]) -> Union[int, float]:
        if not isinstance(x, FieldElement):
            x = self.field.element(x)
        if x.is_zero():
            return INFINITY
        m = x.denominator()
        a, b = int(x.a * m), int(x.b * m)
        return self._integral_valuation(a, b) - self.prime.e * valuation(m, self.p)

    def reduce(self, x: FieldElement) -> Union[int, tuple[int, int]]:
        """Image of a p-integral element in the residue field k(P)."""
        p = self.p
        m = x.denominator()
        a, b = int(x.a * m), int(x.b * m)
        if self.prime.kind == "inert":
            inv = pow(m, -1, p)
            return (a * inv % p, b * inv % p)
        if self.prime.kind == "rational":
            return a * pow(m, -1, p) % p
        v = valuation(m, p)
        if v == 0:
            return (a + b * self.root) * pow(m, -1, p) % p
        k = v + 1
        z = (a + b * self._root_mod(k)) % p**k
        if z % p**v:
            raise ValueError(f"{x} is not integral at {self.prime}")
        return (z // p**v) * pow(m // p**v, -1, p) % p

    def is_square_unit(self, x: FieldElement) -> bool:
        """Whether a P-unit is a square in k(P)."""
        if self.p == 2:
            return True
        r = self.reduce(x)
        if isinstance(r, tuple):
            a, b = r
            t, n = self.field.trace_omega, self.field.norm_omega
            return legendre(a * a + a * b * t + b * b * n, self.p) == 1
        return legendre(r, self.p) == 1

    def residue_digits(self) -> list[FieldElement]:
        """Representatives of k(P)."""
        p = self.p
        if self.prime.kind == "inert":
            return [self.field.element(a, b) for a in range(p) for b in range(p)]
        return [self.field.element(a) for a in range(p)]

    def residues(self, r: int) -> Iterator[FieldElement]:
        """A complete residue system of Z_F / P^r as pi-adic digit sums."""
        digits = self.residue_digits()
        powers = [self.uniformizer**i for i in range(r)]
        for choice in itertools.product(digits, repeat=r):
            yield sum((d * pw for d, pw in zip(choice, powers)), self.field.element(0))


# =============================================================================
# The field
# =============================================================================

class BaseField:
    """Q (d = 1) or the real quadratic field of fundamental discriminant d."""

    def __init__(self, d: int):
        if d < 0:
            raise NotTotallyReal(f"discriminant {d} is negative")
        if d != 1 and not is_fundamental(d):
            raise NonFundamentalDiscriminant(f"{d} is not a fundamental discriminant")
        self.d = d
        self.degree = 1 if d == 1 else 2
        if d % 4 == 1:
            self.trace_omega, self.norm_omega = 1, (1 - d) // 4
        else:
            self.trace_omega, self.norm_omega = 0, -d // 4
        if self.degree == 1:
            self.trace_omega, self.norm_omega = 0, 0
        self._primes: dict[int, list[PrimeIdeal]] = {}
        self._locals: dict[PrimeIdeal, PrimeLocal] = {}
        logger.debug(f"Field d_F={d}: h={self.class_number}, N(eps)={self.unit_norm}, A_prim={self.aprim}")

    def __repr__(self):
        return f"BaseField(d={self.d})"

    # -- elements -----------------------------------------------------------

    def element(self, a: Scalar = 0, b: Scalar = 0) -> FieldElement:
        return FieldElement(self, a, b)

    @property
    def omega(self) -> FieldElement:
        return FieldElement(self, 0, 1)

    @property
    def sqrt_d(self) -> FieldElement:
        return FieldElement(self, -(self.d % 2), 2)

    def omega_poly(self, x: int) -> int:
        """Minimal polynomial of w evaluated at an integer."""
        return x * x - self.trace_omega * x + self.norm_omega

    def double_root_mod(self, p: int) -> int:
        for r in range(p):
            if self.omega_poly(r) % p == 0 and (2 * r - self.trace_omega) % p == 0:
                return r
        raise ValueError(f"{p} is not ramified in Q(sqrt({self.d}))")

    # -- invariants ---------------------------------------------------------

    @cached_property
    def fundamental_unit(self) -> Optional[FieldElement]:
        if self.degree == 1:
            return None
        return self.element(*fundamental_unit_coordinates(self.d))

    @cached_property
    def unit_norm(self) -> int:
        if self.degree == 1:
            return -1
        return int(self.fundamental_unit.norm())

    @cached_property
    def narrow_class_number(self) -> int:
        if self.degree == 1:
            return 1
        return indefinite_class_number(self.d)

    @cached_property
    def class_number(self) -> int:
        if self.degree == 1:
            return 1
        h_plus = self.narrow_class_number
        return h_plus // 2 if self.unit_norm == 1 else h_plus

    @cached_property
    def zeta_minus1(self) -> Fraction:
        return zeta_minus1(self.d)

    @cached_property
    def aprim(self) -> Fraction:
        n = self.degree
        return (-1) ** n * Fraction(2) ** (2 - n) * self.zeta_minus1

    # -- primes and ideals --------------------------------------------------

    def split_prime(self, p: int) -> list[PrimeIdeal]:
        if p not in self._primes:
            if self.degree == 1:
                primes = [PrimeIdeal(p)]
            else:
                symbol = kronecker(self.d, p)
                if symbol == 0:
                    primes = [PrimeIdeal(p, f=1, e=2)]
                elif symbol == -1:
                    primes = [PrimeIdeal(p, f=2, e=1)]
                else:
                    roots = [r for r in range(p) if self.omega_poly(r) % p == 0]
                    primes = [PrimeIdeal(p, f=1, e=1, label=r) for r in sorted(roots)]
            self._primes[p] = primes
        return self._primes[p]

    def primes_up_to(self, bound: int) -> list[PrimeIdeal]:
        """Prime ideals of norm at most bound, in canonical order."""
        found = [P for p in primerange(2, bound + 1) for P in self.split_prime(int(p)) if P.norm <= bound]
        return sorted(found, key=lambda P: P.sort_key)

    def local(self, prime: PrimeIdeal) -> PrimeLocal:
        if prime not in self._locals:
            self._locals[prime] = PrimeLocal(self, prime)
        return self._locals[prime]

    def valuation(self, x, prime: PrimeIdeal):
        return self.local(prime).valuation(x)

    def element_ideal(self, x: FieldElement) -> Ideal:
        """Factorization of the ideal generated by a nonzero integral element."""
        nm = abs(x.norm())
        if nm.denominator != 1:
            raise ValueError(f"{x} is not integral")
        mapping: dict[PrimeIdeal, int] = {}
        for p in factor(int(nm)).primes:
            for prime in self.split_prime(p):
                v = self.valuation(x, prime)
                if v:
                    mapping[prime] = int(v)
        return Ideal.from_mapping(mapping)

    def ideals_of_norm(self, m: int) -> list[Ideal]:
        options_per_prime = []
        for p, k in factor(m).factors:
            primes = self.split_prime(p)
            if len(primes) == 2:
                first, second = primes
                options = [{first: i, second: k - i} for i in range(k + 1)]
            elif primes[0].f == 2:
                options = [{primes[0]: k // 2}] if k % 2 == 0 else []
            else:
                options = [{primes[0]: k}]
            options_per_prime.append(options)
        ideals = []
        for combo in itertools.product(*options_per_prime):
            mapping: dict[PrimeIdeal, int] = {}
            for part in combo:
                mapping.update(part)
            ideals.append(Ideal.from_mapping(mapping))
        return sorted(ideals, key=lambda ideal: ideal.sort_key)

    def conjugate_prime(self, prime: PrimeIdeal) -> PrimeIdeal:
        if prime.label is None:
            return prime
        return PrimeIdeal(prime.p, prime.f, prime.e, (self.trace_omega - prime.label) % prime.p)

    def conjugate(self, ideal: Ideal) -> Ideal:
        return Ideal.from_mapping({self.conjugate_prime(p): e for p, e in ideal.factors})

    def is_galois_stable(self, ideal: Ideal) -> bool:
        return self.conjugate(ideal) == ideal

    def galois_class_key(self, *ideals: Ideal) -> tuple:
        """Canonical key of a tuple of ideals up to the Galois action."""
        plain = tuple(i.sort_key for i in ideals)
        conj = tuple(self.conjugate(i).sort_key for i in ideals)
        return min(plain, conj)


# =============================================================================
# Multiplicative ideal functions
# =============================================================================

def phi_of(ideal: Ideal) -> int:
    """#(Z_F / D)^* for squarefree D."""
    if not ideal.is_squarefree():
        raise NotSquarefree(f"{ideal} is not squarefree")
    return prod(p.norm - 1 for p in ideal.primes)


def psi_of(ideal: Ideal) -> int:
    """Index of Gamma_0(N) in Gamma(1)."""
    return prod(p.norm ** (e - 1) * (p.norm + 1) for p, e in ideal.factors)


# =============================================================================
# Class numbers, units and zeta values
# =============================================================================

def _reduced_indefinite_forms(d: int) -> list[tuple[int, int, int]]:
    forms = []
    for b in range(1, isqrt(d) + 1):
        if (b - d) % 2:
            continue
        ac = (b * b - d) // 4
        for a_abs in positive_divisors(-ac):
            # sqrt(d) - b < 2|a| < sqrt(d) + b
            if (2 * a_abs + b) ** 2 <= d:
                continue
            if 2 * a_abs - b >= 0 and (2 * a_abs - b) ** 2 >= d:
                continue
            for a in (a_abs, -a_abs):
                forms.append((a, b, ac // a))
    return forms


def _rho(form: tuple[int, int, int], d: int) -> tuple[int, int, int]:
    _, b, c = form
    s = isqrt(d)
    modulus = 2 * abs(c)
    b_next = s - (s + b) % modulus
    return (c, b_next, (b_next * b_next - d) // (4 * c))


def indefinite_class_number(d: int) -> int:
    """Narrow class number: the number of cycles of reduced forms."""
    remaining = set(_reduced_indefinite_forms(d))
    cycles = 0
    while remaining:
        start = remaining.pop()
        cycles += 1
        form = _rho(start, d)
        while form != start:
            remaining.discard(form)
            form = _rho(form, d)
    return cycles


def definite_class_number(disc: int) -> int:
    """Class number of the order of negative discriminant disc (reduced forms)."""
    if disc >= 0 or disc % 4 not in (0, 1):
        raise ValueError(f"bad negative discriminant {disc}")
    count = 0
    a = 1
    while 3 * a * a <= -disc:
        for b in range(-a + 1, a + 1):
            if (b * b - disc) % (4 * a):
                continue
            c = (b * b - disc) // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            if math.gcd(math.gcd(a, abs(b)), c) == 1:
                count += 1
        a += 1
    return count


def fundamental_unit_coordinates(d: int) -> tuple[int, int]:
    """(x, y) with x + y*w the fundamental unit > 1, from the continued
    fraction of (sqrt(d) - d mod 2)/2."""
    s = isqrt(d)
    sigma = d % 2
    t_omega, n_omega = (1, (1 - d) // 4) if sigma else (0, -d // 4)
    big_p, big_q = -sigma, 2
    h_prev, h = 0, 1
    k_prev, k = 1, 0
    for _ in range(20 * d + 100):
        if big_q > 0:
            a = (big_p + s) // big_q
        else:
            a = -((big_p + s) // (-big_q) + 1)
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        if k >= 1 and abs(h * h + h * k * t_omega + k * k * n_omega) == 1:
            return h, k
        big_p = a * big_q - big_p
        big_q = (d - big_p * big_p) // big_q
    raise RuntimeError(f"no unit found for d={d}")


def zeta_minus1(d: int) -> Fraction:
    """zeta_F(-1): -1/12 for Q, the sigma_1 sum of Siegel for real quadratic F."""
    if d == 1:
        return Fraction(-1, 12)
    s = isqrt(d)
    total = sum(sigma1((d - b * b) // 4) for b in range(-s, s + 1) if (b - d) % 2 == 0 and b * b < d)
    return Fraction(total, 60)


def numeric_aprim(d: int, precision: int = 30) -> float:
    """4 (2 pi)^{-2n} d^{3/2} zeta_F(2), with zeta_F(2) = zeta(2) L(2, chi_d)."""
    with mpmath.workdps(precision):
        two_pi = 2 * mpmath.pi
        if d == 1:
            return float(4 / two_pi**2 * mpmath.zeta(2))
        chi = [kronecker(d, k) for k in range(d)]
        l_value = mpmath.dirichlet(2, chi)
        return float(4 / two_pi**4 * mpmath.mpf(d) ** 1.5 * mpmath.zeta(2) * l_value)


def euler_product_zeta2(d: int, bound: int) -> tuple[float, float]:
    """Truncated Euler product of zeta_F(2) over p <= bound and a bound on
    the relative error of the truncation."""
    value = mpmath.mpf(1)
    for p in primerange(2, bound + 1):
        p = int(p)
        symbol = 1 if d == 1 else kronecker(d, p)
        local = (1 - mpmath.mpf(p) ** -2) ** -1
        if d != 1:
            local *= (1 - symbol * mpmath.mpf(p) ** -2) ** -1
        value *= local
    tail = mpmath.exp(mpmath.mpf(2 if d != 1 else 1) / bound) - 1
    return float(value), float(tail)


def check_aprim(d: int, precision: int = 30, tolerance: float = 1e-8) -> tuple[Fraction, float]:
    """Compare the exact A_prim with its analytic value; PrecisionTooLow on disagreement."""
    exact = make_field(d).aprim
    numeric = numeric_aprim(d, precision)
    if abs(float(exact) - numeric) >= tolerance:
        raise PrecisionTooLow(
            f"A_prim for d_F={d}: exact {exact} but numeric {numeric:.12f} at {precision} digits"
        )
    return exact, numeric


# Fields are immutable after construction; one instance per discriminant.
_FIELD_CACHE: dict[int, BaseField] = {}


def make_field(d: int) -> BaseField:
    if d not in _FIELD_CACHE:
        _FIELD_CACHE[d] = BaseField(d)
    return _FIELD_CACHE[d]
