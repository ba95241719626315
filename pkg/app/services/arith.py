"""
Exact integer and rational primitives: factorization, multiplicative
functions and quadratic symbols.
"""
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt, prod
from typing import Optional

from sympy import divisor_sigma, divisors, factorint, isprime, totient
from sympy.functions.combinatorial.numbers import kronecker_symbol, legendre_symbol

Rational = Fraction


@dataclass(frozen=True)
class FactoredInteger:
    """Sign and (prime, exponent) pairs in increasing prime order."""

    sign: int
    factors: tuple[tuple[int, int], ...]

    @property
    def value(self) -> int:
        return self.sign * prod(p**e for p, e in self.factors)

    @property
    def primes(self) -> list[int]:
        return [p for p, _ in self.factors]

    def as_dict(self) -> dict[int, int]:
        return dict(self.factors)


def factor(n: int) -> FactoredInteger:
    """Factor a nonzero integer; factor(1) is the empty product."""
    if n == 0:
        raise ValueError("cannot factor 0")
    pairs = tuple(sorted((int(p), int(e)) for p, e in factorint(abs(n)).items()))
    return FactoredInteger(sign=1 if n > 0 else -1, factors=pairs)


def is_prime(n: int) -> bool:
    return bool(isprime(n))


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a/n)."""
    return int(kronecker_symbol(a, n))


def sigma1(n: int) -> int:
    """Sum of the positive divisors of n."""
    if n < 1:
        raise ValueError(f"sigma1 needs n >= 1, got {n}")
    return int(divisor_sigma(n, 1))


def euler_phi(n: int) -> int:
    if n < 1:
        raise ValueError(f"euler_phi needs n >= 1, got {n}")
    return int(totient(n))


def positive_divisors(n: int) -> list[int]:
    return [int(d) for d in divisors(n)]


def is_squarefree(n: int) -> bool:
    return all(e == 1 for _, e in factor(n).factors)


def is_fundamental(d: int) -> bool:
    """True for discriminants of quadratic fields (d != 1)."""
    if d in (0, 1):
        return False
    if d % 4 == 1:
        return is_squarefree(d)
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and is_squarefree(m)
    return False


def squarefree_kernel(n: int) -> int:
    """The squarefree integer with the same square class as n."""
    f = factor(n)
    return f.sign * prod(p for p, e in f.factors if e % 2 == 1)


def valuation(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if n == 0:
        raise ValueError("valuation of 0 is infinite")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def rational_valuation(x: Fraction, p: int) -> int:
    return valuation(x.numerator, p) - valuation(x.denominator, p)


def rational_sqrt(x: Fraction) -> Optional[Fraction]:
    """Exact nonnegative square root of x when x is a rational square."""
    if x < 0:
        return None
    num, den = isqrt(x.numerator), isqrt(x.denominator)
    if num * num == x.numerator and den * den == x.denominator:
        return Fraction(num, den)
    return None


def legendre(a: int, p: int) -> int:
    """Legendre symbol modulo an odd prime, or the square test modulo 2."""
    a %= p
    if a == 0:
        return 0
    if p == 2:
        return 1
    return int(legendre_symbol(a, p))
