"""Least primitive roots mod p and mod p^2, least prime primitive roots, and
the record-threshold check g < sqrt(p) - 2.

All threshold comparisons are exact integer comparisons; nothing here touches
floating point.  The inner loops use CPython's built-in pow, which the test
suite pins against both schoolbook square-and-multiply and the Montgomery
contexts from modarith.
"""

from __future__ import annotations

from dataclasses import dataclass

from .factorsieve import simple_sieve


@dataclass(frozen=True)
class RootReport:
    """Roots of one prime: g mod p, h mod p^2, least prime root, Grosswald flag."""

    p: int
    g: int
    h: int
    g_hat: int
    grosswald_ok: bool


def is_primitive_root(a: int, p: int, distinct_primes_of_p_minus_1) -> bool:
    """Order criterion: a^((p-1)/q) != 1 (mod p) for every prime q | p-1.

    The caller owns the contract that the prime list is exactly the distinct
    primes of p-1; a wrong list silently gives a wrong answer.
    """
    if a % p <= 1:
        # 0 generates nothing, 1 has order 1 (p=2 is handled by callers)
        return p == 2 and a % p == 1
    n = p - 1
    for q in distinct_primes_of_p_minus_1:
        if pow(a, n // q, p) == 1:
            return False
    return True


def least_primitive_root(p: int, factors) -> int:
    """Smallest primitive root mod p.  Candidates run 2, 3, 4, ... including
    composites and perfect powers; g(2) = 1 by convention."""
    if p == 2:
        return 1
    if p == 3:
        return 2
    qs = [q for q, _ in factors]
    for a in range(2, p):
        if is_primitive_root(a, p, qs):
            return a
    raise ValueError(f"{p} has no primitive root; is it prime?")


def least_primitive_root_sq(p: int, factors) -> int:
    """Smallest primitive root mod p^2.

    An a generating mod p also generates mod p^2 unless a^(p-1) = 1 (mod p^2),
    so scan primitive roots mod p in order and test that lift condition.
    h(2) = 3: the least generator mod 4.
    """
    if p == 2:
        return 3
    if p == 3:
        return 2
    qs = [q for q, _ in factors]
    psq = p * p
    n = p - 1
    for a in range(2, p):
        if is_primitive_root(a, p, qs) and pow(a, n, psq) != 1:
            return a
    raise ValueError(f"no primitive root mod {p}^2 found")


def least_prime_primitive_root(p: int, factors) -> int:
    """Smallest prime q that is a primitive root mod p."""
    if p == 2:
        # 2 itself is not a unit mod 2; every odd prime has order 1 = p-1
        return 3
    if p == 3:
        return 2
    qs = [q for q, _ in factors]
    limit = 1 << 8
    while True:
        for cand in simple_sieve(limit):
            if cand >= p:
                break
            if is_primitive_root(cand, p, qs):
                return cand
        if limit > p:
            raise ValueError(f"no prime primitive root below {p}")
        limit <<= 2


def grosswald_check(p: int, g: int) -> bool:
    """True iff g < sqrt(p) - 2, decided exactly as (g+2)^2 < p."""
    return (g + 2) * (g + 2) < p


def root_report(p: int, factors) -> RootReport:
    """Compute all three roots and the Grosswald flag for one factored prime."""
    g = least_primitive_root(p, factors)
    h = _lift_h(p, factors, g)
    g_hat = least_prime_primitive_root(p, factors)
    return RootReport(p, g, h, g_hat, grosswald_check(p, g))


def _lift_h(p: int, factors, g: int) -> int:
    """h given that g is already the least primitive root mod p."""
    if p == 2:
        return 3
    if p == 3:
        return 2
    psq = p * p
    n = p - 1
    if pow(g, n, psq) != 1:
        return g
    qs = [q for q, _ in factors]
    for a in range(g + 1, p):
        if is_primitive_root(a, p, qs) and pow(a, n, psq) != 1:
            return a
    raise ValueError(f"no primitive root mod {p}^2 found")
