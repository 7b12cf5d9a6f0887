"""Wheel-modulus residue-class sieving.

A wheel is a product M of distinct small primes.  Primes are found by sieving
each residue class a mod M with gcd(a, M) = 1 separately; the neighbouring
class a-1 mod M is co-sieved with the same stride so that every prime p comes
with the complete factorization of p-1.  Classes are independent work units:
nothing here mutates shared state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd, isqrt, prod
from bisect import bisect_left

from .modarith import is_probable_prime

DEFAULT_WHEEL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29)

# Segments are capped so per-class state stays cache/memory friendly.
SEGMENT_CAP = 1 << 21


class InvalidClassError(ValueError):
    """Residue class is not coprime to the wheel modulus."""


class InsufficientSieveBoundError(ValueError):
    """Sieve bound B with B^2 < hi cannot certify residual cofactors prime."""


def simple_sieve(limit: int) -> list:
    """All primes < limit by a plain sieve of Eratosthenes."""
    if limit <= 2:
        return []
    flags = bytearray([1]) * limit
    flags[0] = flags[1] = 0
    for p in range(2, isqrt(limit - 1) + 1):
        if flags[p]:
            flags[p * p :: p] = bytearray(len(range(p * p, limit, p)))
    return [i for i in range(limit) if flags[i]]


@dataclass(frozen=True)
class Wheel:
    """A wheel modulus: distinct primes, their product M, and phi(M)."""

    modulus_primes: tuple = DEFAULT_WHEEL_PRIMES
    M: int = field(init=False)
    phi_M: int = field(init=False)

    def __post_init__(self):
        ps = tuple(self.modulus_primes)
        if not ps:
            raise ValueError("wheel needs at least one prime")
        if len(set(ps)) != len(ps):
            raise ValueError("wheel primes must be distinct")
        for p in ps:
            if not is_probable_prime(p):
                raise ValueError(f"wheel entry {p} is not prime")
        object.__setattr__(self, "modulus_primes", tuple(sorted(ps)))
        object.__setattr__(self, "M", prod(ps))
        object.__setattr__(self, "phi_M", prod(p - 1 for p in ps))


@dataclass(frozen=True)
class FactoredPrime:
    """A prime p with the complete factorization of p-1.

    `factors` is an ascending tuple of (prime, exponent) pairs multiplying to
    p-1.  The packed 64-bit form is derived on demand.
    """

    p: int
    factors: tuple

    @property
    def packed(self) -> int:
        return pack_factors(self.factors)

    @property
    def distinct_primes(self) -> tuple:
        return tuple(q for q, _ in self.factors)


@dataclass
class Segment:
    """One sieved stretch of a residue class: indices k map to base + k*M."""

    class_a: int
    lo: int
    hi: int
    base: int
    flags: bytearray  # primality flags per index
    values: dict  # index -> accumulated factor list for base-1 + k*M


def residue_classes(wheel: Wheel):
    """Yield the residues a mod M with gcd(a, M) = 1, ascending."""
    M = wheel.M
    for a in range(1, M):
        if gcd(a, M) == 1:
            yield a


def _first_in_class(a: int, M: int, lo: int) -> int:
    """Smallest n >= lo with n = a (mod M)."""
    r = lo % M
    return lo + (a - r) % M


def sieve_primes_in_ap(wheel: Wheel, a: int, lo: int, hi: int, sieving_primes=None) -> list:
    """Primes p = a (mod M) with lo <= p < hi, ascending.

    Wheel primes themselves never appear (they are not coprime to M).
    """
    M = wheel.M
    if gcd(a % M, M) != 1:
        raise InvalidClassError(f"gcd({a}, {M}) != 1")
    if hi > 1 << 63:
        raise ValueError("range end exceeds 2^63")
    lo = max(lo, 2)
    if hi <= lo:
        return []
    if sieving_primes is None:
        sieving_primes = simple_sieve(isqrt(hi - 1) + 1)
    out = []
    for seg_lo, seg_hi in _segments(M, lo, hi):
        seg = _sieve_segment_flags(wheel, a % M, seg_lo, seg_hi, sieving_primes)
        base = seg.base
        flags = seg.flags
        out.extend(base + k * M for k in range(len(flags)) if flags[k])
    return out


def _segments(M: int, lo: int, hi: int):
    """Split [lo, hi) into stretches holding at most SEGMENT_CAP class entries."""
    span = M * SEGMENT_CAP
    s = lo
    while s < hi:
        e = min(hi, s + span)
        yield s, e
        s = e


def _sieve_segment_flags(wheel: Wheel, a: int, lo: int, hi: int, sieving_primes) -> Segment:
    """Primality flags for the class a mod M restricted to [lo, hi)."""
    M = wheel.M
    base = _first_in_class(a, M, lo)
    L = 0 if base >= hi else (hi - 1 - base) // M + 1
    flags = bytearray([1]) * L
    if L == 0:
        return Segment(a, lo, hi, base, flags, {})
    wheel_set = set(wheel.modulus_primes)
    for q in sieving_primes:
        if q in wheel_set:
            continue
        if q * q >= hi:
            break
        # indices with q | base + k*M
        minv = pow(M, -1, q)
        k0 = (-base * minv) % q
        if k0 < L:
            flags[k0::q] = bytearray(len(range(k0, L, q)))
    # restore sieving primes that live inside the segment
    for q in sieving_primes:
        if q >= hi:
            break
        if q >= lo and q % M == a and q not in wheel_set:
            flags[(q - base) // M] = 1
    if base == 1:
        flags[0] = 0
    return Segment(a, lo, hi, base, flags, {})


def sieve_factorizations_in_ap(wheel: Wheel, a_minus_1: int, lo: int, hi: int, sieve_bound=None) -> dict:
    """Complete factorizations of every n = a-1 (mod M) with lo <= n < hi.

    Returns {n: [(prime, exponent), ...]} with ascending factor lists.  All
    primes below `sieve_bound` are divided out; a remaining cofactor is a
    single prime because hi <= sieve_bound^2 is enforced.
    """
    M = wheel.M
    if sieve_bound is None:
        sieve_bound = isqrt(max(hi - 1, 0)) + 1
    if sieve_bound * sieve_bound < hi:
        raise InsufficientSieveBoundError(
            f"sieve bound {sieve_bound} cannot certify cofactors below {hi}"
        )
    sieving_primes = simple_sieve(sieve_bound)
    out = {}
    for seg_lo, seg_hi in _segments(M, lo, hi):
        seg = _factor_segment(wheel, a_minus_1 % M, seg_lo, seg_hi, sieving_primes, None)
        out.update(seg.values)
    return out


def _factor_segment(wheel: Wheel, a1: int, lo: int, hi: int, sieving_primes, flags) -> Segment:
    """Co-sieve the class a1 mod M over [lo, hi), factoring every entry.

    With `flags` given (same indexing), only flagged entries accumulate
    factors; others are skipped, which is what the prime pipeline wants.
    """
    M = wheel.M
    base = _first_in_class(a1, M, lo)
    L = 0 if base >= hi else (hi - 1 - base) // M + 1
    values = {}
    if L == 0:
        return Segment(a1, lo, hi, base, bytearray(), values)
    if flags is None:
        flags = bytearray([1]) * L
    rem = [0] * L
    for k in range(L):
        if flags[k]:
            rem[k] = base + k * M
            values[k] = []
    if base == 1 and 0 in values:
        # 1 has the empty factorization
        rem[0] = 1
    wheel_set = set(wheel.modulus_primes)
    # wheel primes divide either every entry of the class or none
    for wp in wheel.modulus_primes:
        if a1 % wp == 0:
            for k, fl in values.items():
                r = rem[k]
                if r <= 1:
                    continue
                e = 0
                while r % wp == 0:
                    r //= wp
                    e += 1
                if e:
                    rem[k] = r
                    fl.append((wp, e))
    for q in sieving_primes:
        if q in wheel_set:
            continue
        if q >= hi:
            break
        minv = pow(M, -1, q)
        k0 = (-base * minv) % q
        for k in range(k0, L, q):
            if flags[k]:
                r = rem[k]
                if r % q:
                    continue
                e = 0
                while r % q == 0:
                    r //= q
                    e += 1
                rem[k] = r
                values[k].append((q, e))
    for k, fl in values.items():
        r = rem[k]
        if r > 1:
            fl.append((r, 1))
    return Segment(a1, lo, hi, base, flags, {base + k * M: fl for k, fl in values.items()})


def factored_primes_in_ap(wheel: Wheel, a: int, lo: int, hi: int, sieving_primes=None):
    """Yield FactoredPrime for each prime p = a (mod M) in [lo, hi), ascending.

    Runs the prime sieve on class a and the factor co-sieve on class a-1 with
    a shared index space, so factorizations are only accumulated at prime
    positions.
    """
    M = wheel.M
    if gcd(a % M, M) != 1:
        raise InvalidClassError(f"gcd({a}, {M}) != 1")
    lo = max(lo, 2)
    if hi <= lo:
        return
    bound = isqrt(hi - 1) + 1
    if sieving_primes is None:
        sieving_primes = simple_sieve(bound)
    for seg_lo, seg_hi in _segments(M, lo, hi):
        pseg = _sieve_segment_flags(wheel, a % M, seg_lo, seg_hi, sieving_primes)
        if not len(pseg.flags):
            continue
        # class of p-1 shares the index space when based one below
        fseg = _factor_segment_for_primes(wheel, pseg, sieving_primes)
        base = pseg.base
        for k in range(len(pseg.flags)):
            if pseg.flags[k]:
                yield FactoredPrime(base + k * M, tuple(fseg[k]))


def _factor_segment_for_primes(wheel: Wheel, pseg: Segment, sieving_primes) -> dict:
    """Factor base-1 + k*M for every flagged index k of a prime segment."""
    M = wheel.M
    base1 = pseg.base - 1
    flags = pseg.flags
    L = len(flags)
    rem = [0] * L
    out = {}
    for k in range(L):
        if flags[k]:
            rem[k] = base1 + k * M
            out[k] = []
    a1 = base1 % M
    wheel_set = set(wheel.modulus_primes)
    for wp in wheel.modulus_primes:
        if a1 % wp == 0:
            for k, fl in out.items():
                r = rem[k]
                e = 0
                while r % wp == 0:
                    r //= wp
                    e += 1
                if e:
                    rem[k] = r
                    fl.append((wp, e))
    for q in sieving_primes:
        if q in wheel_set:
            continue
        minv = pow(M, -1, q)
        k0 = (-base1 * minv) % q
        for k in range(k0, L, q):
            if flags[k]:
                r = rem[k]
                if r % q:
                    continue
                e = 0
                while r % q == 0:
                    r //= q
                    e += 1
                rem[k] = r
                out[k].append((q, e))
    for k, fl in out.items():
        if rem[k] > 1:
            fl.append((rem[k], 1))
    return out


# ---------------------------------------------------------------------------
# Packed 64-bit factor words.
#
# Bit 63 is the overflow flag; bits 0..62 hold Elias-gamma codes of gaps
# between successive odd-prime indices (3 -> 1, 5 -> 2, 7 -> 3, ...), written
# starting at bit 0.  The first code is the index of the smallest odd prime
# factor itself.  A gamma code for v >= 1 with L = bit_length(v) - 1 is
# written as L zero bits, then the bits of v from most significant down.
# Trailing zero bits terminate the stream (no code starts with a zero run
# that reaches the end).  Primes above PACK_PRIME_LIMIT are never packed; for
# the survey's n they are recoverable as the residual cofactor.
# ---------------------------------------------------------------------------

OVERFLOW_FLAG = 1 << 63
_PAYLOAD_BITS = 63
PACK_PRIME_LIMIT = 10**8

_odd_primes = [3, 5, 7]


def _extend_odd_primes(need: int):
    """Grow the odd-prime table until it covers values up to `need`."""
    while _odd_primes[-1] < need:
        limit = max(_odd_primes[-1] * 2, 1000)
        _odd_primes[:] = [p for p in simple_sieve(limit + 1) if p > 2]


def _odd_prime_index(q: int) -> int:
    """1-based index of q in the odd primes (3 -> 1, 5 -> 2, ...)."""
    _extend_odd_primes(q)
    i = bisect_left(_odd_primes, q)
    if i == len(_odd_primes) or _odd_primes[i] != q:
        raise ValueError(f"{q} is not an odd prime")
    return i + 1


def _odd_prime_at(idx: int) -> int:
    while idx > len(_odd_primes):
        _extend_odd_primes(_odd_primes[-1] * 2)
    return _odd_primes[idx - 1]


def pack_factors(factors) -> int:
    """Pack the odd distinct primes of a factorization into one 64-bit word.

    Exponents and the prime 2 are not stored.  If the gamma codes do not fit
    in 63 bits, or an odd prime exceeds PACK_PRIME_LIMIT, the overflow flag
    (bit 63) is returned instead and readers must consult a side table.
    """
    word = 0
    cursor = 0
    prev = 0
    for q, _ in factors:
        if q == 2:
            continue
        if q > PACK_PRIME_LIMIT:
            return OVERFLOW_FLAG
        idx = _odd_prime_index(q)
        gap = idx - prev
        prev = idx
        L = gap.bit_length() - 1
        cursor += L  # zero run
        if cursor + L + 1 > _PAYLOAD_BITS:
            return OVERFLOW_FLAG
        for j in range(L, -1, -1):
            if (gap >> j) & 1:
                word |= 1 << cursor
            cursor += 1
    return word


def unpack_factors(word: int):
    """Decode a packed word into its odd primes, or None on overflow."""
    if word & OVERFLOW_FLAG:
        return None
    out = []
    cursor = 0
    idx = 0
    payload = word & (OVERFLOW_FLAG - 1)
    while payload >> cursor:
        L = 0
        while not (payload >> cursor) & 1:
            cursor += 1
            L += 1
        gap = 0
        for _ in range(L + 1):
            gap = (gap << 1) | ((payload >> cursor) & 1)
            cursor += 1
        idx += gap
        out.append(_odd_prime_at(idx))
    return out
