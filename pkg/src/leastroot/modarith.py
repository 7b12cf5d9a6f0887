"""Fixed-width modular arithmetic: Montgomery contexts, modular exponentiation,
and primality tests for moduli up to 126 bits.

The Montgomery context implements word-oriented REDC with the word size chosen
from the modulus: 64-bit words for moduli below 2^63, 128-bit words up to
2^126.  Conversion in and out of the Montgomery domain happens per call, so
results are always ordinary residues.
"""

from __future__ import annotations

_WORD_SINGLE = 64
_WORD_DOUBLE = 128

_MAX_MODULUS_BITS = 126


class InvalidModulusError(ValueError):
    """Modulus is even, too small, or too large for a Montgomery context."""


class BadFactorizationError(ValueError):
    """A supplied factor list does not multiply to the expected value."""


class MontgomeryContext:
    """Precomputed constants for reduction-free multiplication mod one odd modulus.

    Immutable after construction; safe to share across threads.
    """

    __slots__ = ("modulus", "neg_inv", "r2", "width", "_w", "_mask")

    def __init__(self, modulus: int):
        if modulus < 3 or modulus % 2 == 0:
            raise InvalidModulusError(f"modulus must be odd and >= 3, got {modulus}")
        if modulus.bit_length() > _MAX_MODULUS_BITS:
            raise InvalidModulusError(
                f"modulus must be below 2^{_MAX_MODULUS_BITS}, got {modulus.bit_length()} bits"
            )
        self.modulus = modulus
        self.width = "single" if modulus < (1 << 63) else "double"
        w = _WORD_SINGLE if self.width == "single" else _WORD_DOUBLE
        self._w = w
        self._mask = (1 << w) - 1
        # Newton iteration doubles correct low bits each round; 7 rounds cover 128.
        inv = modulus
        for _ in range(7):
            inv = (inv * (2 - modulus * inv)) & self._mask
        self.neg_inv = ((1 << w) - inv) & self._mask
        self.r2 = (1 << (2 * w)) % modulus

    def _redc(self, t: int) -> int:
        k = ((t & self._mask) * self.neg_inv) & self._mask
        u = (t + k * self.modulus) >> self._w
        return u - self.modulus if u >= self.modulus else u

    def to_mont(self, a: int) -> int:
        """Map an ordinary residue into the Montgomery domain."""
        return self._redc(a * self.r2)

    def from_mont(self, a: int) -> int:
        """Map a Montgomery-domain value back to an ordinary residue."""
        return self._redc(a)

    def mul(self, a: int, b: int) -> int:
        """Multiply two Montgomery-domain values, result in the domain."""
        return self._redc(a * b)

    def pow(self, base: int, exp: int) -> int:
        """base**exp mod modulus via Montgomery square-and-multiply.

        Takes and returns ordinary residues; O(log exp) multiplications.
        """
        if exp < 0:
            raise ValueError("negative exponent")
        one = self._redc(self.r2)  # R mod m, the domain image of 1
        if exp == 0:
            return self.from_mont(one)
        x = self.to_mont(base % self.modulus)
        acc = one
        for bit in bin(exp)[2:]:
            acc = self._redc(acc * acc)
            if bit == "1":
                acc = self._redc(acc * x)
        return self.from_mont(acc)


def mont_new(modulus: int) -> MontgomeryContext:
    """Build a Montgomery context for an odd modulus, 3 <= modulus < 2^126."""
    return MontgomeryContext(modulus)


def mont_pow(ctx: MontgomeryContext, base: int, exp: int) -> int:
    """base**exp mod ctx.modulus through the Montgomery path."""
    return ctx.pow(base, exp)


# Strong-probable-prime bases: the first 12 primes form a deterministic test
# for every n < 318665857834031151167461 (> 2^64), per the Sorenson/Webster
# verified base sets.
_SPRP_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)

_SMALL_PRIME_SET = frozenset(_SPRP_BASES)


def is_probable_prime(n: int) -> bool:
    """Strong-probable-prime test, deterministic for all n < 2^64.

    Above 2^64 the same 12 bases are applied, so the verdict is only
    probabilistic there.
    """
    if n < 2:
        return False
    if n in _SMALL_PRIME_SET:
        return True
    if n % 2 == 0:
        return False
    for p in _SPRP_BASES:
        if n % p == 0:
            return False
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _SPRP_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


LUCAS_WITNESS_CAP = 1000


def lucas_certify(n: int, factors_of_n_minus_1) -> bool:
    """Certify primality of n from the complete factorization of n-1.

    True iff some witness a in [2, 2 + cap) satisfies a^(n-1) = 1 (mod n) and
    a^((n-1)/q) != 1 (mod n) for every distinct prime q | n-1.  A failed
    Fermat condition proves compositeness immediately.  If the witness cap is
    exhausted without a certificate the verdict is False (for genuine primes a
    witness exists far below the cap: any primitive root works).
    """
    if n < 3:
        return n == 2
    prod = 1
    for q, e in factors_of_n_minus_1:
        prod *= q**e
    if prod != n - 1:
        raise BadFactorizationError(
            f"factor list multiplies to {prod}, expected {n - 1}"
        )
    distinct = [q for q, _ in factors_of_n_minus_1]
    cofactors = [(n - 1) // q for q in distinct]
    for a in range(2, 2 + LUCAS_WITNESS_CAP):
        if a >= n:
            break
        if pow(a, n - 1, n) != 1:
            return False
        if all(pow(a, c, n) != 1 for c in cofactors):
            return True
    return False
