"""Integer factorization: trial division, Pollard rho, Pollard p-1.

Also hosts the tolerance-window search used to decide whether a noisy key
norm still yields the true prime factors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Optional

# Deterministic Miller-Rabin: these witnesses are exact for n < 3.317e14.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17)
MR_EXACT_LIMIT = 341_550_071_728_321


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin primality test for ``n < MR_EXACT_LIMIT``."""
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n % p == 0:
            return n == p
    if n >= MR_EXACT_LIMIT:
        raise OverflowError(f"{n} is beyond the deterministic primality range")
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
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


@dataclass(frozen=True)
class Factorization:
    """Prime factors of an integer as ``((prime, exponent), ...)`` in ascending order.

    ``cofactor`` is the part of the input left unfactored; it is 1 whenever
    ``complete`` is true.
    """

    factors: tuple[tuple[int, int], ...]
    complete: bool = True
    cofactor: int = 1

    def value(self) -> int:
        out = self.cofactor
        for p, e in self.factors:
            out *= p**e
        return out

    def as_dict(self) -> dict[int, int]:
        return dict(self.factors)

    def same_primes(self, other: "Factorization") -> bool:
        return self.complete and other.complete and self.factors == other.factors


@dataclass(frozen=True)
class FactorPolicy:
    mode: str = "unlimited"
    trial_division_bound: int = 1000
    rho_max_iterations: int = 1_000_000
    digit_threshold: int = 5

    def __post_init__(self):
        if self.mode not in ("unlimited", "limited"):
            raise ValueError(f"unknown factor policy mode {self.mode!r}")
        if self.trial_division_bound < 2:
            raise ValueError("trial_division_bound must be >= 2")
        if self.rho_max_iterations < 1 or self.digit_threshold < 1:
            raise ValueError("rho_max_iterations and digit_threshold must be positive")


UNLIMITED = FactorPolicy()
LIMITED = FactorPolicy(mode="limited")


def _from_counts(counts: dict[int, int], cofactor: int = 1) -> Factorization:
    return Factorization(tuple(sorted(counts.items())), cofactor == 1, cofactor)


def _trial_divide(n: int, bound: Optional[int]) -> tuple[dict[int, int], int]:
    """Divide out every factor ``f <= bound`` (all factors if bound is None).

    Returns the prime counts and the unfactored cofactor. A leftover below
    ``(f)**2`` for the next untried ``f`` is prime and is moved into the counts.
    """
    counts: dict[int, int] = {}
    f = 2
    while f * f <= n:
        if bound is not None and f > bound:
            return counts, n
        if n % f == 0:
            n //= f
            counts[f] = counts.get(f, 0) + 1
        else:
            f += 1 if f == 2 else 2
    if n > 1:
        counts[n] = counts.get(n, 0) + 1
    return counts, 1


def trial_division(n: int) -> Factorization:
    """Factor ``n`` completely by dividing out the smallest factor repeatedly."""
    if n < 1:
        raise ValueError("trial_division requires n >= 1")
    counts, _ = _trial_divide(n, None)
    return _from_counts(counts)


def pollard_rho(n: int, max_iterations: int = 1_000_000, c: int = 1) -> Optional[int]:
    """Floyd-cycle Pollard rho with ``f(x) = x**2 + c mod n``, starting at x = 2.

    Returns a nontrivial divisor, or None when the budget runs out or the gcd
    collapses to ``n``. ``n`` must be odd and composite.
    """
    if n % 2 == 0:
        raise ValueError("strip the factor 2 before calling pollard_rho")
    x = y = 2
    for _ in range(max_iterations):
        x = (x * x + c) % n
        y = (y * y + c) % n
        y = (y * y + c) % n
        d = math.gcd(x - y, n)
        if d == n:
            return None
        if d > 1:
            return d
    return None


def pollard_p_minus_1(n: int, smoothness_bound: int) -> Optional[int]:
    """Pollard p-1 with base 2, raising to ``k`` for k = 2..bound and testing the gcd each step."""
    if n % 2 == 0:
        raise ValueError("pollard_p_minus_1 expects odd n")
    a = 2
    for k in range(2, smoothness_bound + 1):
        a = pow(a, k, n)
        d = math.gcd(a - 1, n)
        if d == n:
            return None
        if d > 1:
            return d
    return None


def _perfect_power(n: int) -> Optional[tuple[int, int]]:
    for k in range(n.bit_length(), 1, -1):
        r = round(n ** (1.0 / k))
        for cand in (r - 1, r, r + 1):
            if cand > 1 and cand**k == n:
                return cand, k
    return None


def _split(n: int, policy: FactorPolicy) -> int:
    """Find a nontrivial divisor of odd composite ``n``; retries until one is found."""
    pp = _perfect_power(n)
    if pp is not None:
        return pp[0]
    c = 1
    while True:
        d = pollard_rho(n, policy.rho_max_iterations, c)
        if d is not None:
            return d
        d = pollard_p_minus_1(n, 10_000)
        if d is not None:
            return d
        c += 1


def _factor_unlimited(n: int, policy: FactorPolicy) -> Factorization:
    if len(str(n)) < policy.digit_threshold:
        return trial_division(n)
    counts, rest = _trial_divide(n, policy.trial_division_bound)
    stack = [rest] if rest > 1 else []
    while stack:
        m = stack.pop()
        if is_prime(m):
            counts[m] = counts.get(m, 0) + 1
            continue
        d = _split(m, policy)
        stack.extend((d, m // d))
    return _from_counts(counts)


@lru_cache(maxsize=65536)
def factor(n: int, policy: FactorPolicy = UNLIMITED) -> Factorization:
    """Factor ``n`` under ``policy``.

    Unlimited mode always completes: short inputs go through trial division,
    longer ones have small factors stripped and the rest split by rho with a
    p-1 fallback. Limited mode only trial-divides up to the policy bound and
    reports ``complete=False`` if an unresolved cofactor remains.
    """
    if n < 1:
        raise ValueError("factor requires n >= 1")
    if policy.mode == "limited":
        counts, rest = _trial_divide(n, policy.trial_division_bound)
        return _from_counts(counts, rest)
    return _factor_unlimited(n, policy)


def ring_candidates(center: int, tolerance: int) -> Iterator[int]:
    """Yield center, center+1, center-1, center+2, ... out to +/-tolerance, skipping values < 1."""
    if center >= 1:
        yield center
    for k in range(1, tolerance + 1):
        yield center + k
        if center - k >= 1:
            yield center - k


def round_norm(noisy_norm: float) -> Optional[int]:
    """Nearest integer (halves round up), clamped to >= 1; None for non-finite input."""
    if not math.isfinite(noisy_norm):
        return None
    return max(1, math.floor(noisy_norm + 0.5))


def noisy_factor_search(
    noisy_norm: float,
    true_factors: Factorization,
    tolerance: int,
    policy: FactorPolicy = UNLIMITED,
) -> tuple[bool, Optional[int]]:
    """Search the tolerance ring around a noisy norm for the true prime factors.

    Equivalent to factoring every value from :func:`ring_candidates` in order
    and stopping at the first whose factorization equals ``true_factors``.
    By unique factorization only one integer can match, so its ring position
    is computed directly instead of factoring the whole window.
    """
    if not true_factors.complete:
        raise ValueError("true_factors must be a complete factorization")
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    center = round_norm(noisy_norm)
    if center is None:
        return False, None
    target = true_factors.value()
    if abs(target - center) > tolerance:
        return False, None
    if factor(target, policy).same_primes(true_factors):
        return True, target
    return False, None
