"""Exact Gaussian-integer arithmetic and the prime pool nodes draw their keys from."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .factorint import MR_EXACT_LIMIT, is_prime

INT64_MAX = 2**63 - 1


def _checked(v: int) -> int:
    if abs(v) > INT64_MAX:
        raise OverflowError(f"Gaussian integer component {v} exceeds 64-bit range")
    return v


@dataclass(frozen=True, order=True)
class GaussianInt:
    """The Gaussian integer ``re + im*i``."""

    re: int
    im: int

    def __post_init__(self):
        _checked(self.re)
        _checked(self.im)

    def __mul__(self, other: "GaussianInt") -> "GaussianInt":
        return mul(self, other)

    def __complex__(self) -> complex:
        return complex(self.re, self.im)

    def norm(self) -> int:
        return norm(self)

    def conjugate(self) -> "GaussianInt":
        return GaussianInt(self.re, -self.im)

    def __str__(self) -> str:
        sign = "-" if self.im < 0 else "+"
        return f"{self.re}{sign}{abs(self.im)}i"


ONE = GaussianInt(1, 0)


def norm(x: GaussianInt) -> int:
    return _checked(x.re * x.re + x.im * x.im)


def mul(x: GaussianInt, y: GaussianInt) -> GaussianInt:
    return GaussianInt(
        _checked(x.re * y.re - x.im * y.im),
        _checked(x.re * y.im + x.im * y.re),
    )


def product(xs) -> GaussianInt:
    out = ONE
    for x in xs:
        out = mul(out, x)
    return out


def is_gaussian_prime(x: GaussianInt) -> bool:
    """Primality in Z[i].

    Off the axes, ``x`` is prime iff its norm is a rational prime. On an axis
    it is an associate of a rational integer, which stays prime in Z[i] only
    when that integer is a prime congruent to 3 mod 4.
    """
    a, b = abs(x.re), abs(x.im)
    if a and b:
        return is_prime(norm(x))
    m = a or b
    return m % 4 == 3 and is_prime(m)


def _two_squares(q: int) -> GaussianInt:
    # q is a prime = 1 mod 4, so exactly one a >= b > 0 exists.
    for b in range(1, math.isqrt(q // 2) + 1):
        a = math.isqrt(q - b * b)
        if a * a + b * b == q:
            return GaussianInt(a, b)
    raise ArithmeticError(f"{q} is not a sum of two squares")


@dataclass(frozen=True)
class PrimePool:
    """First-quadrant Gaussian primes ``(a, b)``, ``a >= b > 0``, one per rational prime norm."""

    members: tuple[GaussianInt, ...]
    norm_min: int
    norm_max: int

    def __len__(self) -> int:
        return len(self.members)

    @property
    def norms(self) -> tuple[int, ...]:
        return tuple(norm(x) for x in self.members)

    def check_capacity(self, node_count: int) -> None:
        """Raise if ``node_count`` distinct members could multiply past the exact range."""
        if node_count > len(self.members):
            raise ValueError(
                f"pool has {len(self.members)} primes, cannot give {node_count} nodes distinct ones"
            )
        largest = math.prod(sorted(self.norms)[-node_count:])
        if largest >= MR_EXACT_LIMIT:
            raise OverflowError(
                f"product norm {largest} of {node_count} pool primes is too large; shrink the pool"
            )


def generate_pool(norm_min: int = 5, norm_max: int = 61) -> PrimePool:
    if norm_min < 5 or norm_max < norm_min:
        raise ValueError(f"pool bounds need 5 <= norm_min <= norm_max, got [{norm_min}, {norm_max}]")
    members = tuple(
        _two_squares(q)
        for q in range(norm_min, norm_max + 1)
        if q % 4 == 1 and is_prime(q)
    )
    if not members:
        raise ValueError(f"no rational prime = 1 mod 4 in [{norm_min}, {norm_max}]")
    return PrimePool(members, norm_min, norm_max)
