"""Exact arithmetic of Dirichlet characters modulo a prime.

Characters are indexed by j in {0, .., q-2} against the least primitive root
g of q: chi_j(g^k) = e(jk/(q-1)).  Every character value is drawn from a
single precomputed table of (q-1)-th roots of unity, so the closed-form
identities below hold to near machine precision even after O(q^2)-term
accumulations.  For prime q every nonprincipal character is primitive, and
chi_j is even exactly when j is even.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class NotPrimeError(ValueError):
    """Raised when a modulus fails the primality check; carries a witness factor."""

    def __init__(self, q: int, witness: int | None = None):
        self.q = q
        self.witness = witness
        msg = f"modulus {q} is not prime"
        if witness is not None:
            msg += f" (witness factor {witness})"
        super().__init__(msg)


class CoprimalityError(ValueError):
    """Raised when an identity stated under (mn, q) = 1 is called with q | mn."""


class CharacterDomainError(ValueError):
    """Raised when an operation requires a character of different parity/primitivity."""


def smallest_factor(n: int) -> int | None:
    """Least prime factor of n, or None if n is prime (n >= 2)."""
    if n < 2:
        return n
    if n % 2 == 0:
        return 2 if n > 2 else None
    f = 3
    while f * f <= n:
        if n % f == 0:
            return f
        f += 2
    return None


def is_prime(n: int) -> bool:
    return n >= 2 and smallest_factor(n) is None


def _prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def primitive_root(q: int) -> int:
    """Least primitive root of the prime q, found by ascending search."""
    if q < 3:
        raise ValueError(f"need q >= 3, got {q}")
    w = smallest_factor(q)
    if w is not None:
        raise NotPrimeError(q, w)
    factors = _prime_factors(q - 1)
    for g in range(2, q):
        if all(pow(g, (q - 1) // p, q) != 1 for p in factors):
            return g
    raise AssertionError(f"no primitive root found for prime {q}")  # unreachable


@dataclass(frozen=True)
class PrimeModulus:
    q: int
    g: int
    phi: int

    @classmethod
    def for_prime(cls, q: int) -> "PrimeModulus":
        return cls(q=q, g=primitive_root(q), phi=q - 1)


class CharacterTable:
    """All Dirichlet characters mod a prime q via a discrete-log table.

    Immutable after construction; safe to share across threads.
    """

    def __init__(self, q: int):
        mod = PrimeModulus.for_prime(q)
        self.modulus = mod
        self.q = q
        self.root_of_unity_order = q - 1
        dlog = np.zeros(q, dtype=np.int64)
        a = 1
        for k in range(q - 1):
            dlog[a] = k
            a = a * mod.g % q
        self.dlog = dlog
        self.roots = np.exp(2j * np.pi * np.arange(q - 1) / (q - 1))
        # inverse of a is g^{-dlog(a)}
        pow_g = np.ones(q - 1, dtype=np.int64)
        for k in range(1, q - 1):
            pow_g[k] = pow_g[k - 1] * mod.g % q
        inv = np.zeros(q, dtype=np.int64)
        inv[1:] = pow_g[(q - 1 - dlog[1:]) % (q - 1)]
        self.inverse = inv
        self._gauss: np.ndarray | None = None

    def chi(self, j: int, a):
        """chi_j(a); accepts scalars or integer arrays, zero on multiples of q."""
        a_arr = np.asarray(a, dtype=np.int64) % self.q
        vals = self.roots[(j * self.dlog[a_arr]) % self.root_of_unity_order]
        vals = np.where(a_arr == 0, 0.0 + 0.0j, vals)
        if np.isscalar(a) or np.ndim(a) == 0:
            return complex(vals)
        return vals

    def chi_row(self, j: int) -> np.ndarray:
        """Array of chi_j(a) for a = 0..q-1."""
        vals = self.roots[(j * self.dlog) % self.root_of_unity_order].copy()
        vals[0] = 0.0
        return vals

    def character(self, j: int) -> "Character":
        if not 0 <= j < self.root_of_unity_order:
            raise ValueError(f"character index {j} outside 0..{self.root_of_unity_order - 1}")
        return Character(self, j)

    def gauss_sums(self) -> np.ndarray:
        """tau(chi_j) for every j, computed once by direct summation."""
        if self._gauss is None:
            q = self.q
            e_q = np.exp(2j * np.pi * np.arange(q) / q)
            tau = np.empty(q - 1, dtype=np.complex128)
            for j in range(q - 1):
                tau[j] = np.dot(self.chi_row(j)[1:], e_q[1:])
            self._gauss = tau
        return self._gauss


@dataclass(frozen=True)
class Character:
    table: CharacterTable
    index: int

    def __call__(self, a):
        return self.table.chi(self.index, a)

    @property
    def q(self) -> int:
        return self.table.q

    @property
    def is_even(self) -> bool:
        return self.index % 2 == 0

    @property
    def is_principal(self) -> bool:
        return self.index == 0

    @property
    def is_primitive(self) -> bool:
        # all nonprincipal characters mod a prime are primitive
        return self.index != 0

    @property
    def conjugate(self) -> "Character":
        return Character(self.table, (-self.index) % self.table.root_of_unity_order)


def enumerate_characters(q_or_table, parity: str = "all", primitive_only: bool = False) -> list[int]:
    """Indices j of characters mod q matching the parity/primitivity filters."""
    table = q_or_table if isinstance(q_or_table, CharacterTable) else CharacterTable(q_or_table)
    if parity not in ("even", "odd", "all"):
        raise ValueError(f"parity must be even/odd/all, got {parity!r}")
    out = []
    for j in range(table.root_of_unity_order):
        if primitive_only and j == 0:
            continue
        if parity == "even" and j % 2 != 0:
            continue
        if parity == "odd" and j % 2 != 1:
            continue
        out.append(j)
    return out


def even_primitive_indices(table: CharacterTable) -> list[int]:
    return enumerate_characters(table, parity="even", primitive_only=True)


def gauss_sum(chi: Character) -> complex:
    return complex(chi.table.gauss_sums()[chi.index])


def gauss_product_identity(chi: Character) -> tuple[complex, float]:
    """(tau(conj chi) * tau(chi), q) for even primitive chi."""
    if not chi.is_primitive:
        raise CharacterDomainError("identity tau(conj chi) tau(chi) = q needs a primitive character")
    if not chi.is_even:
        raise CharacterDomainError("identity tau(conj chi) tau(chi) = q is stated for even characters")
    lhs = gauss_sum(chi.conjugate) * gauss_sum(chi)
    return lhs, float(chi.q)


def kloosterman(a: int, b: int, q: int) -> float:
    """S(a, b; q) = sum over units x of e((ax + b/x)/q); real-valued."""
    w = smallest_factor(q)
    if w is not None:
        raise NotPrimeError(q, w)
    x = np.arange(1, q, dtype=np.int64)
    inv = _inverse_table(q)
    phase = (a % q) * x + (b % q) * inv[1:]
    s = np.exp(2j * np.pi * (phase % q) / q).sum()
    if abs(s.imag) > 1e-8 * max(1.0, abs(s.real)):
        raise AssertionError(f"Kloosterman sum S({a},{b};{q}) not real: {s}")
    return float(s.real)


def _inverse_table(q: int) -> np.ndarray:
    inv = np.zeros(q, dtype=np.int64)
    for x in range(1, q):
        inv[x] = pow(x, -1, q)
    return inv


def _require_coprime(m: int, n: int, q: int) -> None:
    if (m * n) % q == 0:
        raise CoprimalityError(f"(mn, q) = 1 required: m={m}, n={n}, q={q}")


def orthogonality_sum(table: CharacterTable, m: int, n: int) -> tuple[complex, complex]:
    """Even-primitive orthogonality: direct enumeration vs (1/2) sum over signs of
    [phi(q) * 1_{m = +-n mod q} - 1]."""
    q = table.q
    _require_coprime(m, n, q)
    dn, dm = int(table.dlog[n % q]), int(table.dlog[m % q])
    order = table.root_of_unity_order
    direct = complex(sum(table.roots[(j * (dn - dm)) % order] for j in even_primitive_indices(table)))
    phi = table.modulus.phi
    closed = 0.5 * sum((phi if (m - s * n) % q == 0 else 0) - 1 for s in (1, -1))
    return direct, complex(closed)


def gauss_twisted_sum(table: CharacterTable, m: int, n: int, sign: int) -> tuple[complex, complex]:
    """Sum over all primitive chi of chi(+-mn) tau(conj chi) vs phi(q) e(+-nm/q) + 1."""
    q = table.q
    _require_coprime(m, n, q)
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    arg = (sign * m * n) % q
    tau = table.gauss_sums()
    order = table.root_of_unity_order
    direct = complex(sum(table.chi(j, arg) * tau[(-j) % order] for j in range(1, order)))
    closed = table.modulus.phi * np.exp(2j * np.pi * arg / q) + 1
    return direct, complex(closed)


def inverse_twisted_sum(table: CharacterTable, m: int, n: int, sign: int) -> tuple[complex, complex]:
    """Sum over all primitive chi of chi(+-m nbar) tau(chi) vs phi(q) e(+-n mbar/q) + 1."""
    q = table.q
    _require_coprime(m, n, q)
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    nbar = int(table.inverse[n % q])
    mbar = int(table.inverse[m % q])
    arg = (sign * m * nbar) % q
    tau = table.gauss_sums()
    order = table.root_of_unity_order
    direct = complex(sum(table.chi(j, arg) * tau[j] for j in range(1, order)))
    closed = table.modulus.phi * np.exp(2j * np.pi * ((sign * n * mbar) % q) / q) + 1
    return direct, complex(closed)


def gauss_square_identity(table: CharacterTable, m: int, n: int) -> tuple[complex, complex]:
    """Sum over even primitive chi of conj(chi)(mn) tau(chi)^2 vs
    (1/2) phi(q) [S(1, mn; q) + S(1, -mn; q)] - 1."""
    q = table.q
    _require_coprime(m, n, q)
    tau = table.gauss_sums()
    mn = (m * n) % q
    direct = complex(
        sum(np.conj(table.chi(j, mn)) * tau[j] ** 2 for j in even_primitive_indices(table))
    )
    closed = 0.5 * table.modulus.phi * (kloosterman(1, mn, q) + kloosterman(1, -mn, q)) - 1
    return direct, complex(closed)
