"""Small finite fields GF(p^m), p^m <= 256, backed by log/antilog tables.

Elements are handled internally as canonical integers: the base-p digits of the
integer are the coefficients of the element as a polynomial in the generator.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

MAX_ORDER = 256


class FieldError(ValueError):
    pass


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    d = 2
    while d * d <= p:
        if p % d == 0:
            return False
        d += 1
    return True


def _poly_mod_p(a: list[int], b: list[int], p: int) -> list[int]:
    # remainder of a / b over GF(p); lists are low-to-high, b monic
    a = list(a)
    db = len(b) - 1
    while len(a) - 1 >= db and any(a):
        while a and a[-1] == 0:
            a.pop()
        if len(a) - 1 < db:
            break
        c = a[-1]
        shift = len(a) - 1 - db
        for i, bi in enumerate(b):
            a[shift + i] = (a[shift + i] - c * bi) % p
        while a and a[-1] == 0:
            a.pop()
    return a


def _is_irreducible(poly: tuple[int, ...], p: int) -> bool:
    """Trial division by every monic polynomial of degree 1..deg/2."""
    m = len(poly) - 1
    if m == 1:
        return True
    for d in range(1, m // 2 + 1):
        for low in product(range(p), repeat=d):
            divisor = list(low) + [1]
            if not _poly_mod_p(list(poly), divisor, p):
                return False
    return True


def _default_reduction(p: int, m: int) -> tuple[int, ...]:
    # lexicographically least monic irreducible, comparing coefficient
    # vectors from the highest non-leading power downwards
    for high_first in product(range(p), repeat=m):
        poly = tuple(reversed(high_first)) + (1,)
        if _is_irreducible(poly, p):
            return poly
    raise FieldError(f"no irreducible polynomial of degree {m} over GF({p})")


@dataclass(frozen=True, eq=False)
class FieldSpec:
    """GF(p^m) with reduction polynomial ``reduction_poly`` (low-to-high, monic).

    Arithmetic works on canonical integers in ``range(order)``. Tables are built
    once at construction; the object is immutable afterwards.
    """

    p: int
    m: int
    reduction_poly: tuple[int, ...]
    add_table: np.ndarray = field(repr=False)
    mul_table: np.ndarray = field(repr=False)
    neg_table: np.ndarray = field(repr=False)
    inv_table: np.ndarray = field(repr=False)
    exp_table: np.ndarray = field(repr=False)
    log_table: np.ndarray = field(repr=False)

    @property
    def order(self) -> int:
        return self.p**self.m

    @property
    def q(self) -> int:
        return self.order

    def __repr__(self) -> str:
        if self.m == 1:
            return f"GF({self.p})"
        return f"GF({self.p}^{self.m})"

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, FieldSpec)
            and self.p == other.p
            and self.m == other.m
            and self.reduction_poly == other.reduction_poly
        )

    def __hash__(self) -> int:
        return hash((self.p, self.m, self.reduction_poly))

    # -- integer-level arithmetic -------------------------------------------------

    def _check(self, a: int) -> None:
        if not 0 <= a < self.order:
            raise FieldError(f"{a} is not an element of {self!r}")

    def add(self, a: int, b: int) -> int:
        return int(self.add_table[a, b])

    def sub(self, a: int, b: int) -> int:
        return int(self.add_table[a, self.neg_table[b]])

    def neg(self, a: int) -> int:
        return int(self.neg_table[a])

    def mul(self, a: int, b: int) -> int:
        return int(self.mul_table[a, b])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of zero field element")
        return int(self.inv_table[a])

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, k: int) -> int:
        if a == 0:
            return 1 if k == 0 else 0
        e = (int(self.log_table[a]) * k) % (self.order - 1)
        return int(self.exp_table[e])

    def digits(self, a: int) -> list[int]:
        """Coefficient vector (length m, low-to-high) of the canonical integer."""
        out = []
        for _ in range(self.m):
            out.append(a % self.p)
            a //= self.p
        return out

    def element(self, value: int) -> FieldElement:
        self._check(value)
        return FieldElement(value, self)

    def elements(self) -> list[FieldElement]:
        return [FieldElement(v, self) for v in range(self.order)]

    @property
    def zero(self) -> FieldElement:
        return FieldElement(0, self)

    @property
    def one(self) -> FieldElement:
        return FieldElement(1, self)


@dataclass(frozen=True)
class FieldElement:
    value: int
    field: FieldSpec

    def _same(self, other: FieldElement) -> None:
        if not isinstance(other, FieldElement) or other.field != self.field:
            raise FieldError("field mismatch")

    def __add__(self, other: FieldElement) -> FieldElement:
        self._same(other)
        return FieldElement(self.field.add(self.value, other.value), self.field)

    def __sub__(self, other: FieldElement) -> FieldElement:
        self._same(other)
        return FieldElement(self.field.sub(self.value, other.value), self.field)

    def __neg__(self) -> FieldElement:
        return FieldElement(self.field.neg(self.value), self.field)

    def __mul__(self, other: FieldElement) -> FieldElement:
        self._same(other)
        return FieldElement(self.field.mul(self.value, other.value), self.field)

    def __truediv__(self, other: FieldElement) -> FieldElement:
        self._same(other)
        return FieldElement(self.field.div(self.value, other.value), self.field)

    def inverse(self) -> FieldElement:
        return FieldElement(self.field.inv(self.value), self.field)

    def __bool__(self) -> bool:
        return self.value != 0

    def __int__(self) -> int:
        return self.value

    def __repr__(self) -> str:
        return f"{self.value}@{self.field!r}"


def add(a: FieldElement, b: FieldElement) -> FieldElement:
    return a + b


def mul(a: FieldElement, b: FieldElement) -> FieldElement:
    return a * b


def inv(a: FieldElement) -> FieldElement:
    return a.inverse()


def _build(p: int, m: int, reduction: tuple[int, ...]) -> FieldSpec:
    q = p**m
    digits = np.array(
        [[(v // p**k) % p for k in range(m)] for v in range(q)], dtype=np.int64
    )
    weights = p ** np.arange(m, dtype=np.int64)

    def encode(vec) -> int:
        return int(np.dot(np.asarray(vec) % p, weights))

    add_t = np.zeros((q, q), dtype=np.int64)
    for a in range(q):
        add_t[a] = ((digits[a] + digits) % p) @ weights
    neg_t = ((-digits) % p) @ weights

    def times_x(vec: list[int]) -> list[int]:
        # multiply by the generator x and reduce modulo the reduction polynomial
        top = vec[-1]
        shifted = [0] + vec[:-1]
        return [(shifted[i] - top * reduction[i]) % p for i in range(m)]

    def slow_mul(a: int, b: int) -> int:
        acc = [0] * m
        cur = list(digits[a])
        for bk in digits[b]:
            if bk:
                acc = [(x + bk * y) % p for x, y in zip(acc, cur)]
            cur = times_x(cur)
        return encode(acc)

    # find a primitive element, then derive log/antilog tables
    exp_t = np.zeros(2 * q, dtype=np.int64)
    log_t = np.zeros(q, dtype=np.int64)
    for g in range(1, q):
        seen = set()
        x = 1
        for k in range(q - 1):
            exp_t[k] = x
            seen.add(x)
            x = slow_mul(x, g)
        if len(seen) == q - 1:
            break
    else:  # pragma: no cover - every finite field has a primitive element
        raise FieldError("no primitive element found")
    for k in range(q - 1, 2 * q):
        exp_t[k] = exp_t[k - (q - 1)]
    for k in range(q - 1):
        log_t[exp_t[k]] = k

    mul_t = np.zeros((q, q), dtype=np.int64)
    nz = np.arange(1, q)
    for a in range(1, q):
        mul_t[a, 1:] = exp_t[log_t[a] + log_t[nz]]
    inv_t = np.zeros(q, dtype=np.int64)
    inv_t[1:] = exp_t[(q - 1 - log_t[nz]) % (q - 1)]

    for arr in (add_t, mul_t, neg_t, inv_t, exp_t, log_t):
        arr.setflags(write=False)
    return FieldSpec(p, m, reduction, add_t, mul_t, neg_t, inv_t, exp_t, log_t)


@lru_cache(maxsize=None)
def make_field(p: int, m: int = 1, reduction_poly: tuple[int, ...] | None = None) -> FieldSpec:
    """Build (or fetch from cache) GF(p^m).

    ``reduction_poly`` is monic, low-to-high; by default the lexicographically
    least irreducible one is used (x^2+x+1 for GF(4)).
    """
    if not is_prime(p):
        raise FieldError(f"characteristic {p} is not prime")
    if m < 1 or p**m > MAX_ORDER:
        raise FieldError(f"GF({p}^{m}) is outside the supported range q <= {MAX_ORDER}")
    if reduction_poly is None:
        reduction = _default_reduction(p, m) if m > 1 else (0, 1)
    else:
        reduction = tuple(int(c) % p for c in reduction_poly)
        if len(reduction) != m + 1 or reduction[-1] != 1:
            raise FieldError("reduction polynomial must be monic of degree m")
        if not _is_irreducible(reduction, p):
            raise FieldError("reduction polynomial is reducible")
    return _build(p, m, reduction)


GF2 = make_field(2, 1)
