"""Polynomials, rational functions and matrices over F_q[z] / F_q(z)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .galois import FieldError, FieldSpec

NEG_INF = -math.inf


class SingularMatrixError(ArithmeticError):
    pass


def _trim(coeffs: Iterable[int]) -> tuple[int, ...]:
    c = list(coeffs)
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


@dataclass(frozen=True)
class Polynomial:
    """Dense polynomial in z; ``coeffs[k]`` is the coefficient of z^k."""

    field: FieldSpec
    coeffs: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _trim(self.coeffs))

    # constructors
    @classmethod
    def zero(cls, field: FieldSpec) -> Polynomial:
        return cls(field, ())

    @classmethod
    def one(cls, field: FieldSpec) -> Polynomial:
        return cls(field, (1,))

    @classmethod
    def const(cls, field: FieldSpec, c: int) -> Polynomial:
        return cls(field, (c,))

    @classmethod
    def monomial(cls, field: FieldSpec, k: int, c: int = 1) -> Polynomial:
        if c == 0:
            return cls(field, ())
        return cls(field, (0,) * k + (c,))

    @classmethod
    def parse(cls, field: FieldSpec, text: str) -> Polynomial:
        """Parse a coefficient list ``"c0,c1,...,ck"``."""
        text = text.strip()
        if not text:
            return cls.zero(field)
        vals = [int(t) for t in text.split(",")]
        for v in vals:
            field._check(v)
        return cls(field, tuple(vals))

    def serialize(self) -> str:
        return ",".join(str(c) for c in self.coeffs) if self.coeffs else "0"

    # queries
    @property
    def degree(self) -> int | float:
        """Degree, or ``NEG_INF`` for the zero polynomial."""
        return len(self.coeffs) - 1 if self.coeffs else NEG_INF

    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    @property
    def lead(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    def weight(self) -> int:
        return sum(1 for c in self.coeffs if c)

    def monomial_exponent(self) -> int | None:
        """k if the polynomial is c*z^k, else None."""
        if self.weight() != 1:
            return None
        return len(self.coeffs) - 1

    def low_degree(self) -> int | None:
        for k, c in enumerate(self.coeffs):
            if c:
                return k
        return None

    def __call__(self, x: int) -> int:
        f = self.field
        acc = 0
        for c in reversed(self.coeffs):
            acc = f.add(f.mul(acc, x), c)
        return acc

    def _same(self, other: Polynomial) -> None:
        if other.field != self.field:
            raise FieldError("field mismatch")

    # arithmetic
    def __add__(self, other: Polynomial) -> Polynomial:
        self._same(other)
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        add = self.field.add_table
        out = list(a)
        for i, c in enumerate(b):
            out[i] = int(add[out[i], c])
        return Polynomial(self.field, out)

    def __neg__(self) -> Polynomial:
        neg = self.field.neg_table
        return Polynomial(self.field, tuple(int(neg[c]) for c in self.coeffs))

    def __sub__(self, other: Polynomial) -> Polynomial:
        return self + (-other)

    def __mul__(self, other: Polynomial | int) -> Polynomial:
        if isinstance(other, int):
            return self.scale(other)
        self._same(other)
        if not self.coeffs or not other.coeffs:
            return Polynomial(self.field, ())
        add, mul = self.field.add_table, self.field.mul_table
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    if b:
                        out[i + j] = int(add[out[i + j], mul[a, b]])
        return Polynomial(self.field, out)

    __rmul__ = __mul__

    def scale(self, c: int) -> Polynomial:
        mul = self.field.mul_table
        return Polynomial(self.field, tuple(int(mul[c, a]) for a in self.coeffs))

    def shift(self, k: int) -> Polynomial:
        """Multiply by z^k (k >= 0)."""
        if not self.coeffs or k == 0:
            return self
        return Polynomial(self.field, (0,) * k + self.coeffs)

    def __pow__(self, k: int) -> Polynomial:
        out = Polynomial.one(self.field)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __divmod__(self, other: Polynomial) -> tuple[Polynomial, Polynomial]:
        self._same(other)
        if not other.coeffs:
            raise ZeroDivisionError("division by the zero polynomial")
        f = self.field
        rem = list(self.coeffs)
        db = len(other.coeffs) - 1
        inv_lead = f.inv(other.lead)
        quot = [0] * max(0, len(rem) - db)
        for k in range(len(rem) - 1, db - 1, -1):
            c = rem[k]
            if c == 0:
                continue
            t = f.mul(c, inv_lead)
            quot[k - db] = t
            for i, b in enumerate(other.coeffs):
                rem[k - db + i] = f.sub(rem[k - db + i], f.mul(t, b))
        return Polynomial(f, quot), Polynomial(f, rem)

    def __floordiv__(self, other: Polynomial) -> Polynomial:
        return divmod(self, other)[0]

    def __mod__(self, other: Polynomial) -> Polynomial:
        return divmod(self, other)[1]

    def __truediv__(self, other: Polynomial) -> RationalFunction:
        return RationalFunction(self, other)

    def monic(self) -> Polynomial:
        if not self.coeffs:
            return self
        return self.scale(self.field.inv(self.lead))

    def __repr__(self) -> str:
        return f"Polynomial({format_poly(self)})"

    def __str__(self) -> str:
        return format_poly(self)


def poly_gcd(a: Polynomial, b: Polynomial) -> Polynomial:
    while b.coeffs:
        a, b = b, a % b
    return a.monic()


def poly_lcm(a: Polynomial, b: Polynomial) -> Polynomial:
    if a.is_zero() or b.is_zero():
        return Polynomial.zero(a.field)
    return ((a * b) // poly_gcd(a, b)).monic()


def format_poly(p: Polynomial, var: str = "z") -> str:
    if p.is_zero():
        return "0"
    terms = []
    for k, c in enumerate(p.coeffs):
        if not c:
            continue
        coef = "" if (c == 1 and k > 0) else str(c)
        if k == 0:
            terms.append(str(c))
        elif k == 1:
            terms.append(f"{coef}{var}")
        else:
            terms.append(f"{coef}{var}^{k}")
    return "+".join(terms)


@dataclass(frozen=True)
class RationalFunction:
    """num/den in lowest terms with monic denominator."""

    num: Polynomial
    den: Polynomial

    def __post_init__(self):
        num, den = self.num, self.den
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        num._same(den)
        if num.is_zero():
            num, den = num, Polynomial.one(num.field)
        else:
            g = poly_gcd(num, den)
            if g.coeffs != (1,):
                num, den = num // g, den // g
            lead_inv = num.field.inv(den.lead)
            num, den = num.scale(lead_inv), den.scale(lead_inv)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @classmethod
    def of(cls, x: Polynomial | RationalFunction) -> RationalFunction:
        if isinstance(x, RationalFunction):
            return x
        return cls(x, Polynomial.one(x.field))

    @classmethod
    def zero(cls, field: FieldSpec) -> RationalFunction:
        return cls(Polynomial.zero(field), Polynomial.one(field))

    @classmethod
    def one(cls, field: FieldSpec) -> RationalFunction:
        return cls(Polynomial.one(field), Polynomial.one(field))

    @property
    def field(self) -> FieldSpec:
        return self.num.field

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __bool__(self) -> bool:
        return not self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den.coeffs == (1,)

    def as_polynomial(self) -> Polynomial:
        if not self.is_polynomial():
            raise ValueError(f"{self} is not a polynomial")
        return self.num

    def __add__(self, other) -> RationalFunction:
        other = RationalFunction.of(other)
        if self.den == other.den:
            return RationalFunction(self.num + other.num, self.den)
        return RationalFunction(self.num * other.den + other.num * self.den, self.den * other.den)

    def __neg__(self) -> RationalFunction:
        return RationalFunction(-self.num, self.den)

    def __sub__(self, other) -> RationalFunction:
        return self + (-RationalFunction.of(other))

    def __mul__(self, other) -> RationalFunction:
        other = RationalFunction.of(other)
        return RationalFunction(self.num * other.num, self.den * other.den)

    def __truediv__(self, other) -> RationalFunction:
        other = RationalFunction.of(other)
        if other.is_zero():
            raise ZeroDivisionError("division by zero rational function")
        return RationalFunction(self.num * other.den, self.den * other.num)

    def inverse(self) -> RationalFunction:
        return RationalFunction.one(self.field) / self

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            other = RationalFunction.of(other)
        if not isinstance(other, RationalFunction):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    def __str__(self) -> str:
        if self.is_polynomial():
            return format_poly(self.num)
        return f"({format_poly(self.num)})/({format_poly(self.den)})"

    __repr__ = __str__


def poly_arith(a, b, op: str):
    """Canonical-form add/mul/div of two polynomials or rational functions."""
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "div":
        if isinstance(a, Polynomial) and isinstance(b, Polynomial):
            if b.is_zero():
                raise ZeroDivisionError("division by the zero polynomial")
            q, r = divmod(a, b)
            return q if r.is_zero() else RationalFunction(a, b)
        return RationalFunction.of(a) / b
    raise ValueError(f"unknown op {op!r}")


Entry = RationalFunction


class PolyMatrix:
    """Dense matrix over F_q(z). Entries are stored as RationalFunction."""

    __slots__ = ("field", "rows", "cols", "entries")

    def __init__(self, field: FieldSpec, entries: Sequence[Sequence]):
        self.field = field
        self.entries: tuple[tuple[RationalFunction, ...], ...] = tuple(
            tuple(_as_entry(field, x) for x in row) for row in entries
        )
        self.rows = len(self.entries)
        self.cols = len(self.entries[0]) if self.entries else 0
        for row in self.entries:
            if len(row) != self.cols:
                raise ValueError("ragged matrix")

    @classmethod
    def zeros(cls, field: FieldSpec, rows: int, cols: int) -> PolyMatrix:
        z = RationalFunction.zero(field)
        return cls(field, [[z] * cols for _ in range(rows)])

    @classmethod
    def identity(cls, field: FieldSpec, n: int) -> PolyMatrix:
        z, o = RationalFunction.zero(field), RationalFunction.one(field)
        return cls(field, [[o if i == j else z for j in range(n)] for i in range(n)])

    @classmethod
    def from_ints(cls, field: FieldSpec, rows: Sequence[Sequence[int]]) -> PolyMatrix:
        return cls(field, [[Polynomial.const(field, c) for c in row] for row in rows])

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __getitem__(self, ij: tuple[int, int]) -> RationalFunction:
        i, j = ij
        return self.entries[i][j]

    def row(self, i: int) -> tuple[RationalFunction, ...]:
        return self.entries[i]

    def col(self, j: int) -> tuple[RationalFunction, ...]:
        return tuple(r[j] for r in self.entries)

    def transpose(self) -> PolyMatrix:
        return PolyMatrix(self.field, [self.col(j) for j in range(self.cols)])

    def __eq__(self, other) -> bool:
        return isinstance(other, PolyMatrix) and self.entries == other.entries

    def __hash__(self) -> int:
        return hash(self.entries)

    def __add__(self, other: PolyMatrix) -> PolyMatrix:
        if self.shape != other.shape:
            raise ValueError("dimension mismatch")
        return PolyMatrix(
            self.field,
            [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)],
        )

    def __matmul__(self, other: PolyMatrix) -> PolyMatrix:
        return mat_mul(self, other)

    def scale(self, c) -> PolyMatrix:
        c = _as_entry(self.field, c)
        return PolyMatrix(self.field, [[c * x for x in row] for row in self.entries])

    def scale_row(self, i: int, c) -> PolyMatrix:
        c = _as_entry(self.field, c)
        rows = [list(r) for r in self.entries]
        rows[i] = [c * x for x in rows[i]]
        return PolyMatrix(self.field, rows)

    def is_polynomial(self) -> bool:
        return all(x.is_polynomial() for row in self.entries for x in row)

    def poly(self, i: int, j: int) -> Polynomial:
        return self.entries[i][j].as_polynomial()

    def evaluate(self, x: int) -> list[list[int]]:
        """Substitute z = x into a polynomial matrix."""
        return [[self.poly(i, j)(x) for j in range(self.cols)] for i in range(self.rows)]

    def serialize(self) -> list[str]:
        """Row-major list of coefficient strings (polynomial entries only)."""
        return [self.poly(i, j).serialize() for i in range(self.rows) for j in range(self.cols)]

    def __str__(self) -> str:
        return "[" + ", ".join("[" + ", ".join(str(x) for x in row) + "]" for row in self.entries) + "]"

    __repr__ = __str__


def _as_entry(field: FieldSpec, x) -> RationalFunction:
    if isinstance(x, RationalFunction):
        return x
    if isinstance(x, Polynomial):
        return RationalFunction.of(x)
    if isinstance(x, int):
        return RationalFunction.of(Polynomial.const(field, x))
    raise TypeError(f"cannot use {type(x).__name__} as matrix entry")


def mat_mul(A: PolyMatrix, B: PolyMatrix) -> PolyMatrix:
    if A.cols != B.rows:
        raise ValueError(f"dimension mismatch: {A.shape} x {B.shape}")
    if A.field != B.field:
        raise FieldError("field mismatch")
    zero = RationalFunction.zero(A.field)
    out = []
    Bt = [B.col(j) for j in range(B.cols)]
    for row in A.entries:
        new_row = []
        for col in Bt:
            acc = zero
            for a, b in zip(row, col):
                if a and b:
                    acc = acc + a * b
            new_row.append(acc)
        out.append(new_row)
    return PolyMatrix(A.field, out)


def nilpotent_inverse(K: PolyMatrix) -> PolyMatrix:
    """(I - zK)^{-1} as the finite series sum_i z^i K^i.

    K must be square and nilpotent; entries may carry extra z powers (memory),
    the series still terminates within ``K.rows`` terms.
    """
    if K.rows != K.cols:
        raise ValueError("K must be square")
    n = K.rows
    f = K.field
    z = PolyMatrix(f, [[Polynomial.monomial(f, 1)]]).entries[0][0]
    zK = K.scale(z)
    total = PolyMatrix.identity(f, n)
    term = PolyMatrix.identity(f, n)
    for _ in range(n):
        term = mat_mul(term, zK)
        if all(x.is_zero() for row in term.entries for x in row):
            return total
        total = total + term
    raise ValueError("K is not nilpotent")


def _poly_rows(M: PolyMatrix) -> list[list[Polynomial]]:
    # clear denominators row by row (row scaling keeps rank)
    out = []
    for row in M.entries:
        den = Polynomial.one(M.field)
        for x in row:
            den = poly_lcm(den, x.den)
        out.append([(x.num * (den // x.den)) for x in row])
    return out


def rank(M: PolyMatrix) -> int:
    """Rank over F_q(z) via fraction-free (Bareiss) elimination on F_q[z]."""
    a = _poly_rows(M)
    rows, cols = M.rows, M.cols
    r = 0
    prev = Polynomial.one(M.field)
    for c in range(cols):
        piv = next((i for i in range(r, rows) if not a[i][c].is_zero()), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        p = a[r][c]
        for i in range(r + 1, rows):
            for j in range(c + 1, cols):
                num = a[i][j] * p - a[r][j] * a[i][c]
                a[i][j] = num // prev
            a[i][c] = Polynomial.zero(M.field)
        prev = p
        r += 1
        if r == rows:
            break
    return r


def determinant(M: PolyMatrix) -> RationalFunction:
    if M.rows != M.cols:
        raise ValueError("determinant of non-square matrix")
    n = M.rows
    f = M.field
    if n == 0:
        return RationalFunction.one(f)
    # scale rows to polynomials, Bareiss, then undo the scaling
    scale = RationalFunction.one(f)
    a = []
    for row in M.entries:
        den = Polynomial.one(f)
        for x in row:
            den = poly_lcm(den, x.den)
        scale = scale * RationalFunction.of(den)
        a.append([x.num * (den // x.den) for x in row])
    sign = 1
    prev = Polynomial.one(f)
    for k in range(n - 1):
        piv = next((i for i in range(k, n) if not a[i][k].is_zero()), None)
        if piv is None:
            return RationalFunction.zero(f)
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[k][j] * a[i][k]) // prev
        prev = a[k][k]
    det = a[n - 1][n - 1]
    if sign < 0:
        det = -det
    return RationalFunction.of(det) / scale


def _minor(M: PolyMatrix, i: int, j: int) -> PolyMatrix:
    return PolyMatrix(
        M.field,
        [[x for c, x in enumerate(row) if c != j] for r, row in enumerate(M.entries) if r != i],
    )


def adjugate(M: PolyMatrix) -> PolyMatrix:
    n = M.rows
    if n == 1:
        return PolyMatrix.identity(M.field, 1)
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            # adj[i][j] = (-1)^{i+j} det(minor(j, i))
            d = determinant(_minor(M, j, i))
            row.append(d if (i + j) % 2 == 0 else -d)
        out.append(row)
    return PolyMatrix(M.field, out)


def rat_inverse(M: PolyMatrix) -> PolyMatrix:
    if M.rows != M.cols:
        raise ValueError("inverse of non-square matrix")
    det = determinant(M)
    if det.is_zero():
        raise SingularMatrixError("matrix is singular over F_q(z)")
    return adjugate(M).scale(det.inverse())


def max_degree(M: PolyMatrix) -> int:
    """Largest entry degree of a polynomial matrix; the zero entry counts as 0."""
    best = 0
    for row in M.entries:
        for x in row:
            if not x.is_polynomial():
                raise ValueError("max_degree needs polynomial entries")
            d = x.num.degree
            if d != NEG_INF and d > best:
                best = int(d)
    return best


def row_degrees(M: PolyMatrix) -> list[int]:
    out = []
    for i in range(M.rows):
        out.append(max_degree(PolyMatrix(M.field, [M.row(i)])))
    return out


def monomial_uniform(M: PolyMatrix) -> tuple[int, list[list[int]]] | None:
    """If every nonzero entry is c*z^L for one shared L, return (L, constants)."""
    L = None
    consts = []
    for row in M.entries:
        crow = []
        for x in row:
            if x.is_zero():
                crow.append(0)
                continue
            if not x.is_polynomial():
                return None
            k = x.num.monomial_exponent()
            if k is None or (L is not None and k != L):
                return None
            L = k
            crow.append(x.num.lead)
        consts.append(crow)
    if L is None:
        L = 0
    return L, consts
