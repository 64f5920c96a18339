"""Exact multi-index and polynomial arithmetic over the rationals.

A monomial is an exponent tuple (one nonnegative int per variable) and a
polynomial is a sparse map from exponent tuple to Fraction.  Everything in
this module is exact; conversion to floating point happens only at the SDP
boundary.  This makes identity tests (e.g. re-expanding a Gram certificate
and comparing coefficients) fully reliable.

The module also provides the monomial bases, multinomial coefficients,
quadratic/quartic matrix forms and the two lift operations

    LINEAR:     p  ->  (x_1 + ... + x_n)^r * p
    QUADRATIC:  p  ->  (x_1^2 + ... + x_n^2)^r * p

used throughout the package, plus coefficient-norm bounds with certified
suprema on the unit box and on Euclidean balls.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import comb, factorial, isqrt
from typing import Iterable, Iterator, Mapping

MultiIndex = tuple[int, ...]

RatLike = int | Fraction | str


def _rat(value: RatLike) -> Fraction:
    """Coerce ints, Fractions and 'p/q' / decimal strings to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # Floats convert exactly (binary -> rational); used at the SDP boundary.
        return Fraction(value)
    return Fraction(str(value))


def degree(alpha: MultiIndex) -> int:
    return sum(alpha)


def grlex_key(alpha: MultiIndex):
    """Sort key for graded lexicographic order.

    Monomials are compared first by total degree, then lexicographically with
    x_1 > x_2 > ... (so for n=2, degree 1 lists (1,0) before (0,1)).
    """
    return (sum(alpha), tuple(-a for a in alpha))


def multinomial(alpha: MultiIndex) -> int:
    """|alpha|! / (alpha_1! * ... * alpha_n!), exact."""
    total = sum(alpha)
    out = factorial(total)
    for a in alpha:
        out //= factorial(a)
    return out


def _compositions(total: int, parts: int) -> Iterator[MultiIndex]:
    """All exponent tuples of given total degree, in descending-lex order."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def monomial_basis(nvars: int, d: int, exact_degree: bool = False) -> list[MultiIndex]:
    """Monomials with |alpha| <= d (or == d) in graded lexicographic order.

    Counts: binom(n+d, d) for the <= variant, binom(n+d-1, d) for exact degree.
    """
    if nvars < 1:
        raise ValueError("nvars must be >= 1")
    if d < 0:
        raise ValueError("degree must be >= 0")
    degrees = [d] if exact_degree else range(d + 1)
    out: list[MultiIndex] = []
    for dd in degrees:
        out.extend(_compositions(dd, nvars))
    return out


class Poly:
    """Sparse exact-coefficient polynomial in ``nvars`` variables.

    Immutable by convention: all operations return new instances, zero
    coefficients are never stored.
    """

    __slots__ = ("nvars", "_terms")

    def __init__(self, nvars: int, terms: Mapping[MultiIndex, RatLike] | None = None):
        if nvars < 1:
            raise ValueError("nvars must be >= 1")
        self.nvars = nvars
        cleaned: dict[MultiIndex, Fraction] = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != nvars or any(a < 0 for a in alpha):
                raise ValueError(f"bad multi-index {alpha} for nvars={nvars}")
            c = _rat(c)
            if c != 0:
                cleaned[alpha] = c
        self._terms = cleaned

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, c: RatLike) -> "Poly":
        return cls(nvars, {(0,) * nvars: _rat(c)})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "Poly":
        exp = [0] * nvars
        exp[i] = 1
        return cls(nvars, {tuple(exp): 1})

    @classmethod
    def sum_of_variables(cls, nvars: int, power: int = 1) -> "Poly":
        """x_1^power + ... + x_n^power (power 1 or 2 are the lift multipliers)."""
        terms = {}
        for i in range(nvars):
            exp = [0] * nvars
            exp[i] = power
            terms[tuple(exp)] = Fraction(1)
        return cls(nvars, terms)

    # -- basic queries -------------------------------------------------

    def coeff(self, alpha: MultiIndex) -> Fraction:
        return self._terms.get(tuple(alpha), Fraction(0))

    def items(self) -> Iterable[tuple[MultiIndex, Fraction]]:
        return self._terms.items()

    def monomials(self) -> list[MultiIndex]:
        return sorted(self._terms, key=grlex_key)

    def is_zero(self) -> bool:
        return not self._terms

    def total_degree(self) -> int:
        if not self._terms:
            return 0
        return max(sum(a) for a in self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Poly)
            and self.nvars == other.nvars
            and self._terms == other._terms
        )

    def __hash__(self):
        return hash((self.nvars, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        if not self._terms:
            return "Poly(0)"
        parts = []
        for alpha in self.monomials():
            c = self._terms[alpha]
            mono = "*".join(
                f"x{i}^{e}" if e > 1 else f"x{i}"
                for i, e in enumerate(alpha)
                if e > 0
            )
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return "Poly(" + " + ".join(parts) + ")"

    # -- arithmetic ------------------------------------------------------

    def _check_compatible(self, other: "Poly") -> None:
        if self.nvars != other.nvars:
            raise ValueError("variable-count mismatch")

    def __add__(self, other: "Poly") -> "Poly":
        self._check_compatible(other)
        terms = dict(self._terms)
        for alpha, c in other._terms.items():
            terms[alpha] = terms.get(alpha, Fraction(0)) + c
        return Poly(self.nvars, terms)

    def __neg__(self) -> "Poly":
        return Poly(self.nvars, {a: -c for a, c in self._terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, Poly):
            self._check_compatible(other)
            terms: dict[MultiIndex, Fraction] = {}
            for a1, c1 in self._terms.items():
                for a2, c2 in other._terms.items():
                    key = tuple(x + y for x, y in zip(a1, a2))
                    terms[key] = terms.get(key, Fraction(0)) + c1 * c2
            return Poly(self.nvars, terms)
        c = _rat(other)
        return Poly(self.nvars, {a: c * v for a, v in self._terms.items()})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Poly":
        if k < 0:
            raise ValueError("negative power")
        out = Poly.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    def evaluate(self, point: Iterable[RatLike]) -> Fraction:
        pt = [_rat(v) for v in point]
        if len(pt) != self.nvars:
            raise ValueError("point dimension mismatch")
        total = Fraction(0)
        for alpha, c in self._terms.items():
            term = c
            for x, e in zip(pt, alpha):
                if e:
                    term *= x**e
            total += term
        return total


@dataclass(frozen=True)
class SymMatrix:
    """Exact rational symmetric matrix."""

    n: int
    rows: tuple[tuple[Fraction, ...], ...]

    @classmethod
    def from_rows(cls, rows) -> "SymMatrix":
        data = tuple(tuple(_rat(v) for v in row) for row in rows)
        n = len(data)
        if any(len(row) != n for row in data):
            raise ValueError("matrix is not square")
        for i in range(n):
            for j in range(i + 1, n):
                if data[i][j] != data[j][i]:
                    raise ValueError(f"matrix is not symmetric at ({i},{j})")
        return cls(n, data)

    @classmethod
    def identity(cls, n: int) -> "SymMatrix":
        return cls.from_rows(
            [[1 if i == j else 0 for j in range(n)] for i in range(n)]
        )

    @classmethod
    def ones(cls, n: int) -> "SymMatrix":
        return cls.from_rows([[1] * n for _ in range(n)])

    @classmethod
    def zero(cls, n: int) -> "SymMatrix":
        return cls.from_rows([[0] * n for _ in range(n)])

    @classmethod
    def diag(cls, values) -> "SymMatrix":
        vals = [_rat(v) for v in values]
        n = len(vals)
        return cls.from_rows(
            [[vals[i] if i == j else 0 for j in range(n)] for i in range(n)]
        )

    @classmethod
    def from_float(cls, array) -> "SymMatrix":
        """Exact rationalization of a (nearly) symmetric float matrix."""
        n = len(array)
        sym = [
            [
                (Fraction(float(array[i][j])) + Fraction(float(array[j][i]))) / 2
                for j in range(n)
            ]
            for i in range(n)
        ]
        return cls.from_rows(sym)

    def entry(self, i: int, j: int) -> Fraction:
        return self.rows[i][j]

    def __add__(self, other: "SymMatrix") -> "SymMatrix":
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        return SymMatrix.from_rows(
            [
                [self.rows[i][j] + other.rows[i][j] for j in range(self.n)]
                for i in range(self.n)
            ]
        )

    def __sub__(self, other: "SymMatrix") -> "SymMatrix":
        return self + other.scale(-1)

    def scale(self, c: RatLike) -> "SymMatrix":
        c = _rat(c)
        return SymMatrix.from_rows(
            [[c * v for v in row] for row in self.rows]
        )

    def to_float(self) -> list[list[float]]:
        return [[float(v) for v in row] for row in self.rows]

    def max_abs_entry(self) -> Fraction:
        return max((abs(v) for row in self.rows for v in row), default=Fraction(0))


def is_psd_exact(m: SymMatrix) -> bool:
    """Exact positive-semidefiniteness test via rational LDL with pivoting."""
    n = m.n
    a = [list(row) for row in m.rows]
    active = list(range(n))
    while active:
        piv = max(active, key=lambda i: a[i][i])
        if a[piv][piv] < 0:
            return False
        if a[piv][piv] == 0:
            # All remaining diagonals are <= 0 here, hence == 0; PSD forces
            # the remaining block to vanish entirely.
            return all(a[i][j] == 0 for i in active for j in active)
        d = a[piv][piv]
        active.remove(piv)
        for i in active:
            fi = a[i][piv]
            if fi == 0:
                continue
            for j in active:
                a[i][j] -= fi * a[piv][j] / d
        for i in active:
            a[i][piv] = a[piv][i] = Fraction(0)
    return True


def quadratic_form(m: SymMatrix) -> Poly:
    """sum_ij M_ij x_i x_j as a degree-2 homogeneous polynomial."""
    terms: dict[MultiIndex, Fraction] = {}
    n = m.n
    for i in range(n):
        for j in range(i, n):
            c = m.rows[i][j] if i == j else 2 * m.rows[i][j]
            if c == 0:
                continue
            exp = [0] * n
            exp[i] += 1
            exp[j] += 1
            terms[tuple(exp)] = c
    return Poly(n, terms)


def quartic_form(m: SymMatrix) -> Poly:
    """sum_ij M_ij x_i^2 x_j^2; only even multi-indices appear."""
    terms: dict[MultiIndex, Fraction] = {}
    n = m.n
    for i in range(n):
        for j in range(i, n):
            c = m.rows[i][j] if i == j else 2 * m.rows[i][j]
            if c == 0:
                continue
            exp = [0] * n
            exp[i] += 2
            exp[j] += 2
            terms[tuple(exp)] = c
    return Poly(n, terms)


class LiftKind(Enum):
    LINEAR = "linear"
    QUADRATIC = "quadratic"


def lift_multiplier(nvars: int, r: int, kind: LiftKind) -> Poly:
    """(sum x_i)^r or (sum x_i^2)^r, expanded exactly via multinomials."""
    if r < 0:
        raise ValueError("lift level must be >= 0")
    power = 1 if kind is LiftKind.LINEAR else 2
    terms: dict[MultiIndex, Fraction] = {}
    for tau in _compositions(r, nvars):
        exp = tuple(power * t for t in tau)
        terms[exp] = Fraction(multinomial(tau))
    return Poly(nvars, terms)


def polya_lift(p: Poly, r: int, kind: LiftKind) -> Poly:
    """Multiply p by (sum x_i)^r (LINEAR) or (sum x_i^2)^r (QUADRATIC)."""
    if r == 0:
        return p
    return lift_multiplier(p.nvars, r, kind) * p


def coeff_norm(p: Poly) -> Fraction:
    """max over monomials of |coefficient| / multinomial(alpha); 0 for p = 0."""
    best = Fraction(0)
    for alpha, c in p.items():
        val = abs(c) / multinomial(alpha)
        if val > best:
            best = val
    return best


# -- suprema and coefficient bounds -----------------------------------------


def _sqrt_upper(q: Fraction, refine: int = 30) -> Fraction:
    """Rational upper bound on sqrt(q) for q >= 0, tighter as refine grows."""
    if q < 0:
        raise ValueError("negative radicand")
    if q == 0:
        return Fraction(0)
    shift = 1 << refine
    num = q.numerator * q.denominator * shift * shift
    root = isqrt(num)
    if root * root < num:
        root += 1
    return Fraction(root, q.denominator * shift)


def _as_linear(p: Poly) -> tuple[Fraction, list[Fraction]] | None:
    """Decompose p = c0 + sum a_i x_i if p has degree <= 1, else None."""
    if p.total_degree() > 1:
        return None
    c0 = p.coeff((0,) * p.nvars)
    coeffs = [Fraction(0)] * p.nvars
    for alpha, c in p.items():
        d = sum(alpha)
        if d == 1:
            coeffs[alpha.index(1)] = c
    return c0, coeffs


def _as_sphere_power(p: Poly) -> int | None:
    """Return k if p == (sum x_i^2)^k, else None."""
    d = p.total_degree()
    if d % 2:
        return None
    k = d // 2
    if p == lift_multiplier(p.nvars, k, LiftKind.QUADRATIC):
        return k
    return None


def box_sup(p: Poly) -> tuple[Fraction, bool]:
    """(bound, exact) with bound >= max_{[-1,1]^n} |p|.

    Exact for constants, degree-<=1 polynomials and (sum x_i^2)^k; otherwise
    the certified interval bound sum |c_alpha| is returned.
    """
    lin = _as_linear(p)
    if lin is not None:
        c0, coeffs = lin
        return abs(c0) + sum(abs(a) for a in coeffs), True
    k = _as_sphere_power(p)
    if k is not None:
        return Fraction(p.nvars) ** k, True
    return sum(abs(c) for _, c in p.items()), False


def ball_sup(p: Poly, radius: Fraction, refine: int = 30) -> tuple[Fraction, bool]:
    """(bound, exact) with bound >= max over {sum x_i^2 <= radius} of |p|.

    Exact for constants and (sum x_i^2)^k; for other polynomials a certified
    over-estimate sum |c_alpha| * radius^(|alpha|/2) is used, with rational
    upper bounds standing in for irrational square roots.
    """
    radius = _rat(radius)
    if radius <= 0:
        raise ValueError("radius must be positive")
    k = _as_sphere_power(p)
    if k is not None:
        return radius**k, True
    sqrt_r_up = _sqrt_upper(radius, refine)
    lin = _as_linear(p)
    if lin is not None:
        c0, coeffs = lin
        norm_up = _sqrt_upper(sum(a * a for a in coeffs), refine)
        exact = all(a == 0 for a in coeffs)
        return abs(c0) + norm_up * sqrt_r_up, exact
    total = Fraction(0)
    for alpha, c in p.items():
        d = sum(alpha)
        rad_pow = radius ** (d // 2) * (sqrt_r_up if d % 2 else 1)
        total += abs(c) * rad_pow
    return total, False


def box_coeff_bound_rhs(p: Poly) -> Fraction:
    """3^(d+1) * sup_{[-1,1]^n} |p|, an upper bound on coeff_norm(p).

    The supremum is exact on the documented closed-form corpus and a
    certified over-estimate otherwise.
    """
    d = p.total_degree()
    sup, _ = box_sup(p)
    return Fraction(3) ** (d + 1) * sup


def ball_coeff_bound_rhs(p: Poly, radius: RatLike, samples: int = 1) -> Fraction:
    """3^(d+1) * d! * (n/radius)^(d/2) * sup over {sum x_i^2 <= radius} of |p|.

    Upper-bounds max_alpha |c_alpha|.  Requires 0 < radius < n.  ``samples``
    controls the dyadic refinement of rational square-root over-estimates
    when the exact value involves irrational factors (odd degree).
    """
    radius = _rat(radius)
    n = p.nvars
    if not (0 < radius < n):
        raise ValueError("radius must satisfy 0 < radius < nvars")
    d = p.total_degree()
    refine = 20 + 10 * max(1, samples)
    sup, _ = ball_sup(p, radius, refine)
    ratio = Fraction(n) / radius
    if d % 2 == 0:
        scale = ratio ** (d // 2)
    else:
        scale = ratio ** (d // 2) * _sqrt_upper(ratio, refine)
    return Fraction(3) ** (d + 1) * factorial(d) * scale * sup


def max_abs_coeff(p: Poly) -> Fraction:
    return max((abs(c) for _, c in p.items()), default=Fraction(0))
