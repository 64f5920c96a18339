"""Shared corpus generators (seeded, exact-rational where it matters)."""

import random
from fractions import Fraction

import pytest

from coposos.polycore import SymMatrix


def cycle_edges(n):
    return {(i, (i + 1) % n) for i in range(n)}


def c5_matrix() -> SymMatrix:
    """2(A + I) - J for the 5-cycle: 1 on diagonal/edges, -1 on non-edges."""
    edges = {tuple(sorted(e)) for e in cycle_edges(5)}
    return SymMatrix.from_rows(
        [
            [
                1 if i == j else (1 if (min(i, j), max(i, j)) in edges else -1)
                for j in range(5)
            ]
            for i in range(5)
        ]
    )


def c5_padded_matrix() -> SymMatrix:
    """The 5-cycle matrix padded to 6x6 with a zero row/column."""
    base = c5_matrix()
    rows = [list(r) + [Fraction(0)] for r in base.rows]
    rows.append([Fraction(0)] * 6)
    return SymMatrix.from_rows(rows)


def planted_spn(rnd: random.Random, n: int) -> tuple[SymMatrix, SymMatrix, SymMatrix, Fraction]:
    """Random M = P + N with P positive definite, N entrywise nonnegative.

    Returns (M, P, N, lb) where lb is an exact rational Gershgorin lower
    bound on the least eigenvalue of P, guaranteed >= 1 by construction.
    """
    g = [[Fraction(rnd.randint(-4, 4), 4) for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            g[j][i] = g[i][j]
    shift = Fraction(n + 2)
    p_rows = [
        [g[i][j] + (shift if i == j else 0) for j in range(n)] for i in range(n)
    ]
    p = SymMatrix.from_rows(p_rows)
    lb = min(
        p.entry(i, i) - sum(abs(p.entry(i, j)) for j in range(n) if j != i)
        for i in range(n)
    )
    assert lb >= 1
    nn = [[Fraction(rnd.randint(0, 6), 3) for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            nn[j][i] = nn[i][j]
    n_mat = SymMatrix.from_rows(nn)
    return p + n_mat, p, n_mat, lb


def random_symmetric(rnd: random.Random, n: int, lo=-2, hi=2) -> SymMatrix:
    rows = [
        [Fraction(rnd.randint(4 * lo, 4 * hi), 4) for _ in range(n)]
        for _ in range(n)
    ]
    for i in range(n):
        for j in range(i + 1, n):
            rows[j][i] = rows[i][j]
    return SymMatrix.from_rows(rows)


@pytest.fixture
def rnd():
    return random.Random(20240811)
