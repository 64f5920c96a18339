from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coposos.polycore import (
    LiftKind,
    Poly,
    SymMatrix,
    ball_coeff_bound_rhs,
    ball_sup,
    box_coeff_bound_rhs,
    box_sup,
    coeff_norm,
    is_psd_exact,
    lift_multiplier,
    max_abs_coeff,
    monomial_basis,
    multinomial,
    polya_lift,
    quadratic_form,
    quartic_form,
)


def P(nvars, terms):
    return Poly(nvars, terms)


class TestMultinomial:
    def test_empty_product(self):
        assert multinomial((0, 0)) == 1

    def test_pair(self):
        assert multinomial((1, 1)) == 2

    def test_factorials(self):
        assert multinomial((2, 1, 1)) == 12

    @given(st.lists(st.integers(0, 6), min_size=1, max_size=5))
    def test_always_positive_integer(self, alpha):
        assert multinomial(tuple(alpha)) >= 1

    @pytest.mark.parametrize("n,d", [(2, 3), (3, 2), (4, 4), (5, 3)])
    def test_sum_over_degree_is_power(self, n, d):
        total = sum(multinomial(a) for a in monomial_basis(n, d, exact_degree=True))
        assert total == n**d


class TestMonomialBasis:
    def test_graded_lex_listing(self):
        assert monomial_basis(2, 1) == [(0, 0), (1, 0), (0, 1)]

    def test_exact_degree_count_6_3(self):
        assert len(monomial_basis(6, 3, exact_degree=True)) == 56

    def test_exact_degree_count_3_2(self):
        basis = monomial_basis(3, 2, exact_degree=True)
        assert len(basis) == 6
        assert set(basis) == {
            (2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1), (0, 1, 1),
        }

    @pytest.mark.parametrize("n", range(1, 9))
    @pytest.mark.parametrize("d", range(0, 7))
    def test_count_identities(self, n, d):
        assert len(monomial_basis(n, d)) == comb(n + d, d)
        if d > 0 or True:
            assert len(monomial_basis(n, d, exact_degree=True)) == comb(n + d - 1, d)


class TestForms:
    def test_quadratic_identity(self):
        m = SymMatrix.identity(2)
        assert quadratic_form(m) == P(2, {(2, 0): 1, (0, 2): 1})

    def test_quadratic_offdiag_doubles(self):
        m = SymMatrix.from_rows([[0, 1], [1, 0]])
        assert quadratic_form(m) == P(2, {(1, 1): 2})

    def test_quadratic_c5_pattern(self):
        # 2(A + I) - J on the 5-cycle: diagonal 1, edges 2, non-edges -2
        edges = {(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)}
        rows = [
            [
                1 if i == j else (2 if (min(i, j), max(i, j)) in edges else -2)
                for j in range(5)
            ]
            for i in range(5)
        ]
        q = quadratic_form(SymMatrix.from_rows(rows))
        e_01 = (1, 1, 0, 0, 0)
        e_02 = (1, 0, 1, 0, 0)
        assert q.coeff((2, 0, 0, 0, 0)) == 1
        assert q.coeff(e_01) == 4  # doubled edge entry
        assert q.coeff(e_02) == -4

    def test_quartic_single(self):
        assert quartic_form(SymMatrix.from_rows([[1]])) == P(1, {(4,): 1})

    def test_quartic_identity(self):
        assert quartic_form(SymMatrix.identity(2)) == P(2, {(4, 0): 1, (0, 4): 1})

    def test_quartic_all_ones(self):
        q = quartic_form(SymMatrix.ones(2))
        assert q == P(2, {(4, 0): 1, (2, 2): 2, (0, 4): 1})

    @pytest.mark.parametrize("seed", range(4))
    def test_quartic_is_quadratic_at_squares(self, seed):
        import random

        rnd = random.Random(seed)
        n = rnd.choice([2, 3, 4])
        m = [[Fraction(rnd.randint(-5, 5), rnd.randint(1, 4)) for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                m[j][i] = m[i][j]
        sym = SymMatrix.from_rows(m)
        quad, quart = quadratic_form(sym), quartic_form(sym)
        for _ in range(25):
            pt = [Fraction(rnd.randint(-7, 7), rnd.randint(1, 5)) for _ in range(n)]
            assert quart.evaluate(pt) == quad.evaluate([v * v for v in pt])


class TestPolyaLift:
    def test_level_zero_is_identity(self):
        p = P(2, {(1, 1): 3, (0, 0): -2})
        assert polya_lift(p, 0, LiftKind.LINEAR) == p

    def test_quadratic_lift_of_squared_norm(self):
        p = P(2, {(4, 0): 1, (2, 2): 2, (0, 4): 1})
        lifted = polya_lift(p, 1, LiftKind.QUADRATIC)
        assert lifted == P(2, {(6, 0): 1, (4, 2): 3, (2, 4): 3, (0, 6): 1})

    def test_linear_lift_level_two(self):
        p = P(2, {(1, 1): 1})
        lifted = polya_lift(p, 2, LiftKind.LINEAR)
        assert lifted == P(2, {(3, 1): 1, (2, 2): 2, (1, 3): 1})

    @given(
        st.integers(0, 3),
        st.integers(0, 3),
        st.sampled_from([LiftKind.LINEAR, LiftKind.QUADRATIC]),
        st.dictionaries(
            st.tuples(st.integers(0, 3), st.integers(0, 3)),
            st.fractions(min_value=-5, max_value=5),
            min_size=1,
            max_size=4,
        ),
    )
    @settings(max_examples=60, deadline=None)
    def test_lift_levels_compose(self, r1, r2, kind, terms):
        p = P(2, terms)
        assert polya_lift(p, r1 + r2, kind) == polya_lift(
            polya_lift(p, r1, kind), r2, kind
        )

    def test_degree_increase(self):
        p = P(3, {(2, 0, 0): 1})
        assert polya_lift(p, 2, LiftKind.LINEAR).total_degree() == 4
        assert polya_lift(p, 2, LiftKind.QUADRATIC).total_degree() == 6


class TestCoeffNorm:
    def test_cross_term(self):
        assert coeff_norm(P(2, {(1, 1): 1})) == Fraction(1, 2)

    def test_constant(self):
        assert coeff_norm(P(1, {(0,): 5})) == 5

    def test_max_rule(self):
        assert coeff_norm(P(2, {(2, 0): 1, (1, 1): 4})) == 2

    def test_zero(self):
        assert coeff_norm(Poly.zero(3)) == 0


class TestCoeffBounds:
    def test_box_bound_constant(self):
        p = P(2, {(0, 0): Fraction(-7, 2)})
        assert box_coeff_bound_rhs(p) == 3 * Fraction(7, 2)
        assert box_coeff_bound_rhs(p) >= coeff_norm(p)

    def test_box_bound_single_variable(self):
        p = P(2, {(1, 0): 1})
        assert box_coeff_bound_rhs(p) == 9
        assert coeff_norm(p) == 1

    def test_ball_bound_squared_norm(self):
        p = lift_multiplier(2, 1, LiftKind.QUADRATIC)  # x1^2 + x2^2
        rhs = ball_coeff_bound_rhs(p, 1)
        assert rhs == 108  # 27 * 2 * (2/1) * 1
        assert max_abs_coeff(p) == 1

    def test_ball_bound_radius_domain(self):
        p = P(2, {(2, 0): 1})
        with pytest.raises(ValueError):
            ball_coeff_bound_rhs(p, 2)  # radius must be < nvars
        with pytest.raises(ValueError):
            ball_coeff_bound_rhs(p, 0)

    @pytest.mark.parametrize("n", range(2, 7))
    @pytest.mark.parametrize("k", range(0, 5))
    def test_box_lemma_on_sphere_powers(self, n, k):
        p = lift_multiplier(n, k, LiftKind.QUADRATIC)
        sup, exact = box_sup(p)
        assert exact and sup == Fraction(n) ** k
        assert coeff_norm(p) <= box_coeff_bound_rhs(p)

    @pytest.mark.parametrize("n", range(2, 7))
    @pytest.mark.parametrize("k", range(1, 5))
    def test_ball_lemma_on_sphere_powers(self, n, k):
        p = lift_multiplier(n, k, LiftKind.QUADRATIC)
        for radius in (Fraction(1, 2), Fraction(1), Fraction(n - 1)):
            sup, exact = ball_sup(p, radius)
            assert exact and sup == radius**k
            assert max_abs_coeff(p) <= ball_coeff_bound_rhs(p, radius)

    def test_box_lemma_on_linear_forms(self):
        p = P(3, {(1, 0, 0): Fraction(3), (0, 1, 0): Fraction(-2), (0, 0, 1): 1})
        sup, exact = box_sup(p)
        assert exact and sup == 6
        assert coeff_norm(p) <= box_coeff_bound_rhs(p)


class TestSymMatrix:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            SymMatrix.from_rows([[1, 2], [3, 4]])

    def test_exact_psd_check(self):
        assert is_psd_exact(SymMatrix.identity(3))
        assert is_psd_exact(SymMatrix.ones(3))
        assert not is_psd_exact(SymMatrix.from_rows([[1, 2], [2, 1]]))
        assert not is_psd_exact(SymMatrix.diag([1, -1]))
        # singular PSD with a zero pivot
        assert is_psd_exact(SymMatrix.from_rows([[0, 0], [0, 1]]))
        assert not is_psd_exact(SymMatrix.from_rows([[0, 1], [1, 1]]))

    def test_from_float_roundtrip(self):
        m = SymMatrix.from_float([[0.5, 0.25], [0.25, 1.0]])
        assert m.entry(0, 1) == Fraction(1, 4)
