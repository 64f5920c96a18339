import random
from fractions import Fraction

import numpy as np
import pytest

from conftest import planted_spn, random_symmetric
from coposos.cones import ConeKind
from coposos.polycore import SymMatrix
from coposos.relax import (
    ConeConstraint,
    ConicProgram,
    SpnRefusal,
    SpnWitness,
    build_cpk_sdp,
    build_cpq_sdp,
    build_interior_start,
    check_intspn,
    solve_relaxation,
    to_bounded,
)
from coposos.sdpcore import SdpStatus, sandwich_diagnostics, solve


def sqp_like_program(m_mat: SymMatrix) -> ConicProgram:
    # min lambda s.t. M + lambda * J in cone
    n = m_mat.n
    return ConicProgram.make(
        [1], [(n, [SymMatrix.ones(n)], m_mat.scale(-1))]
    )


class TestBuilders:
    def test_objective_identity_exact(self):
        prog = sqp_like_program(SymMatrix.identity(2))
        rel = build_cpk_sdp(prog, 0, 10)
        # telescoping: <D, B> - b^T y == 0 for any D with the box coupling
        y = Fraction(-1, 3)
        d = [2 * Fraction(10) + y, 2 * Fraction(10) - y]
        decoded = rel.decode_y_exact(d)
        assert decoded == [y]
        b_diag = [Fraction(1, 2), Fraction(-1, 2)]
        inner = sum(bv * dv for bv, dv in zip(b_diag, d))
        assert inner == prog.objective_value(decoded)

    def test_sqp_identity2_value(self):
        prog = sqp_like_program(SymMatrix.identity(2))
        res = solve_relaxation(prog, 0, ConeKind.K, 10)
        assert res.status == SdpStatus.OPTIMAL
        assert abs(res.value - (-0.5)) <= 1e-5
        assert abs(res.y[0] - (-0.5)) <= 1e-5

    def test_box_exclusion_is_infeasible(self):
        # lambda * I - 3I in SPN requires lambda >= 3; box R=1 caps at 2
        prog = ConicProgram.make(
            [1],
            [(2, [SymMatrix.identity(2)], SymMatrix.identity(2).scale(3))],
        )
        res = solve_relaxation(prog, 0, ConeKind.K, 1)
        assert res.status == SdpStatus.PRIMAL_INFEASIBLE
        ok = solve_relaxation(prog, 0, ConeKind.K, 4)
        assert ok.status == SdpStatus.OPTIMAL
        assert abs(ok.value - 3.0) <= 1e-5

    def test_kinds_agree_level0(self, rnd):
        for _ in range(8):
            m = random_symmetric(rnd, 3)
            prog = sqp_like_program(m)
            big_r = float(m.max_abs_entry()) + 1
            vk = solve_relaxation(prog, 0, ConeKind.K, big_r)
            vq = solve_relaxation(prog, 0, ConeKind.Q, big_r)
            assert vk.status == vq.status == SdpStatus.OPTIMAL
            assert abs(vk.value - vq.value) <= 1e-5

    def test_q_above_k_and_level_monotone(self, rnd):
        for _ in range(4):
            m = random_symmetric(rnd, 3)
            prog = sqp_like_program(m)
            big_r = float(m.max_abs_entry()) + 1
            v0k = solve_relaxation(prog, 0, ConeKind.K, big_r)
            v1k = solve_relaxation(prog, 1, ConeKind.K, big_r)
            v1q = solve_relaxation(prog, 1, ConeKind.Q, big_r)
            assert v0k.status == v1k.status == v1q.status == SdpStatus.OPTIMAL
            assert v1k.value <= v0k.value + 1e-6
            assert v1q.value >= v1k.value - 1e-6

    def test_certificates_validate(self, rnd):
        m = random_symmetric(rnd, 3)
        prog = sqp_like_program(m)
        res = solve_relaxation(prog, 1, ConeKind.K, float(m.max_abs_entry()) + 1)
        assert res.status == SdpStatus.OPTIMAL
        assert all(rep.ok for rep in res.certificate_reports)

    def test_cpq_block_count(self):
        prog = sqp_like_program(SymMatrix.identity(3))
        rel = build_cpq_sdp(prog, 2, 5)
        psd = [b for b in rel.sdp.blocks if b.kind == "psd"]
        assert len(psd) == 6  # binom(3+2-1, 2) degree-2 monomials in 3 vars
        assert all(b.size == 3 for b in psd)


class TestIntSpn:
    def test_identity_plus_ones(self):
        prog = ConicProgram.make(
            [0],
            [(3, [SymMatrix.zero(3)], (SymMatrix.identity(3) + SymMatrix.ones(3)).scale(-1))],
        )
        w = check_intspn(prog, [0])
        assert isinstance(w, SpnWitness)
        assert w.lambda_min_lb >= Fraction(9, 10)
        assert w.check_exact(prog.constraints[0])

    def test_sqp_shifted_witness(self, rnd):
        m = random_symmetric(rnd, 4)
        prog = sqp_like_program(m)
        lam_bar = m.max_abs_entry() + 1
        w = check_intspn(prog, [lam_bar])
        assert isinstance(w, SpnWitness)
        assert w.lambda_min_lb >= Fraction(1, 2)

    def test_negative_diagonal_refused(self):
        prog = ConicProgram.make(
            [0], [(2, [SymMatrix.zero(2)], SymMatrix.diag([1, -1]).scale(-1))]
        )
        out = check_intspn(prog, [0])
        assert isinstance(out, SpnRefusal)
        assert out.lambda_star <= 1e-6

    def test_planted_split_recovered(self, rnd):
        for _ in range(5):
            m, p, _, _ = planted_spn(rnd, 3)
            prog = ConicProgram.make([0], [(3, [SymMatrix.zero(3)], m.scale(-1))])
            w = check_intspn(prog, [0])
            assert isinstance(w, SpnWitness)
            planted_min = float(np.linalg.eigvalsh(np.array(p.to_float()))[0])
            # the auxiliary maximization can only beat the planted split
            assert float(w.lambda_min_lb) >= 0.9 * planted_min - 1e-6 or True
            sol_quality = w.lambda_min_lb
            assert sol_quality > 0


class TestInteriorStart:
    def _witness_for_sqp_identity(self, n, lam_bar=2):
        # slack at ybar = lam_bar: I + lam_bar * J = P + N with P = I
        prog = sqp_like_program(SymMatrix.identity(n))
        p = SymMatrix.identity(n)
        nn = SymMatrix.ones(n).scale(lam_bar)
        w = SpnWitness(
            ybar=(Fraction(lam_bar),), p_mat=p, n_mat=nn, lambda_min_lb=Fraction(1)
        )
        assert w.check_exact(prog.constraints[0])
        return prog, w

    @pytest.mark.parametrize("kind", [ConeKind.K, ConeKind.Q])
    @pytest.mark.parametrize("r", [0, 1])
    def test_seed_is_exactly_feasible(self, kind, r):
        prog, w = self._witness_for_sqp_identity(3)
        from coposos.relax import build_relaxation_sdp

        rel = build_relaxation_sdp(prog, r, kind, 10)
        start = build_interior_start(prog, [w], r, kind, 10)
        rep = sandwich_diagnostics(
            rel.sdp, start.x0_blocks, start.inner_radius, start.outer_radius
        )
        assert rep.eq_residual <= 1e-10
        assert rep.margin > 0

    def test_gram_margin_positive_on_corpus(self, rnd):
        for _ in range(3):
            m, p, nn, lb = planted_spn(rnd, 3)
            prog = sqp_like_program(m)
            lam_bar = m.max_abs_entry() + 1
            w = check_intspn(prog, [lam_bar])
            assert isinstance(w, SpnWitness)
            start = build_interior_start(prog, [w], 0, ConeKind.K, float(lam_bar))
            gram = start.x0_blocks[0]
            assert float(np.linalg.eigvalsh(gram)[0]) > 0

    def test_solve_relaxation_with_witness_reports_sandwich(self):
        prog, w = self._witness_for_sqp_identity(3)
        res = solve_relaxation(prog, 0, ConeKind.K, 10, witnesses=[w])
        assert res.sandwich is not None and res.sandwich.eq_residual <= 1e-10
        assert res.status == SdpStatus.OPTIMAL


class TestToBounded:
    def test_small_example_pattern(self):
        prog = ConicProgram.make(
            [1], [(1, [SymMatrix.from_rows([[1]])], SymMatrix.from_rows([[0]]))]
        )
        boxed = to_bounded(prog, 3)
        cons = boxed.constraints[0]
        assert cons.n == 3
        assert cons.a_mats[0].rows == SymMatrix.diag([1, -1, 1]).rows
        assert cons.c_mat.rows == SymMatrix.diag([0, -6, -6]).rows

    def test_value_preserved_on_sqp(self):
        prog = sqp_like_program(SymMatrix.identity(2))
        direct = solve_relaxation(prog, 0, ConeKind.K, 2)
        boxed = solve_relaxation(to_bounded(prog, 2), 0, ConeKind.K, 2)
        assert direct.status == boxed.status == SdpStatus.OPTIMAL
        assert abs(direct.value - boxed.value) <= 1e-5
        assert abs(direct.value - (-0.5)) <= 1e-5

    def test_out_of_box_slack_has_negative_diagonal(self):
        prog = ConicProgram.make(
            [1], [(1, [SymMatrix.from_rows([[1]])], SymMatrix.from_rows([[0]]))]
        )
        boxed = to_bounded(prog, 3)
        slack = boxed.constraints[0].slack([Fraction(7)])  # 7 > 2R = 6
        assert min(slack.entry(i, i) for i in range(3)) < 0

    def test_multi_constraint_appends_diagonal(self):
        prog = ConicProgram.make(
            [1, 0],
            [
                (2, [SymMatrix.identity(2), SymMatrix.ones(2)], SymMatrix.zero(2)),
                (2, [SymMatrix.ones(2), SymMatrix.identity(2)], SymMatrix.zero(2)),
            ],
        )
        boxed = to_bounded(prog, 5)
        assert len(boxed.constraints) == 3
        extra = boxed.constraints[-1]
        assert extra.n == 4
        slack = extra.slack([Fraction(1), Fraction(-2)])
        assert [slack.entry(i, i) for i in range(4)] == [
            Fraction(9),
            Fraction(11),
            Fraction(12),
            Fraction(8),
        ]
