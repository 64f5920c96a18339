"""Conic-program data model and SDP relaxation assembly.

A :class:`ConicProgram` is  min { b^T y : sum_i y_i A_i - C in COP }  with
one or more cone constraints.  Replacing the copositive cone by the level-r
inner cones (kind K or Q, see :mod:`coposos.cones`) turns it into a block
SDP in which the variable vector y enters only through a nonnegative
diagonal block D = (d_1+, d_1-, ..., d_m+, d_m-) with

    d_i+  encodes  2R + y_i,       d_i- = 4R - d_i+,

R being a caller-supplied box bound on the optimum, and objective block
B = Diag(b_1/2, -b_1/2, ...) so that <D, B> = b^T y holds exactly.

The module also provides the interior-point seed construction used for
feasible-region diagnostics: given a feasible split  sum_i ybar_i A_i - C
= P + N  (P positive definite, N entrywise nonnegative), it builds an
exactly feasible SDP point whose Gram part is the multinomial-weighted
padding of P - b*J plus a strictly positive diagonal carrying b*J + N,
and the value-preserving variable-boxing transform that appends the
diagonal D to the cone constraint itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from .cones import ConeKind, SosCertificate, gram_basis, validate_certificate
from .polycore import (
    LiftKind,
    Poly,
    SymMatrix,
    is_psd_exact,
    monomial_basis,
    multinomial,
    polya_lift,
    quadratic_form,
    quartic_form,
)
from .sdpcore import (
    SdpBuilder,
    SdpStatus,
    nonneg_block,
    psd_block,
    sandwich_diagnostics,
    solve,
)


@dataclass(frozen=True)
class ConeConstraint:
    n: int
    a_mats: tuple[SymMatrix, ...]
    c_mat: SymMatrix

    def __post_init__(self):
        if self.c_mat.n != self.n or any(a.n != self.n for a in self.a_mats):
            raise ValueError("constraint matrices have inconsistent dimensions")

    def slack(self, y) -> SymMatrix:
        """sum_i y_i A_i - C, exact when y is rational."""
        acc = self.c_mat.scale(-1)
        for yi, a in zip(y, self.a_mats):
            acc = acc + a.scale(yi)
        return acc


@dataclass(frozen=True)
class ConicProgram:
    m: int
    b: tuple[Fraction, ...]
    constraints: tuple[ConeConstraint, ...]

    def __post_init__(self):
        if len(self.b) != self.m:
            raise ValueError("objective length does not match variable count")
        if not self.constraints:
            raise ValueError("at least one cone constraint is required")
        for cons in self.constraints:
            if len(cons.a_mats) != self.m:
                raise ValueError("constraint has wrong number of A matrices")

    @classmethod
    def make(cls, b, constraints) -> "ConicProgram":
        b = tuple(Fraction(v) for v in b)
        cons = tuple(
            ConeConstraint(
                n=c[0],
                a_mats=tuple(c[1]),
                c_mat=c[2],
            )
            if not isinstance(c, ConeConstraint)
            else c
            for c in constraints
        )
        return cls(m=len(b), b=b, constraints=cons)

    def objective_value(self, y) -> Fraction:
        return sum((bi * yi for bi, yi in zip(self.b, y)), Fraction(0))


@dataclass
class GramLayout:
    """Where one cone constraint's certificate lives inside the block SDP."""

    constraint: int
    kind: ConeKind
    psd_blocks: list[int]
    scalar_block: int | None
    basis: list
    scalar_basis: list | None


@dataclass
class RelaxationSdp:
    sdp: object
    prog: ConicProgram
    r: int
    kind: ConeKind
    box_bound: Fraction
    d_block: int
    layouts: list[GramLayout]

    def decode_y(self, sol) -> np.ndarray:
        d = np.asarray(sol.x_blocks[self.d_block])
        return (d[0::2] - d[1::2]) / 2.0

    def decode_y_exact(self, d_values) -> list[Fraction]:
        vals = [Fraction(v) for v in d_values]
        return [(vals[2 * i] - vals[2 * i + 1]) / 2 for i in range(self.prog.m)]


def _lift_kind(kind: ConeKind) -> LiftKind:
    return LiftKind.QUADRATIC if kind is ConeKind.K else LiftKind.LINEAR


def _constraint_lifts(cons: ConeConstraint, r: int, kind: ConeKind):
    """Exact lifted polynomials of each A_i and of C for one constraint."""
    form = quartic_form if kind is ConeKind.K else quadratic_form
    lifts_a = [polya_lift(form(a), r, _lift_kind(kind)) for a in cons.a_mats]
    lift_c = polya_lift(form(cons.c_mat), r, _lift_kind(kind))
    return lifts_a, lift_c


def build_relaxation_sdp(
    prog: ConicProgram, r: int, kind: ConeKind, box_bound
) -> RelaxationSdp:
    """Assemble the level-r block SDP of a conic program for either kind."""
    if r < 0:
        raise ValueError("level must be >= 0")
    big_r = Fraction(box_bound)
    if big_r <= 0:
        raise ValueError("box bound must be positive")
    m = prog.m

    blocks = []
    layouts: list[GramLayout] = []
    row_plan = []  # (constraint index, gamma, entries) resolved after blocks fixed
    for ci, cons in enumerate(prog.constraints):
        n = cons.n
        if kind is ConeKind.K:
            basis = gram_basis(n, r, ConeKind.K)
            pos = {mono: t for t, mono in enumerate(basis)}
            gram_block = len(blocks)
            blocks.append(psd_block(len(basis)))
            layouts.append(
                GramLayout(ci, kind, [gram_block], None, basis, None)
            )
            rows: dict = {
                gamma: [] for gamma in monomial_basis(n, 2 * r + 4, exact_degree=True)
            }
            for ti, beta in enumerate(basis):
                for tj in range(ti, len(basis)):
                    gamma = tuple(x + y for x, y in zip(beta, basis[tj]))
                    rows[gamma].append((gram_block, ti, tj, 1.0))
            row_plan.append((ci, rows))
        else:
            basis = gram_basis(n, r, ConeKind.Q)
            scalar_basis = monomial_basis(n, r + 2, exact_degree=True)
            scalar_pos = {mono: t for t, mono in enumerate(scalar_basis)}
            first = len(blocks)
            for _ in basis:
                blocks.append(psd_block(n))
            scalar_block = len(blocks)
            blocks.append(nonneg_block(len(scalar_basis)))
            layouts.append(
                GramLayout(
                    ci,
                    kind,
                    list(range(first, first + len(basis))),
                    scalar_block,
                    basis,
                    scalar_basis,
                )
            )
            rows = {gamma: [] for gamma in scalar_basis}
            for bi, beta in enumerate(basis):
                for i in range(n):
                    for j in range(i, n):
                        gamma = list(beta)
                        gamma[i] += 1
                        gamma[j] += 1
                        rows[tuple(gamma)].append((first + bi, i, j, 1.0))
            for gamma in scalar_basis:
                rows[gamma].append(
                    (scalar_block, scalar_pos[gamma], scalar_pos[gamma], 1.0)
                )
            row_plan.append((ci, rows))

    d_block = len(blocks)
    blocks.append(nonneg_block(2 * m))
    builder = SdpBuilder(blocks)

    for (ci, rows), cons in zip(row_plan, prog.constraints):
        lifts_a, lift_c = _constraint_lifts(cons, r, kind)
        for gamma, entries in rows.items():
            full = list(entries)
            for i, lift in enumerate(lifts_a):
                coef = lift.coeff(gamma)
                if coef != 0:
                    # subtract y_i * coef written via (d_i+ - d_i-) / 2
                    full.append((d_block, 2 * i, 2 * i, -float(coef) / 2.0))
                    full.append((d_block, 2 * i + 1, 2 * i + 1, float(coef) / 2.0))
            builder.add_row(full, -float(lift_c.coeff(gamma)), label=(ci, gamma))

    for i in range(m):
        builder.add_row(
            [(d_block, 2 * i, 2 * i, 1.0), (d_block, 2 * i + 1, 2 * i + 1, 1.0)],
            4.0 * float(big_r),
            label=("box", i),
        )

    builder.set_objective(
        [(d_block, 2 * i, 2 * i, float(prog.b[i]) / 2.0) for i in range(m)]
        + [(d_block, 2 * i + 1, 2 * i + 1, -float(prog.b[i]) / 2.0) for i in range(m)]
    )
    return RelaxationSdp(
        sdp=builder.build(),
        prog=prog,
        r=r,
        kind=kind,
        box_bound=big_r,
        d_block=d_block,
        layouts=layouts,
    )


def build_cpk_sdp(prog: ConicProgram, r: int, box_bound) -> RelaxationSdp:
    return build_relaxation_sdp(prog, r, ConeKind.K, box_bound)


def build_cpq_sdp(prog: ConicProgram, r: int, box_bound) -> RelaxationSdp:
    return build_relaxation_sdp(prog, r, ConeKind.Q, box_bound)


# -- interior feasible points -------------------------------------------------


@dataclass
class SpnWitness:
    """Feasible point whose slack splits as (positive definite) + (nonnegative).

    ``lambda_min_lb`` is an exact rational lower bound on the least
    eigenvalue of P, certified by a rational factorization check.
    """

    ybar: tuple[Fraction, ...]
    p_mat: SymMatrix
    n_mat: SymMatrix
    lambda_min_lb: Fraction

    def check_exact(self, cons: ConeConstraint) -> bool:
        if self.lambda_min_lb <= 0:
            return False
        if any(v < 0 for row in self.n_mat.rows for v in row):
            return False
        slack = cons.slack(self.ybar)
        if slack != self.p_mat + self.n_mat:
            return False
        shifted = self.p_mat - SymMatrix.identity(self.p_mat.n).scale(
            self.lambda_min_lb
        )
        return is_psd_exact(shifted)


@dataclass
class SpnRefusal:
    lambda_star: float
    message: str = ""


def check_intspn(
    prog: ConicProgram,
    ybar,
    constraint: int = 0,
    tol: float = 1e-7,
) -> SpnWitness | SpnRefusal:
    """Search for a P + N split of the slack at ybar with P well-conditioned.

    Solves the auxiliary SDP  max { lam : S = P0 + lam*I + N, P0 psd, N >= 0 }
    for S the exact slack, then rounds to an exactly verified witness.
    Returns a refusal carrying the best lam when it is not safely positive.
    """
    ybar = tuple(Fraction(v) for v in ybar)
    cons = prog.constraints[constraint]
    s_exact = cons.slack(ybar)
    n = cons.n

    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    pair_pos = {p: t for t, p in enumerate(pairs)}
    builder = SdpBuilder([psd_block(n), nonneg_block(len(pairs)), nonneg_block(2)])
    for (i, j) in pairs:
        entries = [
            (0, i, j, 1.0 if i == j else 0.5),
            (1, pair_pos[(i, j)], pair_pos[(i, j)], 1.0),
        ]
        if i == j:
            entries.append((2, 0, 0, 1.0))
            entries.append((2, 1, 1, -1.0))
        builder.add_row(entries, float(s_exact.entry(i, j)))
    builder.set_objective([(2, 0, 0, -1.0), (2, 1, 1, 1.0)])
    sol = solve(builder.build())
    if sol.status != SdpStatus.OPTIMAL:
        return SpnRefusal(
            lambda_star=float("nan"), message=f"auxiliary SDP: {sol.status.value}"
        )
    lam_star = -sol.objective
    if lam_star <= tol:
        return SpnRefusal(lambda_star=lam_star, message="slack has no interior split")

    # Round N to exact nonnegative rationals, take P as the exact remainder,
    # then certify a rational eigenvalue lower bound by exact factorization.
    n_float = np.asarray(sol.x_blocks[1])
    n_rows = [[Fraction(0)] * n for _ in range(n)]
    for (i, j), t in pair_pos.items():
        val = max(Fraction(float(n_float[t])), Fraction(0))
        n_rows[i][j] = val
        n_rows[j][i] = val
    n_exact = SymMatrix.from_rows(n_rows)
    p_exact = s_exact - n_exact

    lb = Fraction(float(lam_star)) * Fraction(9, 10)
    for _ in range(80):
        if lb <= 0:
            break
        if is_psd_exact(p_exact - SymMatrix.identity(n).scale(lb)):
            witness = SpnWitness(ybar, p_exact, n_exact, lb)
            return witness
        lb /= 2
    return SpnRefusal(lambda_star=lam_star, message="could not certify the rounding")


@dataclass
class InteriorStart:
    x0_blocks: list
    b_shifts: list[Fraction]
    inner_radius: float
    outer_radius: float


def _shift_for(witness: SpnWitness, max_halvings: int = 60) -> Fraction:
    """Largest b = lambda_min_lb / 2^k with P - b*J exactly PSD."""
    b = witness.lambda_min_lb / 2
    n = witness.p_mat.n
    ones = SymMatrix.ones(n)
    for _ in range(max_halvings):
        if is_psd_exact(witness.p_mat - ones.scale(b)):
            return b
        b /= 2
    raise ArithmeticError("shift halving schedule exhausted; witness too thin")


def _interior_gram_k(witness: SpnWitness, r: int, b: Fraction):
    """Exact Gram block of the quartic-lift seed: padded P-bJ plus diagonal."""
    n = witness.p_mat.n
    basis = gram_basis(n, r, ConeKind.K)
    pos = {mono: t for t, mono in enumerate(basis)}
    side = len(basis)
    p_b = witness.p_mat - SymMatrix.ones(n).scale(b)
    gram = [[Fraction(0)] * side for _ in range(side)]
    for tau in monomial_basis(n, r, exact_degree=True):
        weight = multinomial(tau)
        spots = []
        for i in range(n):
            padded = list(tau)
            padded[i] += 2
            spots.append(pos[tuple(padded)])
        for i in range(n):
            for j in range(n):
                gram[spots[i]][spots[j]] += weight * p_b.entry(i, j)
    remainder = SymMatrix.ones(n).scale(b) + witness.n_mat
    diag_poly = polya_lift(quartic_form(remainder), r, LiftKind.QUADRATIC)
    for alpha in basis:
        t = pos[alpha]
        gram[t][t] += diag_poly.coeff(tuple(2 * a for a in alpha))
    return gram


def _interior_blocks_q(witness: SpnWitness, r: int, b: Fraction):
    """Exact Q-side seed: blocks a_beta*(P - bJ) + (b/2n) I and scalars."""
    n = witness.p_mat.n
    basis = gram_basis(n, r, ConeKind.Q)
    scalar_basis = monomial_basis(n, r + 2, exact_degree=True)
    p_b = witness.p_mat - SymMatrix.ones(n).scale(b)
    eye_shift = SymMatrix.identity(n).scale(b / (2 * n))
    gram_blocks = [
        p_b.scale(multinomial(beta)) + eye_shift for beta in basis
    ]
    remainder = SymMatrix.ones(n).scale(b) + witness.n_mat
    scalars_poly = polya_lift(quadratic_form(remainder), r, LiftKind.LINEAR)
    basis_sum = Poly(n, {beta: 1 for beta in basis})
    correction = basis_sum * Poly.sum_of_variables(n, power=2)
    scalars = []
    for gamma in scalar_basis:
        val = scalars_poly.coeff(gamma) - (b / (2 * n)) * correction.coeff(gamma)
        if 2 * val < b:
            raise ArithmeticError("scalar seed dropped below b/2; check witness")
        scalars.append(val)
    return gram_blocks, scalars


def build_interior_start(
    prog: ConicProgram,
    witnesses,
    r: int,
    kind: ConeKind,
    box_bound,
    rel: RelaxationSdp | None = None,
) -> InteriorStart:
    """Exactly feasible SDP point from per-constraint P + N witnesses.

    All witnesses must share the same ybar.  The returned blocks conform to
    the layout of :func:`build_relaxation_sdp` for the same arguments and
    are meant for :func:`coposos.sdpcore.sandwich_diagnostics`.
    """
    big_r = Fraction(box_bound)
    witnesses = list(witnesses)
    if len(witnesses) != len(prog.constraints):
        raise ValueError("one witness per cone constraint is required")
    ybar = witnesses[0].ybar
    if any(w.ybar != ybar for w in witnesses):
        raise ValueError("witnesses disagree on ybar")
    if any(abs(v) > 2 * big_r for v in ybar):
        raise ValueError("ybar escapes the box [-2R, 2R]")

    blocks = []
    b_shifts = []
    inner = None
    for cons, witness in zip(prog.constraints, witnesses):
        if not witness.check_exact(cons):
            raise ValueError("witness fails its exact feasibility check")
        b = _shift_for(witness)
        b_shifts.append(b)
        if kind is ConeKind.K:
            gram = _interior_gram_k(witness, r, b)
            blocks.append(np.array([[float(v) for v in row] for row in gram]))
            side = comb(cons.n + r + 1, r + 2)
            radius = min(b / side, big_r)
        else:
            gram_blocks, scalars = _interior_blocks_q(witness, r, b)
            for g in gram_blocks:
                blocks.append(np.array(g.to_float()))
            blocks.append(np.array([float(v) for v in scalars]))
            radius = min(b / (4 * cons.n * cons.n), big_r)
        inner = radius if inner is None else min(inner, radius)

    d_vals = []
    for yi in ybar:
        d_vals.append(float(2 * big_r + yi))
        d_vals.append(float(2 * big_r - yi))
    blocks.append(np.array(d_vals))

    frob = math.sqrt(sum(float(np.sum(np.square(blk))) for blk in blocks))
    outer = max(10.0 * frob, 4.0 * float(big_r) * math.sqrt(2 * prog.m), 1.0)
    return InteriorStart(
        x0_blocks=blocks,
        b_shifts=b_shifts,
        inner_radius=float(inner),
        outer_radius=outer,
    )


# -- variable boxing at the conic level ---------------------------------------


def to_bounded(prog: ConicProgram, box_bound) -> ConicProgram:
    """Append the diagonal (2R -+ y_i) box to the program's cone constraint.

    For a single-constraint program the constraint matrices become
    (n + 2m)-dimensional with the A_i carrying -+1 diagonal extensions in
    slot order (2R - y_i, 2R + y_i) and C carrying -2R entries; the optimal
    value is preserved whenever the box contains an optimal solution.  For
    multi-constraint programs the same diagonal is appended as one extra
    2m-dimensional cone constraint, which is equivalent blockwise.
    """
    big_r = Fraction(box_bound)
    if big_r <= 0:
        raise ValueError("box bound must be positive")
    m = prog.m

    def extension_rows(i):
        # variable y_i hits slots (2i, 2i+1) with signs (-1, +1)
        return [(2 * i, Fraction(-1)), (2 * i + 1, Fraction(1))]

    if len(prog.constraints) == 1:
        cons = prog.constraints[0]
        n = cons.n
        size = n + 2 * m
        new_a = []
        for i, a in enumerate(cons.a_mats):
            rows = [[Fraction(0)] * size for _ in range(size)]
            for p in range(n):
                for q in range(n):
                    rows[p][q] = a.entry(p, q)
            for slot, sign in extension_rows(i):
                rows[n + slot][n + slot] = sign
            new_a.append(SymMatrix.from_rows(rows))
        c_rows = [[Fraction(0)] * size for _ in range(size)]
        for p in range(n):
            for q in range(n):
                c_rows[p][q] = cons.c_mat.entry(p, q)
        for slot in range(2 * m):
            c_rows[n + slot][n + slot] = -2 * big_r
        new_c = SymMatrix.from_rows(c_rows)
        return ConicProgram(
            m=m,
            b=prog.b,
            constraints=(ConeConstraint(size, tuple(new_a), new_c),),
        )

    extra_a = []
    for i in range(m):
        rows = [[Fraction(0)] * (2 * m) for _ in range(2 * m)]
        for slot, sign in extension_rows(i):
            rows[slot][slot] = sign
        extra_a.append(SymMatrix.from_rows(rows))
    extra_c = SymMatrix.diag([-2 * big_r] * (2 * m))
    extra = ConeConstraint(2 * m, tuple(extra_a), extra_c)
    return ConicProgram(m=m, b=prog.b, constraints=prog.constraints + (extra,))


# -- end-to-end relaxation solving --------------------------------------------


@dataclass
class RelaxationResult:
    status: SdpStatus
    value: float | None
    y: np.ndarray | None
    certificates: list[SosCertificate] = field(default_factory=list)
    certificate_reports: list = field(default_factory=list)
    relaxation: RelaxationSdp | None = None
    solution: object = None
    sandwich: object = None


def extract_certificates(rel: RelaxationSdp, sol) -> list[SosCertificate]:
    certs = []
    provenance = {
        "primal_res": sol.primal_res,
        "dual_res": sol.dual_res,
        "gap": sol.gap,
    }
    for layout in rel.layouts:
        n = rel.prog.constraints[layout.constraint].n
        if layout.kind is ConeKind.K:
            certs.append(
                SosCertificate(
                    kind=ConeKind.K,
                    r=rel.r,
                    n=n,
                    gram=np.asarray(sol.x_blocks[layout.psd_blocks[0]]),
                    provenance=dict(provenance),
                )
            )
        else:
            certs.append(
                SosCertificate(
                    kind=ConeKind.Q,
                    r=rel.r,
                    n=n,
                    gram_blocks=[np.asarray(sol.x_blocks[b]) for b in layout.psd_blocks],
                    scalars=np.asarray(sol.x_blocks[layout.scalar_block]),
                    provenance=dict(provenance),
                )
            )
    return certs


def solve_relaxation(
    prog: ConicProgram,
    r: int,
    kind: ConeKind,
    box_bound,
    eps: float = 1e-7,
    witnesses=None,
    validate_tol: float | None = None,
) -> RelaxationResult:
    """Assemble, optionally install interior diagnostics, solve and decode.

    The default eps is the value accuracy reliably certifiable in double
    precision across this problem family (the boxing block makes many of
    these programs dual degenerate); pass a smaller eps to insist.
    """
    rel = build_relaxation_sdp(prog, r, kind, box_bound)
    sandwich = None
    if witnesses is not None:
        start = build_interior_start(prog, witnesses, r, kind, box_bound, rel)
        sandwich = sandwich_diagnostics(
            rel.sdp, start.x0_blocks, start.inner_radius, start.outer_radius
        )
    sol = solve(rel.sdp, eps=eps)
    if sol.status != SdpStatus.OPTIMAL:
        return RelaxationResult(
            status=sol.status,
            value=None,
            y=None,
            relaxation=rel,
            solution=sol,
            sandwich=sandwich,
        )
    y = rel.decode_y(sol)
    certs = extract_certificates(rel, sol)
    reports = []
    y_exact = [Fraction(float(v)) for v in y]
    tol = validate_tol if validate_tol is not None else max(100 * eps, 1e-6)
    for layout, cert in zip(rel.layouts, certs):
        slack = rel.prog.constraints[layout.constraint].slack(y_exact)
        reports.append(validate_certificate(slack, cert, tol=tol))
    return RelaxationResult(
        status=sol.status,
        value=float(sol.objective),
        y=y,
        certificates=certs,
        certificate_reports=reports,
        relaxation=rel,
        solution=sol,
        sandwich=sandwich,
    )
