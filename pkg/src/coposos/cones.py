"""Membership testing in the inner approximation cones of the copositive cone.

Two families are supported, selected by :class:`ConeKind`:

``K`` (quartic lift): M is a member at level r when
``(sum x_i^2)^r * (x o2)^T M x o2`` is a sum of squares; the test is an SDP
feasibility problem over a single Gram block indexed by the exact-degree
``r+2`` monomial basis.

``Q`` (linear lift): M is a member at level r when
``(sum x_i)^r * x^T M x`` equals ``sum_{|b|=r} x^b * sigma_b + sum_{|b|=r+2}
c_b x^b`` with each sigma_b a quadratic sum of squares and each c_b >= 0;
the test uses one PSD(n) Gram block per degree-r monomial and a nonnegative
scalar per degree-(r+2) monomial.

At level 0 both families coincide with the cone of matrices decomposable as
(positive semidefinite) + (entrywise nonnegative).

Verdicts: MEMBER comes with an extracted Gram certificate whose exact
re-expansion residual is checked; NOT_MEMBER is backed by the solver's
infeasibility ray; everything on the numerical boundary is INCONCLUSIVE.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import comb

import numpy as np

from .polycore import (
    LiftKind,
    MultiIndex,
    Poly,
    SymMatrix,
    coeff_norm,
    monomial_basis,
    polya_lift,
    quadratic_form,
    quartic_form,
)
from .sdpcore import BlockSdp, SdpBuilder, SdpStatus, nonneg_block, psd_block, solve


class ConeKind(str, Enum):
    K = "K"
    Q = "Q"


class Verdict(str, Enum):
    MEMBER = "MEMBER"
    NOT_MEMBER = "NOT_MEMBER"
    INCONCLUSIVE = "INCONCLUSIVE"


def gram_basis(n: int, r: int, kind: ConeKind) -> list[MultiIndex]:
    """Monomial basis indexing the Gram structure of a level-r membership SDP."""
    if kind is ConeKind.K:
        return monomial_basis(n, r + 2, exact_degree=True)
    return monomial_basis(n, r, exact_degree=True)


def lifted_poly(m: SymMatrix, r: int, kind: ConeKind) -> Poly:
    """The exact lifted polynomial whose representation is being certified."""
    if kind is ConeKind.K:
        return polya_lift(quartic_form(m), r, LiftKind.QUADRATIC)
    return polya_lift(quadratic_form(m), r, LiftKind.LINEAR)


@dataclass
class MembershipProblem:
    matrix: SymMatrix
    r: int
    kind: ConeKind
    sdp: BlockSdp
    index_map: dict[MultiIndex, int]  # lifted monomial -> constraint row
    basis: list[MultiIndex]  # Gram basis (K: degree r+2; Q: degree r)
    scalar_basis: list[MultiIndex] | None = None  # Q only: degree r+2 monomials


@dataclass
class SosCertificate:
    """Gram data witnessing a lifted-polynomial representation.

    kind K: one Gram matrix over the exact-degree-(r+2) monomial basis.
    kind Q: one n x n Gram matrix per degree-r monomial plus one nonnegative
    scalar per degree-(r+2) monomial.
    """

    kind: ConeKind
    r: int
    n: int
    gram: np.ndarray | None = None
    gram_blocks: list[np.ndarray] | None = None
    scalars: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)

    def to_text(self) -> str:
        doc = {
            "format": "coposos-certificate-v1",
            "kind": self.kind.value,
            "r": self.r,
            "n": self.n,
            "provenance": self.provenance,
        }
        if self.kind is ConeKind.K:
            doc["gram"] = [[float(v) for v in row] for row in self.gram]
        else:
            doc["gram_blocks"] = [
                [[float(v) for v in row] for row in blk] for blk in self.gram_blocks
            ]
            doc["scalars"] = [float(v) for v in self.scalars]
        return json.dumps(doc, indent=1)

    @classmethod
    def from_text(cls, text: str) -> "SosCertificate":
        doc = json.loads(text)
        if doc.get("format") != "coposos-certificate-v1":
            raise ValueError("unrecognized certificate format")
        kind = ConeKind(doc["kind"])
        cert = cls(
            kind=kind,
            r=int(doc["r"]),
            n=int(doc["n"]),
            provenance=doc.get("provenance", {}),
        )
        if kind is ConeKind.K:
            cert.gram = np.array(doc["gram"], dtype=float)
        else:
            cert.gram_blocks = [np.array(b, dtype=float) for b in doc["gram_blocks"]]
            cert.scalars = np.array(doc["scalars"], dtype=float)
        return cert


def build_K_membership(m: SymMatrix, r: int) -> MembershipProblem:
    """SDP feasibility: find a PSD Gram matrix reproducing the quartic lift."""
    if r < 0:
        raise ValueError("level must be >= 0")
    n = m.n
    basis = gram_basis(n, r, ConeKind.K)
    pos = {mono: t for t, mono in enumerate(basis)}
    lifted = lifted_poly(m, r, ConeKind.K)

    # Row per monomial of degree 2r+4: sum of Gram entries over all splittings
    # equals the lifted coefficient (zero for monomials absent from the lift).
    rows: dict[MultiIndex, list] = {
        gamma: [] for gamma in monomial_basis(n, 2 * r + 4, exact_degree=True)
    }
    for ti, beta in enumerate(basis):
        for tj in range(ti, len(basis)):
            gamma = tuple(a + b for a, b in zip(beta, basis[tj]))
            # entry counted once; the builder doubles off-diagonal pairs
            rows[gamma].append((0, ti, tj, 1.0))

    builder = SdpBuilder([psd_block(len(basis))])
    index_map: dict[MultiIndex, int] = {}
    for gamma, entries in rows.items():
        rhs = float(lifted.coeff(gamma))
        index_map[gamma] = builder.add_row(entries, rhs, label=gamma)
    sdp = builder.build()
    return MembershipProblem(
        matrix=m, r=r, kind=ConeKind.K, sdp=sdp, index_map=index_map, basis=basis
    )


def build_Q_membership(m: SymMatrix, r: int) -> MembershipProblem:
    """SDP feasibility for the linear-lift representation with split multipliers."""
    if r < 0:
        raise ValueError("level must be >= 0")
    n = m.n
    basis = gram_basis(n, r, ConeKind.Q)  # degree-r monomials, one PSD(n) each
    scalar_basis = monomial_basis(n, r + 2, exact_degree=True)
    scalar_pos = {mono: t for t, mono in enumerate(scalar_basis)}
    lifted = lifted_poly(m, r, ConeKind.Q)

    blocks = [psd_block(n) for _ in basis] + [nonneg_block(len(scalar_basis))]
    builder = SdpBuilder(blocks)
    scalar_block = len(basis)

    rows: dict[MultiIndex, list] = {gamma: [] for gamma in scalar_basis}
    for bi, beta in enumerate(basis):
        for i in range(n):
            for j in range(i, n):
                gamma = list(beta)
                gamma[i] += 1
                gamma[j] += 1
                rows[tuple(gamma)].append((bi, i, j, 1.0))
    for gamma in scalar_basis:
        rows[gamma].append((scalar_block, scalar_pos[gamma], scalar_pos[gamma], 1.0))

    index_map: dict[MultiIndex, int] = {}
    for gamma, entries in rows.items():
        index_map[gamma] = builder.add_row(
            entries, float(lifted.coeff(gamma)), label=gamma
        )
    sdp = builder.build()
    return MembershipProblem(
        matrix=m,
        r=r,
        kind=ConeKind.Q,
        sdp=sdp,
        index_map=index_map,
        basis=basis,
        scalar_basis=scalar_basis,
    )


def build_membership(m: SymMatrix, r: int, kind: ConeKind) -> MembershipProblem:
    if kind is ConeKind.K:
        return build_K_membership(m, r)
    return build_Q_membership(m, r)


@dataclass
class MembershipResult:
    verdict: Verdict
    certificate: SosCertificate | None = None
    infeasibility_quality: float | None = None
    residual: Fraction | None = None
    min_gram_eig: float | None = None
    solution: object = None
    message: str = ""


def _extract_certificate(problem: MembershipProblem, sol, eps: float) -> SosCertificate:
    provenance = {
        "eps": eps,
        "primal_res": sol.primal_res,
        "dual_res": sol.dual_res,
        "gap": sol.gap,
        "iterations": sol.iterations,
    }
    if problem.kind is ConeKind.K:
        return SosCertificate(
            kind=ConeKind.K,
            r=problem.r,
            n=problem.matrix.n,
            gram=np.asarray(sol.x_blocks[0]),
            provenance=provenance,
        )
    return SosCertificate(
        kind=ConeKind.Q,
        r=problem.r,
        n=problem.matrix.n,
        gram_blocks=[np.asarray(b) for b in sol.x_blocks[:-1]],
        scalars=np.asarray(sol.x_blocks[-1]),
        provenance=provenance,
    )


def decide_membership(problem: MembershipProblem, eps: float = 1e-8) -> MembershipResult:
    """MEMBER with validated certificate, certified NOT_MEMBER, or INCONCLUSIVE.

    MEMBER requires re-expansion residual <= eps and smallest Gram eigenvalue
    >= -eps; NOT_MEMBER requires an infeasibility ray of quality <= eps.
    Boundary cases meeting neither bar are INCONCLUSIVE, never guessed.
    """
    sol = solve(problem.sdp, eps=min(eps, 1e-8))
    if sol.status == SdpStatus.OPTIMAL:
        cert = _extract_certificate(problem, sol, eps)
        report = validate_certificate(problem.matrix, cert, tol=eps)
        if report.residual <= eps and report.min_gram_eig >= -eps:
            return MembershipResult(
                verdict=Verdict.MEMBER,
                certificate=cert,
                residual=report.residual,
                min_gram_eig=report.min_gram_eig,
                solution=sol,
            )
        return MembershipResult(
            verdict=Verdict.INCONCLUSIVE,
            certificate=cert,
            residual=report.residual,
            min_gram_eig=report.min_gram_eig,
            solution=sol,
            message="solution found but certificate fails the membership bar",
        )
    if sol.status == SdpStatus.PRIMAL_INFEASIBLE:
        quality = _ray_quality(problem.sdp, sol)
        if quality <= eps:
            return MembershipResult(
                verdict=Verdict.NOT_MEMBER,
                infeasibility_quality=quality,
                solution=sol,
            )
        return MembershipResult(
            verdict=Verdict.INCONCLUSIVE,
            infeasibility_quality=quality,
            solution=sol,
            message="infeasibility ray below certificate quality bar",
        )
    return MembershipResult(
        verdict=Verdict.INCONCLUSIVE, solution=sol, message=sol.message
    )


def _ray_quality(sdp: BlockSdp, sol) -> float:
    """Residual of the normalized dual improving ray (smaller is better)."""
    y = sol.certificate["ray_y"]
    scale = float(sdp.b @ y)
    if scale <= 0:
        return float("inf")
    y = y / scale
    v = -(sdp.A.T @ y)
    worst = 0.0
    for blk, part in zip(sdp.blocks, sdp.unpack(v)):
        if blk.kind == "psd":
            w = np.linalg.eigvalsh(part)
            worst = max(worst, float(max(0.0, -w[0])))
        else:
            worst = max(worst, float(max(0.0, -np.min(part))))
    return worst


@dataclass
class CertificateReport:
    residual: Fraction  # coefficient norm of (lift - re-expansion), exact
    min_gram_eig: float
    min_scalar: float | None
    max_abs_entry: float
    ok: bool


def _rationalize(arr: np.ndarray) -> list[list[Fraction]]:
    return [[Fraction(float(v)) for v in row] for row in np.atleast_2d(arr)]


def certificate_expansion(cert: SosCertificate) -> Poly:
    """Exact re-expansion of the certificate's polynomial."""
    n = cert.n
    if cert.kind is ConeKind.K:
        basis = gram_basis(n, cert.r, ConeKind.K)
        terms: dict[MultiIndex, Fraction] = {}
        rational = _rationalize(cert.gram)
        for i, beta in enumerate(basis):
            for j, beta2 in enumerate(basis):
                c = rational[i][j]
                if c == 0:
                    continue
                gamma = tuple(a + b for a, b in zip(beta, beta2))
                terms[gamma] = terms.get(gamma, Fraction(0)) + c
        return Poly(n, terms)
    basis = gram_basis(n, cert.r, ConeKind.Q)
    scalar_basis = monomial_basis(n, cert.r + 2, exact_degree=True)
    total = Poly.zero(n)
    for beta, block in zip(basis, cert.gram_blocks):
        sigma = quadratic_form(SymMatrix.from_float(np.asarray(block)))
        total = total + Poly(n, {tuple(beta): 1}) * sigma
    terms = {}
    for gamma, c in zip(scalar_basis, np.asarray(cert.scalars)):
        val = Fraction(float(c))
        if val != 0:
            terms[gamma] = val
    return total + Poly(n, terms)


def validate_certificate(
    m: SymMatrix, cert: SosCertificate, tol: float = 1e-6
) -> CertificateReport:
    """Exact re-expansion check plus Gram spectrum and magnitude audit.

    Recomputes the lifted polynomial exactly, subtracts the certificate's
    expansion and reports the coefficient-norm residual; also reports the
    smallest Gram eigenvalue, the smallest scalar multiplier (kind Q) and
    the largest entry magnitude (certificate bit-size audit).
    """
    if cert.n != m.n:
        raise ValueError("certificate dimension does not match the matrix")
    if cert.kind is ConeKind.K:
        expected_side = comb(m.n + cert.r + 1, cert.r + 2)
        if np.asarray(cert.gram).shape != (expected_side, expected_side):
            raise ValueError("Gram matrix side does not match the level")
    diff = lifted_poly(m, cert.r, cert.kind) - certificate_expansion(cert)
    residual = coeff_norm(diff)

    if cert.kind is ConeKind.K:
        eigs = np.linalg.eigvalsh(np.asarray(cert.gram, dtype=float))
        min_eig = float(eigs[0])
        min_scalar = None
        max_entry = float(np.max(np.abs(cert.gram))) if cert.gram.size else 0.0
    else:
        min_eig = min(
            float(np.linalg.eigvalsh(np.asarray(b, dtype=float))[0])
            for b in cert.gram_blocks
        )
        min_scalar = float(np.min(cert.scalars)) if len(cert.scalars) else 0.0
        max_entry = max(
            max(float(np.max(np.abs(b))) for b in cert.gram_blocks),
            float(np.max(np.abs(cert.scalars))) if len(cert.scalars) else 0.0,
        )
    ok = residual <= Fraction(float(tol)) and min_eig >= -tol
    if min_scalar is not None:
        ok = ok and min_scalar >= -tol
    return CertificateReport(
        residual=residual,
        min_gram_eig=min_eig,
        min_scalar=min_scalar,
        max_abs_entry=max_entry,
        ok=bool(ok),
    )
