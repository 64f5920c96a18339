"""Applications: quadratic programs over the simplex, graph stability and
chromatic bounds.

The bounds all route through the conic relaxations of :mod:`coposos.relax`:

- ``sqp_bound``             level-r bound on  min { x^T M x : x in simplex }
- ``sqp_reciprocal_bound``  level-r bound on its reciprocal (needs a P + N
                            witness for M and a positive minimum)
- ``stability_bound``       weighted stability-number bound
                            min { t : t*B - J in cone } for B in the
                            Motzkin-Straus-type family of the graph
- ``chromatic_bound``       two-variable program over products with complete
                            graphs, boxed and relaxed constraint-wise

``brute_alpha`` / ``brute_chi`` are the exact enumeration oracles used by
the test suites.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction

from .cones import ConeKind
from .polycore import SymMatrix
from .relax import (
    ConeConstraint,
    ConicProgram,
    RelaxationResult,
    SpnWitness,
    solve_relaxation,
    to_bounded,
)

BRUTE_ALPHA_CAP = 30
BRUTE_CHI_CAP = 12


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset[tuple[int, int]]
    weights: tuple[Fraction, ...]

    @classmethod
    def make(cls, n: int, edges, weights=None) -> "Graph":
        if n < 1:
            raise ValueError("graph needs at least one vertex")
        norm = set()
        for (i, j) in edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i},{j}) out of range")
            norm.add((min(i, j), max(i, j)))
        if weights is None:
            w = tuple(Fraction(1) for _ in range(n))
        else:
            w = tuple(Fraction(v) for v in weights)
            if len(w) != n:
                raise ValueError("one weight per vertex is required")
            if any(v <= 0 for v in w):
                raise ValueError("weights must be positive")
        return cls(n=n, edges=frozenset(norm), weights=w)

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def adjacency(self) -> SymMatrix:
        return SymMatrix.from_rows(
            [
                [1 if self.has_edge(i, j) else 0 for j in range(self.n)]
                for i in range(self.n)
            ]
        )

    def neighbors(self, i: int) -> list[int]:
        return [j for j in range(self.n) if self.has_edge(i, j)]


def cycle_graph(n: int) -> Graph:
    return Graph.make(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> Graph:
    return Graph.make(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def path_graph(n: int) -> Graph:
    return Graph.make(n, [(i, i + 1) for i in range(n - 1)])


def empty_graph(n: int) -> Graph:
    return Graph.make(n, [])


# -- graph file formats -------------------------------------------------------


def parse_dimacs(text: str) -> Graph:
    """DIMACS edge format: 'p edge n m' header, 'e i j' lines (1-indexed)."""
    n = None
    edges = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line[0] == "c":
            continue
        parts = line.split()
        if parts[0] == "p":
            if len(parts) < 4 or parts[1] not in ("edge", "edges", "col"):
                raise ValueError(f"bad problem line: {line!r}")
            n = int(parts[2])
        elif parts[0] == "e":
            i, j = int(parts[1]), int(parts[2])
            edges.append((i - 1, j - 1))
    if n is None:
        raise ValueError("missing 'p edge' line")
    return Graph.make(n, edges)


def parse_graph_json(text: str) -> Graph:
    """Structured form: {"n": int, "edges": [[i, j]], "weights": [rat]?} (0-indexed)."""
    doc = json.loads(text)
    weights = doc.get("weights")
    if weights is not None:
        weights = [Fraction(str(v)) for v in weights]
    return Graph.make(int(doc["n"]), [tuple(e) for e in doc["edges"]], weights)


def parse_graph(text: str) -> Graph:
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return parse_graph_json(text)
    return parse_dimacs(text)


# -- matrix family for the weighted stability number --------------------------


def stability_qp_matrix(g: Graph) -> SymMatrix:
    """Canonical member of the family: 1/w_i diagonal, edge entries equal to
    the average of the endpoint diagonals, zero on non-edges."""
    rows = [[Fraction(0)] * g.n for _ in range(g.n)]
    for i in range(g.n):
        rows[i][i] = 1 / g.weights[i]
    for (i, j) in g.edges:
        avg = (rows[i][i] + rows[j][j]) / 2
        rows[i][j] = avg
        rows[j][i] = avg
    return SymMatrix.from_rows(rows)


def validate_stability_matrix(g: Graph, b: SymMatrix) -> None:
    """Check a user-supplied B against the family's defining constraints."""
    if b.n != g.n:
        raise ValueError("matrix size does not match the graph")
    for i in range(g.n):
        if b.entry(i, i) != 1 / g.weights[i]:
            raise ValueError(f"diagonal entry {i} must be 1/weight")
    for i in range(g.n):
        for j in range(i + 1, g.n):
            if g.has_edge(i, j):
                if b.entry(i, j) < (b.entry(i, i) + b.entry(j, j)) / 2:
                    raise ValueError(f"edge entry ({i},{j}) below the diagonal average")
            elif b.entry(i, j) != 0:
                raise ValueError(f"non-edge entry ({i},{j}) must be zero")


# -- standard quadratic programs ----------------------------------------------


def sqp_program(m_mat: SymMatrix) -> ConicProgram:
    """min { lambda : M + lambda * J in COP }; the simplex minimum is the
    negative of this program's value."""
    n = m_mat.n
    return ConicProgram.make(
        [1], [ConeConstraint(n, (SymMatrix.ones(n),), m_mat.scale(-1))]
    )


def sqp_box_bound(m_mat: SymMatrix) -> Fraction:
    return m_mat.max_abs_entry() + 1


def sqp_bound(
    m_mat: SymMatrix, r: int, kind: ConeKind, eps: float = 1e-8
) -> RelaxationResult:
    """Level-r bound on the simplex minimum of x^T M x.

    ``result.value`` holds the raw program value (min lambda); the bound on
    the simplex minimum is its negative, see :func:`sqp_bound_value`.
    """
    prog = sqp_program(m_mat)
    return solve_relaxation(prog, r, kind, sqp_box_bound(m_mat), eps=eps)


def sqp_bound_value(result: RelaxationResult) -> float:
    if result.value is None:
        raise ValueError(f"relaxation did not solve: {result.status.value}")
    return -result.value


def sqp_reciprocal_program(m_mat: SymMatrix) -> ConicProgram:
    """min { lambda : lambda * M - J in COP }, the reciprocal-value program."""
    n = m_mat.n
    return ConicProgram.make(
        [1], [ConeConstraint(n, (m_mat,), SymMatrix.ones(n))]
    )


def sqp_reciprocal_bound(
    m_mat: SymMatrix,
    r: int,
    kind: ConeKind,
    witness_split: tuple[SymMatrix, SymMatrix, Fraction] | None = None,
    eps: float = 1e-8,
) -> RelaxationResult:
    """Level-r bound on 1 / min { x^T M x : x in simplex }.

    Requires a split M = P + N with P positive definite: pass
    ``witness_split = (P, N, lambda_min_lower_bound)``; when omitted, the
    split is searched for and a ValueError is raised on refusal.  The box
    bound is 4n over half the certified eigenvalue lower bound.
    """
    prog = sqp_reciprocal_program(m_mat)
    if witness_split is None:
        from .relax import check_intspn

        w = check_intspn(
            ConicProgram.make(
                [0], [ConeConstraint(m_mat.n, (SymMatrix.zero(m_mat.n),), m_mat.scale(-1))]
            ),
            [0],
        )
        if not isinstance(w, SpnWitness):
            raise ValueError(f"no interior split found for M: {w.message}")
        lb = w.lambda_min_lb
    else:
        p_mat, n_mat, lb = witness_split
        if m_mat != p_mat + n_mat:
            raise ValueError("witness split does not sum to M")
        if any(v < 0 for row in n_mat.rows for v in row):
            raise ValueError("witness N part has a negative entry")
        lb = Fraction(lb)
        if lb <= 0:
            raise ValueError("eigenvalue lower bound must be positive")
        from .polycore import is_psd_exact

        if not is_psd_exact(p_mat - SymMatrix.identity(m_mat.n).scale(lb)):
            raise ValueError("eigenvalue lower bound is not certified by P")
    shift = lb / 2
    box = Fraction(4 * m_mat.n) / shift
    return solve_relaxation(prog, r, kind, box, eps=eps)


# -- weighted stability bounds ------------------------------------------------


def stability_bound(
    g: Graph,
    r: int,
    kind: ConeKind = ConeKind.K,
    b_mat: SymMatrix | None = None,
    eps: float = 1e-8,
) -> RelaxationResult:
    """min { t : t*B - J in cone } at level r; upper-bounds alpha(G, w).

    Decreasing in r.  B defaults to the canonical family member and may be
    overridden with any validated member.
    """
    if b_mat is None:
        b_mat = stability_qp_matrix(g)
    else:
        validate_stability_matrix(g, b_mat)
    diag = SymMatrix.diag([1 / w for w in g.weights])
    off = b_mat - diag  # entrywise nonnegative by the family constraints
    lb = min(1 / w for w in g.weights)
    return sqp_reciprocal_bound(
        b_mat, r, kind, witness_split=(diag, off, lb), eps=eps
    )


def stability_bound_value(result: RelaxationResult) -> float:
    if result.value is None:
        raise ValueError(f"relaxation did not solve: {result.status.value}")
    return result.value


# -- product graphs and the chromatic program ---------------------------------


def product_graph(g: Graph, t: int) -> Graph:
    """Cartesian product of the complete graph on t vertices with G.

    Vertex (p, i) maps to index p * n + i; (p, i) ~ (q, j) when p != q and
    i == j, or p == q and ij is an edge of G.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    n = g.n
    edges = []
    for p in range(t):
        for (i, j) in g.edges:
            edges.append((p * n + i, p * n + j))
    for i in range(n):
        for p in range(t):
            for q in range(p + 1, t):
                edges.append((p * n + i, q * n + i))
    return Graph.make(t * n, edges)


def chromatic_program(g: Graph) -> ConicProgram:
    """Two-variable program max y over (y, z) with one cone constraint per
    t = 1..n on matrices of side n*t; stated as min -y."""
    n = g.n
    constraints = []
    for t in range(1, n + 1):
        gt = product_graph(g, t)
        size = n * t
        ones = SymMatrix.ones(size)
        a_y = ones.scale(Fraction(-1, n * n))
        a_z = gt.adjacency().scale(n) + SymMatrix.identity(size).scale(n) - ones
        c_t = ones.scale(Fraction(-t, n * n))
        constraints.append(ConeConstraint(size, (a_y, a_z), c_t))
    return ConicProgram.make([-1, 0], constraints)


def chromatic_box_bound(g: Graph) -> Fraction:
    # covers both the coloring point (chi, 1) and the interior point (-n^2, 1)
    return Fraction(g.n * g.n + 1)


def chromatic_bound(
    g: Graph, r: int, kind: ConeKind = ConeKind.Q, eps: float = 1e-7
) -> tuple[float, RelaxationResult]:
    """Upper bound on the chromatic number from the boxed relaxation.

    Returns (bound, result) with bound = -value of the minimization form.
    The default kind Q keeps the largest PSD block at side n*t; at level 0
    the two kinds define the same cone.  The boxing deliberately encodes the
    variable box twice (inside the cone constraint and in the SDP diagonal),
    which leaves a degenerate optimal face; the default eps reflects the
    accuracy reliably certifiable there.
    """
    prog = to_bounded(chromatic_program(g), chromatic_box_bound(g))
    res = solve_relaxation(prog, r, kind, chromatic_box_bound(g), eps=eps)
    if res.value is None:
        return float("nan"), res
    return -res.value, res


def chromatic_interior_witness(g: Graph, t: int) -> SpnWitness:
    """The explicit split of the slack at (y, z) = (-n^2, 1):
    P = I and N = (t/n^2) J + n A + (n-1) I, exact."""
    n = g.n
    gt = product_graph(g, t)
    size = n * t
    p_mat = SymMatrix.identity(size)
    n_mat = (
        SymMatrix.ones(size).scale(Fraction(t, n * n))
        + gt.adjacency().scale(n)
        + SymMatrix.identity(size).scale(n - 1)
    )
    return SpnWitness(
        ybar=(Fraction(-n * n), Fraction(1)),
        p_mat=p_mat,
        n_mat=n_mat,
        lambda_min_lb=Fraction(1),
    )


# -- exact enumeration oracles -------------------------------------------------


def brute_alpha(g: Graph, weighted: bool = False):
    """Exact (weighted) stability number by branch and bound."""
    if g.n > BRUTE_ALPHA_CAP:
        raise ValueError(f"brute_alpha capped at {BRUTE_ALPHA_CAP} vertices")
    weights = g.weights if weighted else tuple(Fraction(1) for _ in range(g.n))
    order = sorted(range(g.n), key=lambda v: -len(g.neighbors(v)))
    adj = [set(g.neighbors(v)) for v in range(g.n)]
    best = Fraction(0)

    def extend(candidates, current):
        nonlocal best
        if current + sum(weights[v] for v in candidates) <= best:
            return
        if not candidates:
            best = max(best, current)
            return
        v = candidates[0]
        rest = candidates[1:]
        extend([u for u in rest if u not in adj[v]], current + weights[v])
        extend(rest, current)

    extend(order, Fraction(0))
    return best if weighted else int(best)


def brute_chi(g: Graph) -> int:
    """Exact chromatic number by backtracking k-coloring search."""
    if g.n > BRUTE_CHI_CAP:
        raise ValueError(f"brute_chi capped at {BRUTE_CHI_CAP} vertices")
    if not g.edges:
        return 1
    order = sorted(range(g.n), key=lambda v: -len(g.neighbors(v)))
    adj = [set(g.neighbors(v)) for v in range(g.n)]

    def colorable(k: int) -> bool:
        colors = [-1] * g.n

        def assign(idx: int, max_used: int) -> bool:
            if idx == g.n:
                return True
            v = order[idx]
            used = {colors[u] for u in adj[v] if colors[u] >= 0}
            # symmetry breaking: at most one brand-new color is worth trying
            for c in range(min(k - 1, max_used + 1) + 1):
                if c in used:
                    continue
                colors[v] = c
                if assign(idx + 1, max(max_used, c)):
                    return True
                colors[v] = -1
            return False

        return assign(0, -1)

    for k in range(2, g.n + 1):
        if colorable(k):
            return k
    return g.n
