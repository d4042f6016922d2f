"""Exact W_p on R^d for discrete measures via a dense transportation solve.

The core solver is a primal transportation simplex on the dense bipartite
graph: north-west-corner start, spanning-tree duals, and a lowest-index
lexicographic pivot rule so degenerate instances resolve deterministically
(the solver begins with most-negative-reduced-cost entering steps for speed
and falls back to the provably finite lexicographic rule if degeneracy drags
on). Every solve ends with a complementary-slackness and marginal audit;
anything suspicious raises :class:`SolverFailure` rather than returning a
value.

Equal-size uniform-weight instances route to a cubic-time assignment solve
(`scipy.optimize.linear_sum_assignment`), which is what makes the n ~ 1000
rate experiments tractable.

Costs are |x - y|^p with the Euclidean norm; the p-th root is applied only
when reporting, never inside the solver.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import (
    DimensionMismatch,
    InvalidOrder,
    ProblemTooLarge,
    SolverFailure,
)
from .measures import DiscreteMeasure
from .ot1d import _compensated_cumsum

# Dense cost-matrix size guard.
MAX_DENSE_CELLS = 50_000_000


@dataclass(frozen=True)
class TransportPlan:
    """Sparse optimal coupling certifying a primal value.

    ``primal_value`` is the p-th root of the total cost; triples are sorted
    lexicographically by (i, j) and carry strictly positive mass.
    """

    i: np.ndarray
    j: np.ndarray
    mass: np.ndarray
    primal_value: float
    order: float
    source_size: int
    target_size: int

    def source_marginal(self) -> np.ndarray:
        return np.bincount(self.i, weights=self.mass, minlength=self.source_size)

    def target_marginal(self) -> np.ndarray:
        return np.bincount(self.j, weights=self.mass, minlength=self.target_size)

    def cost(self, mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
        """Recompute sum mass * |x_i - y_j|^p from the triples."""
        gaps = np.linalg.norm(mu.points[self.i] - nu.points[self.j], axis=1)
        return float(np.sum(self.mass * gaps**self.order))


@dataclass(frozen=True)
class DualCertificate:
    """Kantorovich potentials on the two supports, for p = 1.

    Feasibility: f_i + g_j <= |x_i - y_j| for every support pair. The gauge
    freedom (f + c, g - c) is fixed by anchoring f at the first atom of mu.
    """

    f: np.ndarray
    g: np.ndarray
    dual_value: float

    def feasibility_margin(self, cost: np.ndarray) -> float:
        """Largest violation of f_i + g_j <= cost_ij (negative if feasible)."""
        return float(np.max(self.f[:, None] + self.g[None, :] - cost))


def _check_pair(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float) -> None:
    if mu.dim != nu.dim:
        raise DimensionMismatch(f"dim {mu.dim} vs {nu.dim}")
    if p < 1:
        raise InvalidOrder(f"order must satisfy p >= 1, got {p}")
    if mu.n * nu.n > MAX_DENSE_CELLS:
        raise ProblemTooLarge(f"{mu.n} x {nu.n} cost matrix exceeds the dense guard")


def _northwest_corner(a: np.ndarray, b: np.ndarray):
    """Initial basic solution with exactly n + m - 1 cells (zeros allowed)."""
    n, m = a.shape[0], b.shape[0]
    ca = _compensated_cumsum(a)
    cb = _compensated_cumsum(b)
    ca[-1] = 1.0
    cb[-1] = 1.0
    cells = []
    i = j = 0
    t = 0.0
    while True:
        nxt = min(ca[i], cb[j])
        cells.append((i, j, max(0.0, nxt - t)))
        t = nxt
        if i == n - 1 and j == m - 1:
            break
        if ca[i] < cb[j]:
            i += 1
        elif cb[j] < ca[i]:
            j += 1
        elif i < n - 1:  # tie: advance the row, leaving a zero cell behind
            i += 1
        else:
            j += 1
    return cells


def _adjacency(basic_cells, n, m):
    """Node ids: rows 0..n-1, columns n..n+m-1."""
    adj = [[] for _ in range(n + m)]
    for i, j in basic_cells:
        adj[i].append(n + j)
        adj[n + j].append(i)
    return adj


def _tree_duals(rows, adj, n, m):
    """Solve u_i + v_j = c_ij on the spanning tree, anchored at u_0 = 0.

    ``rows`` is the cost matrix as a list of row lists.
    """
    pot = [None] * (n + m)
    pot[0] = 0.0
    stack = [0]
    while stack:
        k = stack.pop()
        pk = pot[k]
        if k < n:
            row = rows[k]
            for node in adj[k]:
                if pot[node] is None:
                    pot[node] = row[node - n] - pk
                    stack.append(node)
        else:
            for node in adj[k]:
                if pot[node] is None:
                    pot[node] = rows[node][k - n] - pk
                    stack.append(node)
    if any(x is None for x in pot):
        raise SolverFailure("basis does not span the bipartite graph")
    return np.array(pot[:n]), np.array(pot[n:])


def _cycle_path(adj, ei, ej, n):
    """Tree path from row node ei to column node ej, as a list of cells."""
    start, goal = ei, n + ej
    parent = [-2] * len(adj)
    parent[start] = -1
    dq = deque([start])
    while dq:
        k = dq.popleft()
        if k == goal:
            break
        for node in adj[k]:
            if parent[node] == -2:
                parent[node] = k
                dq.append(node)
    if parent[goal] == -2:
        raise SolverFailure("entering arc closes no cycle; basis corrupt")
    path = []
    node = goal
    while node != start:
        prev = parent[node]
        cell = (prev, node - n) if node >= n else (node, prev - n)
        path.append(cell)
        node = prev
    path.reverse()
    return path


def _transportation_simplex(C, a, b):
    """Optimal basic solution of min <C, X> s.t. marginals (a, b).

    Returns (mass dict over cells, u, v). Deterministic: ties in entering
    and leaving arcs break toward the lexicographically smallest cell.
    """
    n, m = C.shape
    cells = _northwest_corner(a, b)
    X = {}
    basic = []
    for i, j, mass in cells:
        X[(i, j)] = mass
        basic.append((i, j))
    cscale = max(1.0, float(np.max(C)))
    etol = 1e-11 * cscale
    dantzig_limit = 30 * (n + m) + 200
    total_limit = dantzig_limit + 300 * (n + m) + 2000
    crows = C.tolist()

    it = 0
    while True:
        adj = _adjacency(basic, n, m)
        u, v = _tree_duals(crows, adj, n, m)
        rc = C - u[:, None] - v[None, :]
        if it < dantzig_limit:
            flat = int(np.argmin(rc))  # first minimum in row-major = lex smallest
            ei, ej = divmod(flat, m)
            if rc[ei, ej] >= -etol:
                break
        else:
            # lexicographic (Bland-style) rule: provably finite under degeneracy
            neg = np.flatnonzero(rc.reshape(-1) < -etol)
            if neg.size == 0:
                break
            ei, ej = divmod(int(neg[0]), m)
        if it >= total_limit:
            raise SolverFailure(f"pivot limit {total_limit} exceeded on {n}x{m} instance")

        path = _cycle_path(adj, ei, ej, n)
        minus = path[0::2]
        plus = path[1::2]
        theta = min(X[c] for c in minus)
        leaving = min(c for c in minus if X[c] == theta)
        X[(ei, ej)] = theta
        for c in plus:
            X[c] += theta
        for c in minus:
            X[c] = max(0.0, X[c] - theta)
        del X[leaving]
        basic.remove(leaving)
        basic.append((ei, ej))
        it += 1

    # certify before returning
    if float(np.min(rc)) < -1e-9 * cscale:
        raise SolverFailure("negative reduced cost at claimed optimum")
    row_sum = np.zeros(n)
    col_sum = np.zeros(m)
    cost = 0.0
    for (i, j), mass in X.items():
        row_sum[i] += mass
        col_sum[j] += mass
        cost += mass * C[i, j]
    if np.max(np.abs(row_sum - a)) > 1e-9 or np.max(np.abs(col_sum - b)) > 1e-9:
        raise SolverFailure("marginal mismatch at claimed optimum")
    dual = float(a @ u + b @ v)
    if abs(cost - dual) > 1e-7 * max(1.0, abs(cost)):
        raise SolverFailure("strong-duality check failed at claimed optimum")
    return X, u, v


def _cost_matrix(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float) -> np.ndarray:
    D = cdist(mu.points, nu.points)
    return D if p == 1 else D**p


def _lex_order(points: np.ndarray) -> np.ndarray:
    return np.lexsort(points.T[::-1])


def _solve_simplex(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float):
    """Simplex solve on lexicographically sorted supports.

    Sorting makes the north-west-corner start the monotone coupling, which
    for 1D supports is already optimal (the solver still certifies this via
    reduced costs); results are mapped back to the original atom order.
    Returns (triples in original indices, u, v, total cost).
    """
    oa = _lex_order(mu.points)
    ob = _lex_order(nu.points)
    C = cdist(mu.points[oa], nu.points[ob])
    if p != 1:
        C = C**p
    X, u_s, v_s = _transportation_simplex(C, mu.weights[oa], nu.weights[ob])
    cost = float(sum(mass * C[i, j] for (i, j), mass in X.items()))
    triples = [(int(oa[i]), int(ob[j]), mass) for (i, j), mass in X.items() if mass > 0.0]
    u = np.empty(mu.n)
    v = np.empty(nu.n)
    u[oa] = u_s
    v[ob] = v_s
    return triples, u, v, cost


def _plan_from_triples(triples, primal_value, p, n, m) -> TransportPlan:
    triples = sorted(triples)
    i = np.array([t[0] for t in triples], dtype=np.intp)
    j = np.array([t[1] for t in triples], dtype=np.intp)
    mass = np.array([t[2] for t in triples], dtype=float)
    return TransportPlan(
        i=i, j=j, mass=mass, primal_value=primal_value, order=p,
        source_size=n, target_size=m,
    )


def _is_uniform(w: np.ndarray) -> bool:
    return bool(np.all(w == w[0]))


def wasserstein_exact(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float) -> TransportPlan:
    """Optimal transport plan for cost |x - y|^p between two discrete measures."""
    _check_pair(mu, nu, p)
    n, m = mu.n, nu.n
    if n == m and _is_uniform(mu.weights) and _is_uniform(nu.weights):
        C = _cost_matrix(mu, nu, p)
        cols = linear_sum_assignment(C)[1]
        cost = float(C[np.arange(n), cols].sum() / n)
        triples = [(i, int(cols[i]), 1.0 / n) for i in range(n)]
        return _plan_from_triples(triples, cost ** (1.0 / p), p, n, m)
    triples, _, _, cost = _solve_simplex(mu, nu, p)
    return _plan_from_triples(triples, cost ** (1.0 / p), p, n, m)


def dual_potentials_w1(mu: DiscreteMeasure, nu: DiscreteMeasure) -> DualCertificate:
    """Optimal Kantorovich potentials for p = 1 from the simplex tree duals."""
    _check_pair(mu, nu, 1.0)
    _, u, v, _ = _solve_simplex(mu, nu, 1.0)
    f = u - u[0]
    g = v + u[0]
    dual_value = float(mu.weights @ f + nu.weights @ g)
    return DualCertificate(f=f, g=g, dual_value=dual_value)


def duality_gap(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """|primal - dual| for p = 1; small by strong LP duality, else the solver lied."""
    _check_pair(mu, nu, 1.0)
    _, u, v, primal = _solve_simplex(mu, nu, 1.0)
    dual = float(mu.weights @ u + nu.weights @ v)
    return abs(primal - dual)
