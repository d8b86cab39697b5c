"""Exact desk-scale solving of standard-form LPs and mixed-integer models.

``solve_lp`` is a dense two-phase tableau simplex with Bland's rule, so it
is deterministic and cannot cycle.  ``solve_milp`` wraps it in best-first
branch and bound on the most fractional integer variable.  Both are pure
functions; the LP backend of the branch and bound is injectable, which is
the seam for plugging in an external solver.
"""

from __future__ import annotations

import dataclasses
import heapq
import math
import time
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping

import numpy as np

from .model import INF, LinearModel, StandardFormLP, to_standard_form

FEASIBILITY_TOL = 1e-7
INTEGRALITY_TOL = 1e-6
OBJECTIVE_TOL = 1e-9
_PIVOT_TOL = 1e-10
_COST_TOL = 1e-9


class SolveStatus(Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    LIMIT = "Limit"


@dataclass(frozen=True)
class SolveStats:
    iterations: int = 0
    nodes: int = 0
    wall_time_s: float = 0.0


@dataclass(frozen=True)
class Solution:
    """Result of one solve.  ``objective`` is reported in the model's
    original sense (un-negated); ``None`` unless an incumbent exists."""

    status: SolveStatus
    objective: float | None
    assignment: Mapping[str, float]
    stats: SolveStats
    dual_objective: float | None = None

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "objective": self.objective,
            "assignment": dict(self.assignment),
            "stats": {
                "iterations": self.stats.iterations,
                "nodes": self.stats.nodes,
                "wall_time_s": self.stats.wall_time_s,
            },
        }


# ---------------------------------------------------------------------------
# equality-form construction


@dataclass
class _ColumnSpec:
    """How one structural column maps back to an original variable:
    x[var] = base + sign * y (free variables get a +/- column pair)."""

    var: int
    sign: float
    base: float


def _build_equality_form(lp: StandardFormLP):
    """Rewrite bounded variables and ranged rows as ``A y = b, y >= 0``.

    Returns ``None`` for an empty variable box, otherwise the equality-form
    data plus the bookkeeping needed to recover original variable values.
    """
    cols: list[_ColumnSpec] = []
    caps: list[tuple[int, float]] = []  # (column index, finite cap on y)
    col_of_var: dict[int, list[int]] = {}
    for j in range(lp.n):
        lo, hi = lp.l_x[j], lp.u_x[j]
        if lo > hi:
            return None
        if math.isfinite(lo):
            k = len(cols)
            cols.append(_ColumnSpec(j, 1.0, lo))
            col_of_var[j] = [k]
            if math.isfinite(hi):
                caps.append((k, hi - lo))
        elif math.isfinite(hi):
            k = len(cols)
            cols.append(_ColumnSpec(j, -1.0, hi))
            col_of_var[j] = [k]
        else:
            k = len(cols)
            cols.append(_ColumnSpec(j, 1.0, 0.0))
            cols.append(_ColumnSpec(j, -1.0, 0.0))
            col_of_var[j] = [k, k + 1]

    n_struct = len(cols)
    c_struct = np.zeros(n_struct)
    for k, spec in enumerate(cols):
        c_struct[k] = lp.c[spec.var] * spec.sign
    const_shift = sum(lp.c[spec.var] * spec.base for spec in cols)

    base_of_var = [cols[col_of_var[j][0]].base for j in range(lp.n)]
    ranged: list[tuple[dict[int, float], float, float]] = []
    for i in range(lp.m):
        row = lp.rows[i]
        shift = sum(a * base_of_var[j] for j, a in row.items())
        coeffs: dict[int, float] = {}
        for j, a in row.items():
            for k in col_of_var[j]:
                coeffs[k] = coeffs.get(k, 0.0) + a * cols[k].sign
        ranged.append((coeffs, lp.l_s[i] - shift, lp.u_s[i] - shift))
    for k, cap in caps:
        ranged.append(({k: 1.0}, -INF, cap))

    # split into one-sided rows / equalities with nonnegative right sides
    directed: list[tuple[dict[int, float], float, str]] = []
    for coeffs, lo, hi in ranged:
        if lo == hi:
            directed.append((coeffs, lo, "eq"))
            continue
        if math.isfinite(lo):
            directed.append((coeffs, lo, "ge"))
        if math.isfinite(hi):
            directed.append((coeffs, hi, "le"))

    def directed_kind(rhs: float, kind: str) -> str:
        # negative right sides get the row negated, which swaps le and ge
        return kind if rhs >= 0 else {"le": "ge", "ge": "le", "eq": "eq"}[kind]

    m_eq = len(directed)
    n_extra = sum(
        2 if directed_kind(rhs, kind) == "ge" else 1 for _, rhs, kind in directed
    )
    A = np.zeros((m_eq, n_struct + n_extra))
    b = np.zeros(m_eq)
    artificial = np.zeros(n_struct + n_extra, dtype=bool)
    basis: list[int] = []
    next_col = n_struct
    for r, (coeffs, rhs, kind) in enumerate(directed):
        sign = 1.0
        if rhs < 0:
            sign, rhs = -1.0, -rhs
            kind = {"le": "ge", "ge": "le", "eq": "eq"}[kind]
        for k, a in coeffs.items():
            A[r, k] = sign * a
        b[r] = rhs
        if kind == "le":
            A[r, next_col] = 1.0
            basis.append(next_col)
            next_col += 1
        elif kind == "ge":
            A[r, next_col] = -1.0
            A[r, next_col + 1] = 1.0
            artificial[next_col + 1] = True
            basis.append(next_col + 1)
            next_col += 2
        else:
            A[r, next_col] = 1.0
            artificial[next_col] = True
            basis.append(next_col)
            next_col += 1

    c_full = np.zeros(n_struct + n_extra)
    c_full[:n_struct] = c_struct
    return A, b, c_full, artificial, basis, cols, base_of_var, const_shift


def _pivot(T: np.ndarray, basis: list[int], row: int, col: int) -> None:
    T[row + 1] /= T[row + 1, col]
    piv = T[row + 1]
    for r in range(T.shape[0]):
        if r != row + 1 and T[r, col] != 0.0:
            T[r] -= T[r, col] * piv
    basis[row] = col


def _simplex_iterate(
    T: np.ndarray, basis: list[int], barred: np.ndarray, budget: int
) -> tuple[str, int]:
    """Bland-rule pivoting until optimal/unbounded/budget exhaustion.
    ``barred`` columns may never enter the basis."""
    iters = 0
    ncols = T.shape[1] - 1
    while iters < budget:
        enter = -1
        for j in range(ncols):
            if not barred[j] and T[0, j] < -_COST_TOL:
                enter = j
                break
        if enter < 0:
            return "optimal", iters
        leave = -1
        best_ratio = INF
        for r in range(1, T.shape[0]):
            a = T[r, enter]
            if a > _PIVOT_TOL:
                ratio = T[r, -1] / a
                if ratio < best_ratio - _PIVOT_TOL:
                    best_ratio, leave = ratio, r
                elif (
                    leave > 0
                    and abs(ratio - best_ratio) <= _PIVOT_TOL
                    and basis[r - 1] < basis[leave - 1]
                ):
                    leave = r
        if leave < 0:
            return "unbounded", iters
        _pivot(T, basis, leave - 1, enter)
        iters += 1
    return "limit", iters


def solve_lp(lp: StandardFormLP, budget: int = 10_000) -> Solution:
    """Two-phase simplex.  Returns a vertex-optimal solution for feasible
    bounded LPs; ``Limit`` status (not an exception) on budget exhaustion.

    ``dual_objective`` is recomputed independently from the final basis and
    the untouched input data, so tests can assert strong duality.
    """
    start = time.perf_counter()

    def done(status, objective=None, assignment=None, iters=0, dual=None):
        return Solution(
            status=status,
            objective=objective,
            assignment=assignment or {},
            stats=SolveStats(
                iterations=iters, nodes=0, wall_time_s=time.perf_counter() - start
            ),
            dual_objective=dual,
        )

    built = _build_equality_form(lp)
    if built is None:
        return done(SolveStatus.INFEASIBLE)
    A, b, c_full, artificial, basis, cols, base_of_var, const_shift = built
    m_eq, ncols = A.shape
    rows_alive = list(range(m_eq))

    T = np.zeros((m_eq + 1, ncols + 1))
    T[1:, :ncols] = A
    T[1:, -1] = b
    T[0, :ncols] = artificial.astype(float)  # phase-1 costs
    for r in range(m_eq):
        if artificial[basis[r]]:
            T[0] -= T[r + 1]
    total_iters = 0

    if artificial.any():
        status, iters = _simplex_iterate(T, basis, np.zeros(ncols, dtype=bool), budget)
        total_iters += iters
        if status == "limit":
            return done(SolveStatus.LIMIT, iters=total_iters)
        if -T[0, -1] > FEASIBILITY_TOL:
            return done(SolveStatus.INFEASIBLE, iters=total_iters)
        # drive remaining artificials out of the basis; drop redundant rows
        drop: list[int] = []
        for r in range(m_eq):
            if not artificial[basis[r]]:
                continue
            for j in range(ncols):
                if not artificial[j] and abs(T[r + 1, j]) > _COST_TOL:
                    _pivot(T, basis, r, j)
                    break
            else:
                drop.append(r)
        if drop:
            T = np.delete(T, [r + 1 for r in drop], axis=0)
            for r in sorted(drop, reverse=True):
                basis.pop(r)
                rows_alive.pop(r)

    c_B = c_full[basis]
    T[0, :ncols] = c_full - c_B @ T[1:, :ncols]
    T[0, -1] = -(c_B @ T[1:, -1])
    status, iters = _simplex_iterate(T, basis, artificial, budget - total_iters)
    total_iters += iters
    if status == "limit":
        return done(SolveStatus.LIMIT, iters=total_iters)
    if status == "unbounded":
        return done(SolveStatus.UNBOUNDED, iters=total_iters)

    y = np.zeros(ncols)
    for r, col in enumerate(basis):
        y[col] = T[r + 1, -1]
    x = np.array(base_of_var, dtype=float) if lp.n else np.zeros(0)
    for k, spec in enumerate(cols):
        x[spec.var] += spec.sign * y[k]

    minimized = float(np.dot(np.asarray(lp.c), x))
    objective = -minimized if lp.negated_objective else minimized

    dual_objective = None
    try:
        B = A[np.ix_(rows_alive, basis)]
        pi = np.linalg.solve(B.T, c_full[basis])
        dual_min = float(pi @ b[rows_alive]) + const_shift
        dual_objective = -dual_min if lp.negated_objective else dual_min
    except np.linalg.LinAlgError:
        pass

    assignment = {lp.var_names[j]: float(x[j]) for j in range(lp.n)}
    return done(SolveStatus.OPTIMAL, objective, assignment, total_iters, dual_objective)


# ---------------------------------------------------------------------------
# branch and bound


def _fractional_vars(
    lp: StandardFormLP, x: Mapping[str, float]
) -> list[tuple[int, float]]:
    out = []
    for j, name in enumerate(lp.var_names):
        if lp.is_integer and lp.is_integer[j]:
            v = x[name]
            if abs(v - round(v)) > INTEGRALITY_TOL:
                out.append((j, v))
    return out


def _box_feasible(lp: StandardFormLP, x: np.ndarray) -> bool:
    for j in range(lp.n):
        if x[j] < lp.l_x[j] - FEASIBILITY_TOL or x[j] > lp.u_x[j] + FEASIBILITY_TOL:
            return False
    for i in range(lp.m):
        value = sum(a * x[j] for j, a in lp.rows[i].items())
        if value < lp.l_s[i] - FEASIBILITY_TOL or value > lp.u_s[i] + FEASIBILITY_TOL:
            return False
    return True


def solve_milp(
    model: LinearModel,
    budget: int = 10_000,
    lp_budget: int = 10_000,
    lp_solver: Callable[[StandardFormLP, int], Solution] = solve_lp,
) -> Solution:
    """Best-first branch and bound over LP relaxations.

    Branches on the most fractional integer variable (fraction nearest
    one half, ties by lowest ordinal); nodes are explored lowest relaxation
    bound first, ties by insertion order.  Exhausting the tree proves the
    incumbent optimal; exhausting the node budget returns ``Limit`` with
    the best incumbent found.  Reported objectives are not rounded.
    """
    start = time.perf_counter()
    lp = to_standard_form(model)
    orient = -1.0 if lp.negated_objective else 1.0

    counter = 0
    heap: list[tuple[float, int, tuple[float, ...], tuple[float, ...]]] = []
    heapq.heappush(heap, (-INF, counter, lp.l_x, lp.u_x))
    incumbent: Solution | None = None
    incumbent_min = INF
    nodes = 0
    iterations = 0

    def finish(status: SolveStatus) -> Solution:
        stats = SolveStats(
            iterations=iterations, nodes=nodes, wall_time_s=time.perf_counter() - start
        )
        if incumbent is not None:
            return dataclasses.replace(incumbent, status=status, stats=stats)
        return Solution(status=status, objective=None, assignment={}, stats=stats)

    while heap:
        bound, _, l_x, u_x = heapq.heappop(heap)
        if bound >= incumbent_min - OBJECTIVE_TOL:
            continue
        if nodes >= budget:
            return finish(SolveStatus.LIMIT)
        nodes += 1
        node_lp = dataclasses.replace(lp, l_x=l_x, u_x=u_x)
        relax = lp_solver(node_lp, lp_budget)
        iterations += relax.stats.iterations
        if relax.status is SolveStatus.INFEASIBLE:
            continue
        if relax.status is SolveStatus.UNBOUNDED:
            return Solution(
                status=SolveStatus.UNBOUNDED,
                objective=None,
                assignment={},
                stats=SolveStats(
                    iterations=iterations,
                    nodes=nodes,
                    wall_time_s=time.perf_counter() - start,
                ),
            )
        if relax.status is SolveStatus.LIMIT:
            return finish(SolveStatus.LIMIT)
        relax_min = orient * relax.objective
        if relax_min >= incumbent_min - OBJECTIVE_TOL:
            continue
        fractional = _fractional_vars(lp, relax.assignment)
        if not fractional:
            x = np.array([relax.assignment[name] for name in lp.var_names])
            snapped = x.copy()
            for j in range(lp.n):
                if lp.is_integer and lp.is_integer[j]:
                    snapped[j] = float(round(snapped[j]))
            if _box_feasible(node_lp, snapped):
                x = snapped
            minimized = float(np.dot(np.asarray(lp.c), x))
            if minimized < incumbent_min - OBJECTIVE_TOL:
                incumbent_min = minimized
                incumbent = Solution(
                    status=SolveStatus.OPTIMAL,
                    objective=orient * minimized,
                    assignment={lp.var_names[j]: float(x[j]) for j in range(lp.n)},
                    stats=SolveStats(),
                )
            continue
        j, value = min(
            fractional,
            key=lambda jv: (abs(jv[1] - math.floor(jv[1]) - 0.5), jv[0]),
        )
        down_u = list(u_x)
        down_u[j] = float(math.floor(value))
        up_l = list(l_x)
        up_l[j] = float(math.ceil(value))
        if down_u[j] >= l_x[j]:
            counter += 1
            heapq.heappush(heap, (relax_min, counter, l_x, tuple(down_u)))
        if up_l[j] <= u_x[j]:
            counter += 1
            heapq.heappush(heap, (relax_min, counter, tuple(up_l), u_x))

    if incumbent is not None:
        return finish(SolveStatus.OPTIMAL)
    return finish(SolveStatus.INFEASIBLE)
