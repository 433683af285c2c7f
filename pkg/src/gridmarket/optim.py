"""Small linear modelling layer on top of the HiGHS solvers shipped with scipy.

Dispatch and clearing build their problems through :class:`Model`; nothing
else in the package talks to a solver directly.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

log = logging.getLogger(__name__)

INF = math.inf
DEFAULT_EQ_SLACK = 1e-3


class ModelError(ValueError):
    """Raised for malformed models or misuse of a modelling helper."""


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    TIME_LIMIT = "TimeLimit"
    ERROR = "Error"


class LinExpr:
    """Sparse affine expression ``sum(coef * var) + const``."""

    __slots__ = ("terms", "const")
    __hash__ = None  # comparison operators build constraints

    def __init__(self, terms: Mapping[int, float] | None = None, const: float = 0.0):
        self.terms: dict[int, float] = dict(terms) if terms else {}
        self.const = float(const)

    @staticmethod
    def of(value) -> "LinExpr":
        if isinstance(value, LinExpr):
            return value
        if isinstance(value, Var):
            return LinExpr({value.index: 1.0})
        if isinstance(value, (int, float, np.integer, np.floating)):
            return LinExpr(const=float(value))
        raise TypeError(f"cannot use {type(value).__name__} in a linear expression")

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.const)

    def add_term(self, var: "Var", coef: float) -> "LinExpr":
        if coef:
            self.terms[var.index] = self.terms.get(var.index, 0.0) + coef
        return self

    def __iadd__(self, other):
        other = LinExpr.of(other)
        for k, v in other.terms.items():
            self.terms[k] = self.terms.get(k, 0.0) + v
        self.const += other.const
        return self

    def __isub__(self, other):
        other = LinExpr.of(other)
        for k, v in other.terms.items():
            self.terms[k] = self.terms.get(k, 0.0) - v
        self.const -= other.const
        return self

    def __add__(self, other):
        out = self.copy()
        out += other
        return out

    __radd__ = __add__

    def __sub__(self, other):
        out = self.copy()
        out -= other
        return out

    def __rsub__(self, other):
        return LinExpr.of(other) - self

    def __neg__(self):
        return LinExpr({k: -v for k, v in self.terms.items()}, -self.const)

    def __mul__(self, k):
        if isinstance(k, (LinExpr, Var)):
            raise TypeError("product of two expressions is not linear")
        k = float(k)
        return LinExpr({i: v * k for i, v in self.terms.items()}, self.const * k)

    __rmul__ = __mul__

    def __truediv__(self, k):
        return self * (1.0 / float(k))

    def __le__(self, other):
        return Constraint(self - other, "<=")

    def __ge__(self, other):
        return Constraint(self - other, ">=")

    def __eq__(self, other):
        return Constraint(self - other, "==")

    def __repr__(self):
        parts = [f"{v:+g}*x{k}" for k, v in self.terms.items()]
        return " ".join(parts + [f"{self.const:+g}"])


class Var:
    """Handle to a model column. Arithmetic promotes to :class:`LinExpr`."""

    __slots__ = ("index", "name")
    __hash__ = None

    def __init__(self, index: int, name: str):
        self.index = index
        self.name = name

    def _e(self):
        return LinExpr({self.index: 1.0})

    def __add__(self, o):
        return self._e() + o

    __radd__ = __add__

    def __sub__(self, o):
        return self._e() - o

    def __rsub__(self, o):
        return LinExpr.of(o) - self._e()

    def __neg__(self):
        return LinExpr({self.index: -1.0})

    def __mul__(self, k):
        return self._e() * k

    __rmul__ = __mul__

    def __truediv__(self, k):
        return self._e() / k

    def __le__(self, o):
        return self._e() <= o

    def __ge__(self, o):
        return self._e() >= o

    def __eq__(self, o):
        return self._e() == o

    def __repr__(self):
        return f"Var({self.name})"


@dataclass
class Constraint:
    """``expr (sense) 0`` where sense is one of ``<=``, ``>=``, ``==``."""

    expr: LinExpr
    sense: str
    name: str = ""
    row: int = -1


def quicksum(items: Iterable) -> LinExpr:
    out = LinExpr()
    for it in items:
        out += it
    return out


@dataclass
class Solution:
    status: Status
    objective: float = math.nan
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    duals: np.ndarray | None = None
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL or (
            self.status is Status.TIME_LIMIT and self.values.size > 0
        )

    def value(self, item) -> float:
        if isinstance(item, Var):
            return float(self.values[item.index])
        if isinstance(item, (int, float)):
            return float(item)
        expr = LinExpr.of(item)
        return float(expr.const + sum(c * self.values[i] for i, c in expr.terms.items()))

    def dual(self, con: Constraint) -> float:
        """Shadow price of ``con`` (LP only), in the sense of d objective / d rhs."""
        if self.duals is None:
            raise ModelError("duals are only available for pure LP models")
        return float(self.duals[con.row])


class Model:
    """Container of columns, rows and a linear objective.

    Equalities are stored as ranged rows ``rhs - eq_slack <= expr <= rhs + eq_slack``.
    Auxiliary indicators created with ``aux=True`` are continuous in [0, 1]
    unless ``strict_aux`` is set, which makes them binary for differential tests.
    """

    def __init__(self, name: str = "model", eq_slack: float = DEFAULT_EQ_SLACK,
                 strict_aux: bool = False):
        self.name = name
        self.eq_slack = float(eq_slack)
        self.strict_aux = strict_aux
        self.names: list[str] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.integer: list[bool] = []
        self.rows: list[Constraint] = []
        self.row_lo: list[float] = []
        self.row_hi: list[float] = []
        self.objective = LinExpr()
        self.maximize_sense = False
        self._abs_vars: list[int] = []

    # columns -------------------------------------------------------------
    def add_var(self, name: str, lb: float = 0.0, ub: float = INF, *,
                binary: bool = False, aux: bool = False) -> Var:
        if binary or (aux and self.strict_aux):
            lb, ub, is_int = 0.0, 1.0, True
        elif aux:
            lb, ub, is_int = 0.0, 1.0, False
        else:
            is_int = False
        if lb > ub:
            raise ModelError(f"variable {name}: lower bound {lb} above upper bound {ub}")
        self.names.append(name)
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.integer.append(is_int)
        return Var(len(self.names) - 1, name)

    @property
    def num_vars(self) -> int:
        return len(self.names)

    # rows ----------------------------------------------------------------
    def add(self, con: Constraint, name: str = "") -> Constraint:
        if not isinstance(con, Constraint):
            raise ModelError("add() expects a constraint built with <=, >= or ==")
        for k in con.expr.terms:
            if not 0 <= k < self.num_vars:
                raise ModelError(f"constraint {name!r} references unknown column {k}")
        rhs = -con.expr.const
        if con.sense == "<=":
            lo, hi = -INF, rhs
        elif con.sense == ">=":
            lo, hi = rhs, INF
        else:
            lo, hi = rhs - self.eq_slack, rhs + self.eq_slack
        con.name = name or f"c{len(self.rows)}"
        con.row = len(self.rows)
        self.rows.append(con)
        self.row_lo.append(lo)
        self.row_hi.append(hi)
        return con

    def minimize(self, expr) -> None:
        self.objective = LinExpr.of(expr).copy()
        self.maximize_sense = False

    def maximize(self, expr) -> None:
        self.objective = LinExpr.of(expr).copy()
        self.maximize_sense = True

    # helpers ---------------------------------------------------------------
    def indicator_product(self, b, y, lo: float, hi: float, name: str = "z") -> Var:
        """New column ``z = b * y`` for an indicator ``b`` and ``y`` in [lo, hi]."""
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ModelError("indicator_product needs finite bounds")
        b, y = LinExpr.of(b), LinExpr.of(y)
        z = self.add_var(name, min(lo, 0.0), max(hi, 0.0))
        self.add(z <= hi * b, f"{name}_ub")
        self.add(z >= lo * b, f"{name}_lb")
        self.add(z <= y - lo * (1 - b), f"{name}_yub")
        self.add(z >= y - hi * (1 - b), f"{name}_ylb")
        return z

    def abs_value(self, expr, bound: float, name: str = "abs") -> Var:
        """Column ``a >= |expr|``; exact at the optimum only when ``a`` is penalised."""
        expr = LinExpr.of(expr)
        a = self.add_var(name, 0.0, abs(bound) if math.isfinite(bound) else INF)
        self.add(a >= expr, f"{name}_pos")
        self.add(a >= -expr, f"{name}_neg")
        self._abs_vars.append(a.index)
        return a

    def _check_abs_weights(self, c: np.ndarray) -> None:
        for k in self._abs_vars:
            if c[k] <= 0:
                raise ModelError(
                    f"abs_value column {self.names[k]} needs a positive penalty, got {c[k]:g}")

    # solve ---------------------------------------------------------------
    def _arrays(self):
        n = self.num_vars
        c = np.zeros(n)
        for k, v in self.objective.terms.items():
            c[k] += v
        if self.maximize_sense:
            c = -c
        data, ri, ci = [], [], []
        for r, con in enumerate(self.rows):
            for k, v in con.expr.terms.items():
                if v:
                    ri.append(r)
                    ci.append(k)
                    data.append(v)
        A = sparse.csr_matrix((data, (ri, ci)), shape=(len(self.rows), n))
        return c, A, np.array(self.row_lo), np.array(self.row_hi)

    def solve(self, time_limit: float | None = None, mip_gap: float | None = None,
              dump_lp: str | None = None, polish: bool = False) -> Solution:
        """Solve with HiGHS. ``polish`` re-solves a MILP as an LP with the integers fixed,
        which removes solver tolerance noise from the continuous values."""
        if dump_lp:
            self.write_lp(dump_lp)
        c, A, lo, hi = self._arrays()
        self._check_abs_weights(c)
        if self.num_vars == 0:
            return Solution(Status.OPTIMAL, self.objective.const, np.zeros(0))
        if any(self.integer):
            sol = self._solve_milp(c, A, lo, hi, time_limit, mip_gap)
            if polish and sol.ok:
                sol = self._polish(sol, c, A, lo, hi, time_limit)
        else:
            sol = self._solve_lp(c, A, lo, hi, time_limit)
        if sol.values.size:
            raw = float(c @ sol.values)
            sol.objective = (-raw if self.maximize_sense else raw) + self.objective.const
        return sol

    def _solve_milp(self, c, A, lo, hi, time_limit, mip_gap) -> Solution:
        options = {"disp": False}
        if time_limit is not None:
            options["time_limit"] = float(time_limit)
        options["mip_rel_gap"] = 1e-9 if mip_gap is None else float(mip_gap)
        cons = [LinearConstraint(A, lo, hi)] if A.shape[0] else []
        res = milp(c, integrality=np.array(self.integer, dtype=int),
                   bounds=Bounds(np.array(self.lb), np.array(self.ub)),
                   constraints=cons, options=options)
        status = {0: Status.OPTIMAL, 1: Status.TIME_LIMIT, 2: Status.INFEASIBLE,
                  3: Status.UNBOUNDED}.get(res.status, Status.ERROR)
        x = np.asarray(res.x) if res.x is not None else np.zeros(0)
        if x.size:
            ints = np.array(self.integer)
            x[ints] = np.round(x[ints])
        return Solution(status, values=x, message=res.message)

    def _polish(self, sol: Solution, c, A, lo, hi, time_limit) -> Solution:
        saved = self.lb[:], self.ub[:]
        for k, is_int in enumerate(self.integer):
            if is_int:
                self.lb[k] = self.ub[k] = float(sol.values[k])
        try:
            fixed = self._solve_lp(c, A, lo, hi, time_limit)
        finally:
            self.lb, self.ub = saved
        if not fixed.ok:
            return sol
        fixed.duals = None
        fixed.status = sol.status
        return fixed

    def _solve_lp(self, c, A, lo, hi, time_limit) -> Solution:
        # Ranged rows become one or two <= rows so linprog can report duals.
        A = A.tocsr()
        ub_rows, b_ub, sign, origin = [], [], [], []
        for r in range(A.shape[0]):
            if math.isfinite(hi[r]):
                ub_rows.append(A[r])
                b_ub.append(hi[r])
                sign.append(1.0)
                origin.append(r)
            if math.isfinite(lo[r]):
                ub_rows.append(-A[r])
                b_ub.append(-lo[r])
                sign.append(-1.0)
                origin.append(r)
        options = {}
        if time_limit is not None:
            options["time_limit"] = float(time_limit)
        A_ub = sparse.vstack(ub_rows).tocsr() if ub_rows else None
        res = linprog(c, A_ub=A_ub, b_ub=np.array(b_ub) if ub_rows else None,
                      bounds=list(zip(self.lb, [None if not math.isfinite(u) else u for u in self.ub])),
                      method="highs", options=options)
        status = {0: Status.OPTIMAL, 1: Status.TIME_LIMIT, 2: Status.INFEASIBLE,
                  3: Status.UNBOUNDED}.get(res.status, Status.ERROR)
        x = np.asarray(res.x) if res.x is not None else np.zeros(0)
        duals = None
        if status is Status.OPTIMAL and ub_rows:
            duals = np.zeros(A.shape[0])
            flip = -1.0 if self.maximize_sense else 1.0
            for m, r, s in zip(res.ineqlin.marginals, origin, sign):
                duals[r] += flip * s * m
        elif status is Status.OPTIMAL:
            duals = np.zeros(0)
        return Solution(status, values=x, duals=duals, message=res.message)

    # export --------------------------------------------------------------
    def to_lp(self) -> str:
        """Render the model in CPLEX LP text format."""
        def fmt(expr: LinExpr) -> str:
            parts = [f"{v:+.12g} {self.names[k]}" for k, v in sorted(expr.terms.items()) if v]
            return " ".join(parts) if parts else "0 " + (self.names[0] if self.names else "")

        lines = ["\\ " + self.name, "Maximize" if self.maximize_sense else "Minimize",
                 " obj: " + fmt(self.objective), "Subject To"]
        for con, lo, hi in zip(self.rows, self.row_lo, self.row_hi):
            body = fmt(con.expr)
            if math.isfinite(lo) and math.isfinite(hi):
                lines.append(f" {con.name}_lo: {body} >= {lo:.12g}")
                lines.append(f" {con.name}_hi: {body} <= {hi:.12g}")
            elif math.isfinite(hi):
                lines.append(f" {con.name}: {body} <= {hi:.12g}")
            else:
                lines.append(f" {con.name}: {body} >= {lo:.12g}")
        lines.append("Bounds")
        for name, lo, hi in zip(self.names, self.lb, self.ub):
            lo_s = "-inf" if not math.isfinite(lo) else f"{lo:.12g}"
            hi_s = "+inf" if not math.isfinite(hi) else f"{hi:.12g}"
            lines.append(f" {lo_s} <= {name} <= {hi_s}")
        ints = [n for n, i in zip(self.names, self.integer) if i]
        if ints:
            lines.append("Binaries")
            lines.extend(" " + n for n in ints)
        lines.append("End")
        return "\n".join(lines) + "\n"

    def write_lp(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_lp())
