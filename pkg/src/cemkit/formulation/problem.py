"""Sparse LP container with semantic tags on every variable and row."""

from __future__ import annotations

import math
import re
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

INF = math.inf
SENSES = ("<=", "=", ">=")


@dataclass
class CostTerm:
    """Annual cost coefficients for a set of variables, before period weighting."""

    component: str
    period: str
    index: np.ndarray
    coef: np.ndarray
    weight: float


def tag_string(tag: tuple) -> str:
    kind, *keys = tag
    return f"{kind}[{','.join(str(k) for k in keys)}]" if keys else kind


class PeriodProblem:
    """min c'x + offset  s.t.  rows (sense, rhs),  lb <= x <= ub.

    Variables and rows are added in vectorized blocks. Every entry carries a
    tag tuple ``(kind, key...)`` so rows can be audited and solutions read back
    by meaning. The objective is assembled from ``CostTerm`` records, which
    also drive the per-component cost breakdown.
    """

    def __init__(self, name: str = "problem"):
        self.name = name
        self.var_tags: list[tuple] = []
        self.row_tags: list[tuple] = []
        self._lb: list[np.ndarray] = []
        self._ub: list[np.ndarray] = []
        self._coo: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
        self._sense: list[np.ndarray] = []
        self._rhs: list[np.ndarray] = []
        self.cost_terms: list[CostTerm] = []
        self.offsets: list[tuple[str, str, float, float]] = []  # (component, period, annual value, weight)
        self.groups: dict[tuple, np.ndarray] = {}
        self.row_groups: dict[tuple, np.ndarray] = {}
        self.meta: dict = {}
        self.n_vars = 0
        self.n_rows = 0
        self._cache = None
        self._bound_fix: dict[int, tuple[float, float]] = {}

    # -- building ----------------------------------------------------------
    def add_vars(self, kind: str, keys, lb=0.0, ub=INF, group=None) -> np.ndarray:
        keys = list(keys)
        n = len(keys)
        idx = np.arange(self.n_vars, self.n_vars + n)
        self._lb.append(np.broadcast_to(np.asarray(lb, dtype=float), (n,)).copy())
        self._ub.append(np.broadcast_to(np.asarray(ub, dtype=float), (n,)).copy())
        self.var_tags.extend((kind, *k) for k in keys)
        self.n_vars += n
        if group is not None:
            self.groups[group] = idx
        self._cache = None
        return idx

    def add_var(self, kind: str, key: tuple, lb=0.0, ub=INF) -> int:
        return int(self.add_vars(kind, [key], lb, ub)[0])

    def add_rows(self, kind: str, keys, rows, cols, vals, sense, rhs, group=None) -> np.ndarray:
        """Add ``len(keys)`` rows; ``rows`` indexes into this block (0..n-1)."""
        keys = list(keys)
        n = len(keys)
        idx = np.arange(self.n_rows, self.n_rows + n)
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.broadcast_to(np.asarray(vals, dtype=float), rows.shape).copy()
        if rows.size and (cols.min() < 0 or cols.max() >= self.n_vars):
            raise ValueError(f"{kind}: row references an undeclared variable")
        if rows.size and (rows.min() < 0 or rows.max() >= n):
            raise ValueError(f"{kind}: local row index out of range")
        if isinstance(sense, str):
            if sense not in SENSES:
                raise ValueError(f"bad sense {sense!r}")
            sense = np.full(n, sense, dtype=object)
        self._coo.append((rows + self.n_rows, cols, vals))
        self._sense.append(np.asarray(sense, dtype=object))
        self._rhs.append(np.broadcast_to(np.asarray(rhs, dtype=float), (n,)).copy())
        self.row_tags.extend((kind, *k) for k in keys)
        self.n_rows += n
        if group is not None:
            self.row_groups[group] = idx
        self._cache = None
        return idx

    def add_row(self, kind: str, key: tuple, coefs: dict, sense: str, rhs: float) -> int:
        cols = np.fromiter(coefs.keys(), dtype=np.int64, count=len(coefs))
        vals = np.fromiter(coefs.values(), dtype=float, count=len(coefs))
        return int(self.add_rows(kind, [key], np.zeros(len(cols), dtype=np.int64), cols, vals, sense, rhs)[0])

    def add_cost(self, component: str, period: str, index, coef, weight: float = 1.0):
        index = np.atleast_1d(np.asarray(index, dtype=np.int64))
        coef = np.broadcast_to(np.asarray(coef, dtype=float), index.shape).copy()
        self.cost_terms.append(CostTerm(component, period, index, coef, float(weight)))
        self._cache = None

    def add_offset(self, component: str, period: str, annual_value: float, weight: float = 1.0):
        self.offsets.append((component, period, float(annual_value), float(weight)))

    def set_bounds(self, index, lb, ub):
        index = np.atleast_1d(index)
        lb = np.broadcast_to(np.asarray(lb, dtype=float), index.shape)
        ub = np.broadcast_to(np.asarray(ub, dtype=float), index.shape)
        for i, lo, hi in zip(index, lb, ub):
            self._bound_fix[int(i)] = (float(lo), float(hi))
        self._cache = None

    # -- assembled arrays --------------------------------------------------
    def _assemble(self):
        if self._cache is not None:
            return self._cache
        lb = np.concatenate(self._lb) if self._lb else np.zeros(0)
        ub = np.concatenate(self._ub) if self._ub else np.zeros(0)
        for i, (lo, hi) in self._bound_fix.items():
            lb[i], ub[i] = lo, hi
        c = np.zeros(self.n_vars)
        for t in self.cost_terms:
            np.add.at(c, t.index, t.coef * t.weight)
        if self._coo:
            r = np.concatenate([x[0] for x in self._coo])
            k = np.concatenate([x[1] for x in self._coo])
            v = np.concatenate([x[2] for x in self._coo])
        else:
            r = k = np.zeros(0, dtype=np.int64)
            v = np.zeros(0)
        A = sp.csr_matrix((v, (r, k)), shape=(self.n_rows, self.n_vars))
        A.sum_duplicates()
        A.eliminate_zeros()  # night-time solar and other zero factors carry no structure
        sense = np.concatenate(self._sense) if self._sense else np.zeros(0, dtype=object)
        rhs = np.concatenate(self._rhs) if self._rhs else np.zeros(0)
        self._cache = (c, A, sense, rhs, lb, ub)
        return self._cache

    @property
    def c(self) -> np.ndarray:
        return self._assemble()[0]

    @property
    def A(self) -> sp.csr_matrix:
        return self._assemble()[1]

    @property
    def sense(self) -> np.ndarray:
        return self._assemble()[2]

    @property
    def rhs(self) -> np.ndarray:
        return self._assemble()[3]

    @property
    def lb(self) -> np.ndarray:
        return self._assemble()[4]

    @property
    def ub(self) -> np.ndarray:
        return self._assemble()[5]

    @property
    def offset(self) -> float:
        return sum(v * w for _, _, v, w in self.offsets)

    @property
    def nnz(self) -> int:
        return int(self.A.nnz)

    def row_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Rows as ranges ``lo <= Ax <= hi``."""
        sense, rhs = self.sense, self.rhs
        lo = np.where(sense == "<=", -INF, rhs).astype(float)
        hi = np.where(sense == ">=", INF, rhs).astype(float)
        return lo, hi

    # -- reading results ---------------------------------------------------
    def objective_value(self, x: np.ndarray) -> float:
        return float(self.c @ x) + self.offset

    def cost_breakdown(self, x: np.ndarray, weighted: bool = False) -> dict[str, dict[str, float]]:
        """period -> component -> annual $ (or weighted $ when ``weighted``)."""
        out: dict[str, dict[str, float]] = defaultdict(lambda: defaultdict(float))
        for t in self.cost_terms:
            val = float(t.coef @ x[t.index])
            out[t.period][t.component] += val * (t.weight if weighted else 1.0)
        for comp, period, v, w in self.offsets:
            out[period][comp] += v * (w if weighted else 1.0)
        return {p: dict(d) for p, d in out.items()}

    def var_names(self) -> list[str]:
        return [tag_string(t) for t in self.var_tags]

    def row_names(self) -> list[str]:
        return [tag_string(t) for t in self.row_tags]

    def find_rows(self, kind: str) -> np.ndarray:
        return np.array([i for i, t in enumerate(self.row_tags) if t[0] == kind], dtype=np.int64)

    def find_vars(self, kind: str) -> np.ndarray:
        return np.array([i for i, t in enumerate(self.var_tags) if t[0] == kind], dtype=np.int64)

    def subproblem_rows(self, keep: np.ndarray) -> "PeriodProblem":
        """Copy restricted to a subset of rows (variables unchanged)."""
        keep = np.asarray(keep, dtype=np.int64)
        c, A, sense, rhs, lb, ub = self._assemble()
        sub = PeriodProblem(self.name + "/sub")
        sub.var_tags = list(self.var_tags)
        sub._lb, sub._ub = [lb.copy()], [ub.copy()]
        sub.n_vars = self.n_vars
        sub.cost_terms = [CostTerm("all", "all", np.arange(self.n_vars), c.copy(), 1.0)]
        Ak = A[keep].tocoo()
        sub._coo = [(Ak.row.astype(np.int64), Ak.col.astype(np.int64), Ak.data.copy())]
        sub._sense = [sense[keep]]
        sub._rhs = [rhs[keep]]
        sub.row_tags = [self.row_tags[i] for i in keep]
        sub.n_rows = len(keep)
        return sub

    # -- export ------------------------------------------------------------
    def to_lp(self) -> str:
        """CPLEX LP text; names are sanitized tag strings made unique with a suffix."""
        c, A, sense, rhs, lb, ub = self._assemble()
        vnames = _lp_names(self.var_names(), "x")
        rnames = _lp_names(self.row_names(), "r")
        out = ["\\ " + self.name, "Minimize", " obj: " + _lp_expr(np.flatnonzero(c), c, vnames, allow_empty=True)]
        if self.offset:
            out[-1] += f" + {_num(self.offset)} __const"
        out.append("Subject To")
        A = A.tocsr()
        op = {"<=": "<=", ">=": ">=", "=": "="}
        for i in range(self.n_rows):
            lo, hi = A.indptr[i], A.indptr[i + 1]
            cols = A.indices[lo:hi]
            coef_vals = A.data[lo:hi]
            expr = " + ".join(f"{_num(v)} {vnames[j]}" for j, v in zip(cols, coef_vals)) or f"0 {vnames[0]}"
            out.append(f" {rnames[i]}: {expr} {op[sense[i]]} {_num(rhs[i])}")
        out.append("Bounds")
        for j in range(self.n_vars):
            lo, hi = lb[j], ub[j]
            if lo == hi:
                out.append(f" {vnames[j]} = {_num(lo)}")
            elif math.isinf(lo) and math.isinf(hi):
                out.append(f" {vnames[j]} free")
            else:
                left = "-inf" if math.isinf(lo) else _num(lo)
                right = "+inf" if math.isinf(hi) else _num(hi)
                out.append(f" {left} <= {vnames[j]} <= {right}")
        if self.offset:
            out.append(" __const = 1")
        out.append("End")
        return "\n".join(out).replace(" + -", " - ") + "\n"

    def write_lp(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_lp())


def _num(v: float) -> str:
    return repr(float(v))


def _lp_expr(cols, c, names, allow_empty=False):
    terms = [f"{_num(c[j])} {names[j]}" for j in cols]
    if not terms:
        return "0 " + names[0] if names else "0"
    return " + ".join(terms)


_BAD = re.compile(r"[^A-Za-z0-9_.\[\],]")


def _lp_names(raw: list[str], prefix: str) -> list[str]:
    seen = {}
    out = []
    for name in raw:
        n = _BAD.sub("_", name).replace("[", "(").replace("]", ")")
        n = n.replace("(", "_").replace(")", "").replace(",", "_")
        if not n or not (n[0].isalpha() or n[0] == "_"):
            n = prefix + "_" + n
        n = n[:240]
        if n in seen:
            seen[n] += 1
            n = f"{n}__{seen[n]}"
        else:
            seen[n] = 0
        out.append(n)
    return out
