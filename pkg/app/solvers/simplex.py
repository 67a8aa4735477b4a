from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

from loguru import logger

from app.core.exceptions import Infeasible, LPError

ZERO = Fraction(0)
ONE = Fraction(1)


class RowSense(str, Enum):
    GE = ">="
    LE = "<="


@dataclass(frozen=True)
class LinearRow:
    """Σ coeffs[j]·x_j (sense) rhs，变量下标从 0 开始"""

    coeffs: Tuple[Tuple[int, Fraction], ...]
    sense: RowSense
    rhs: Fraction
    tag: Hashable = None

    def activity(self, x: Sequence[Fraction]) -> Fraction:
        return sum((a * x[j] for j, a in self.coeffs), ZERO)

    def satisfied(self, x: Sequence[Fraction]) -> bool:
        value = self.activity(x)
        return value >= self.rhs if self.sense == RowSense.GE else value <= self.rhs


@dataclass
class SimplexResult:
    x: List[Fraction]
    objective: Fraction
    pivots: int
    basis: List[int]


class ExactSimplex:
    """有理数两阶段单纯形，Bland 规则防循环

    约束统一化为 A·x + s·slack = rhs (rhs >= 0)，第一阶段用人工变量找可行基，
    驱逐留在基中的人工变量并删去冗余行后进入第二阶段。x >= 0 隐含。
    """

    def __init__(self, cost: Sequence[Fraction], rows: Sequence[LinearRow]):
        self.n = len(cost)
        self.m = len(rows)
        self.cost = [Fraction(c) for c in cost]
        self.rows = list(rows)
        self.pivots = 0
        self._build()

    def _build(self) -> None:
        n, m = self.n, self.m
        self.slack_start = n
        self.art_start = n + m
        art_rows = []
        tableau: List[List[Fraction]] = []
        basis: List[int] = []
        for i, row in enumerate(self.rows):
            line = [ZERO] * (n + m)
            for j, a in row.coeffs:
                line[j] += Fraction(a)
            line[n + i] = ONE if row.sense == RowSense.LE else -ONE
            rhs = Fraction(row.rhs)
            if rhs < 0:
                line = [-a for a in line]
                rhs = -rhs
            if line[n + i] == ONE:
                basis.append(n + i)
            else:
                basis.append(-1)
                art_rows.append(i)
            tableau.append(line + [rhs])

        self.art_count = len(art_rows)
        width = n + m + self.art_count
        for line in tableau:
            rhs = line.pop()
            line.extend([ZERO] * self.art_count)
            line.append(rhs)
        for k, i in enumerate(art_rows):
            tableau[i][self.art_start + k] = ONE
            basis[i] = self.art_start + k
        self.width = width
        self.tableau = tableau
        self.basis = basis
        self.blocked = set()

    def _reduced_costs(self, cost: Sequence[Fraction]) -> List[Fraction]:
        reduced = list(cost) + [ZERO]
        for i, line in enumerate(self.tableau):
            cb = cost[self.basis[i]]
            if cb:
                for j in range(self.width + 1):
                    if line[j]:
                        reduced[j] -= cb * line[j]
        return reduced

    def _pivot(self, reduced: List[Fraction], r: int, c: int) -> None:
        pivot_line = self.tableau[r]
        piv = pivot_line[c]
        if piv != ONE:
            pivot_line[:] = [a / piv for a in pivot_line]
        support = [j for j, a in enumerate(pivot_line) if a]
        for i, line in enumerate(self.tableau):
            if i == r:
                continue
            factor = line[c]
            if factor:
                for j in support:
                    line[j] -= factor * pivot_line[j]
        factor = reduced[c]
        if factor:
            for j in support:
                reduced[j] -= factor * pivot_line[j]
        self.basis[r] = c
        self.pivots += 1

    def _iterate(self, reduced: List[Fraction]) -> None:
        while True:
            entering = next(
                (j for j in range(self.width) if j not in self.blocked and reduced[j] < 0),
                None,
            )
            if entering is None:
                return
            best: Optional[Tuple[Fraction, int, int]] = None
            for i, line in enumerate(self.tableau):
                a = line[entering]
                if a > 0:
                    candidate = (line[-1] / a, self.basis[i], i)
                    if best is None or candidate < best:
                        best = candidate
            if best is None:
                raise LPError("线性规划无界，盒约束缺失")
            self._pivot(reduced, best[2], entering)

    def _phase_one(self) -> None:
        if not self.art_count:
            return
        cost = [ZERO] * (self.n + self.m) + [ONE] * self.art_count
        reduced = self._reduced_costs(cost)
        self._iterate(reduced)
        if -reduced[-1] > 0:
            raise Infeasible(f"线性规划不可行，第一阶段最优值 {-reduced[-1]}")

        # 驱逐基中值为 0 的人工变量，无法驱逐的行是冗余行
        redundant = []
        for i in range(len(self.tableau)):
            if self.basis[i] < self.art_start:
                continue
            line = self.tableau[i]
            column = next((j for j in range(self.art_start) if line[j]), None)
            if column is None:
                redundant.append(i)
            else:
                self._pivot(reduced, i, column)
        for i in reversed(redundant):
            del self.tableau[i]
            del self.basis[i]
        if redundant:
            logger.debug(f"删去冗余约束行 {len(redundant)} 条")
        self.blocked = set(range(self.art_start, self.width))

    def solve(self) -> SimplexResult:
        self._phase_one()
        cost = self.cost + [ZERO] * (self.m + self.art_count)
        reduced = self._reduced_costs(cost)
        self._iterate(reduced)

        values = [ZERO] * self.width
        for i, j in enumerate(self.basis):
            values[j] = self.tableau[i][-1]
        x = values[: self.n]
        for row in self.rows:
            if not row.satisfied(x):
                raise LPError(f"单纯形解违反约束 {row.tag}")
        objective = sum((c * v for c, v in zip(self.cost, x)), ZERO)
        return SimplexResult(x=x, objective=objective, pivots=self.pivots, basis=list(self.basis))


def solve_lp(cost: Sequence[Fraction], rows: Sequence[LinearRow]) -> SimplexResult:
    """min cost·x, rows, x >= 0；返回基本最优解"""
    return ExactSimplex(cost, rows).solve()


def row_from_dict(coeffs: Dict[int, Fraction], sense: RowSense, rhs, tag: Hashable = None) -> LinearRow:
    items = tuple(sorted((j, Fraction(a)) for j, a in coeffs.items() if a))
    return LinearRow(coeffs=items, sense=sense, rhs=Fraction(rhs), tag=tag)
