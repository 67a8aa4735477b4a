from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import FrozenSet, Hashable, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from loguru import logger
from sympy import Matrix, Rational

from app.core.biset import Biset
from app.core.exceptions import BadAlpha, CertificateViolation, Infeasible, LPError
from app.core.graph import Instance, delta, residual_bound
from app.functions.base import ConnectivityFunction
from app.functions.requirements import ResidualFunction
from app.solvers.separation import FractionalSolution, separate_all
from app.solvers.simplex import LinearRow, RowSense, row_from_dict, solve_lp
from config.config import settings


# 约束行类型
class RowKind(str, Enum):
    BISET = "biset"  # x(δ_E(Ŝ)) >= f_J(Ŝ)
    DEGREE = "degree"  # x(δ⁺_E(v)) 或 x(δ_E(v)) <= b_J^α(v)
    IN_DEGREE = "in_degree"  # x(δ⁻_E(v)) <= b⁻_J^α(v)
    BOX = "box"  # x(e) <= 1
    NONNEG = "nonneg"  # x(e) >= 0


@dataclass(frozen=True)
class PoolRow:
    kind: RowKind
    key: Hashable
    coeffs: Tuple[Tuple[int, int], ...]  # (边编号, 系数)
    sense: RowSense
    rhs: Fraction

    def activity(self, x: Mapping[int, Fraction]) -> Fraction:
        return sum((a * x[e] for e, a in self.coeffs), Fraction(0))

    def satisfied(self, x: Mapping[int, Fraction]) -> bool:
        value = self.activity(x)
        return value >= self.rhs if self.sense == RowSense.GE else value <= self.rhs

    def is_tight(self, x: Mapping[int, Fraction]) -> bool:
        return self.activity(x) == self.rhs


class ConstraintPool:
    """P(f_J, b_J^α, E) 的当前约束池

    双集合行只记录双集合本身，系数与右端随 E、J 的变化重新投影；
    右端不再为正的双集合在 refresh 时清除。
    """

    def __init__(
        self,
        instance: Instance,
        function: ConnectivityFunction,
        alpha: int,
        edges: Iterable[int],
        bounded: Iterable[int] = (),
        in_bounded: Iterable[int] = (),
    ):
        if alpha < 1:
            raise BadAlpha(f"alpha 必须 >= 1，当前 {alpha}")
        self.instance = instance
        self.alpha = alpha
        self.bisets: List[Biset] = []
        self._known: Set[Biset] = set()
        self.refresh(function, edges, bounded, in_bounded)

    @property
    def chosen(self) -> FrozenSet[int]:
        return self.function.chosen

    def refresh(
        self,
        function: ConnectivityFunction,
        edges: Iterable[int],
        bounded: Iterable[int] = (),
        in_bounded: Iterable[int] = (),
    ) -> int:
        """切换到新的 (f_J, E, B)，返回被清除的双集合行数"""
        if isinstance(function, ResidualFunction):
            self.function = function
        else:
            self.function = ResidualFunction(function, self.instance, ())
        self.edges: Tuple[int, ...] = tuple(sorted(edges))
        self.bounded: Tuple[int, ...] = tuple(sorted(bounded))
        self.in_bounded: Tuple[int, ...] = tuple(sorted(in_bounded))
        kept = [b for b in self.bisets if self.function.evaluate(b) > 0]
        purged = len(self.bisets) - len(kept)
        self.bisets = kept
        self._known = set(kept)
        if purged:
            logger.debug(f"约束池清除失效双集合行 {purged} 条")
        return purged

    def add(self, biset: Biset) -> bool:
        if biset in self._known:
            return False
        required = self.function.evaluate(biset)
        if required < 1:
            raise ValueError(f"双集合行右端必须 >= 1: {biset} -> {required}")
        self.bisets.append(biset)
        self._known.add(biset)
        return True

    def __len__(self) -> int:
        return len(self.bisets)

    def rows(self) -> List[PoolRow]:
        instance = self.instance
        chosen = self.chosen
        rows: List[PoolRow] = []
        for biset in self.bisets:
            covering = delta(instance, self.edges, biset)
            rows.append(
                PoolRow(RowKind.BISET, biset, tuple((e, 1) for e in covering), RowSense.GE,
                        Fraction(self.function.evaluate(biset)))
            )
        for v in self.bounded:
            incident = [e for e in self.edges if instance.degree((e,), v)]
            rows.append(
                PoolRow(RowKind.DEGREE, v, tuple((e, 1) for e in incident), RowSense.LE,
                        residual_bound(instance, chosen, self.alpha, v))
            )
        for v in self.in_bounded:
            incoming = [e for e in self.edges if instance.edges[e].head == v]
            rows.append(
                PoolRow(RowKind.IN_DEGREE, v, tuple((e, 1) for e in incoming), RowSense.LE,
                        residual_bound(instance, chosen, self.alpha, v, incoming=True))
            )
        for e in self.edges:
            rows.append(PoolRow(RowKind.BOX, e, ((e, 1),), RowSense.LE, Fraction(1)))
        return rows


@dataclass
class LPResult:
    """单纯形给出的顶点最优解及其紧约束证书"""

    x: FractionalSolution
    objective: Fraction
    rows: List[PoolRow]
    edges: Tuple[int, ...]
    pivots: int = 0
    rounds: int = 0
    cuts_added: int = 0

    @cached_property
    def tight(self) -> List[PoolRow]:
        tight = [row for row in self.rows if row.is_tight(self.x)]
        for e in self.edges:
            if self.x[e] == 0:
                tight.append(PoolRow(RowKind.NONNEG, e, ((e, 1),), RowSense.GE, Fraction(0)))
        return tight

    @cached_property
    def vertex_certificate(self) -> List[PoolRow]:
        """|E| 条线性无关的紧约束行"""
        if not self.edges:
            return []
        independent = independent_rows(self.tight, self.edges)
        if len(independent) != len(self.edges):
            raise CertificateViolation(
                f"紧约束秩 {len(independent)} 小于变量数 {len(self.edges)}，x 不是顶点"
            )
        return independent


def row_vector(row: PoolRow, edges: Sequence[int]) -> List[int]:
    coeff = dict(row.coeffs)
    return [coeff.get(e, 0) for e in edges]


def independent_rows(rows: Sequence[PoolRow], edges: Sequence[int]) -> List[PoolRow]:
    """按给定顺序贪心选出线性无关的行，精确行化简"""
    if not rows or not edges:
        return []
    matrix = Matrix([[Rational(v) for v in row_vector(row, edges)] for row in rows]).T
    _, pivots = matrix.rref()
    return [rows[i] for i in pivots]


def rank_of(rows: Sequence[PoolRow], edges: Sequence[int]) -> int:
    if not rows or not edges:
        return 0
    return Matrix([row_vector(row, edges) for row in rows]).rank()


def _check_trivial(row: PoolRow) -> None:
    zero_ok = Fraction(0) >= row.rhs if row.sense == RowSense.GE else Fraction(0) <= row.rhs
    if not zero_ok:
        raise Infeasible(f"约束 {row.kind.value}:{row.key} 在当前边集上不可满足 (右端 {row.rhs})")


def solve_vertex(cost: Mapping[int, Fraction], pool: ConstraintPool) -> LPResult:
    """在约束池描述的多面体上求顶点最优解"""
    edges = pool.edges
    rows = pool.rows()
    column = {e: j for j, e in enumerate(edges)}
    linear: List[LinearRow] = []
    for row in rows:
        if not row.coeffs:
            _check_trivial(row)
            continue
        linear.append(
            row_from_dict({column[e]: Fraction(a) for e, a in row.coeffs}, row.sense, row.rhs, (row.kind, row.key))
        )
    result = solve_lp([Fraction(cost[e]) for e in edges], linear)
    x = {e: result.x[column[e]] for e in edges}
    return LPResult(x=x, objective=result.objective, rows=rows, edges=edges, pivots=result.pivots)


def cutting_plane(
    instance: Instance,
    function: ConnectivityFunction,
    chosen: Iterable[int] = (),
    alpha: int = 1,
    edges: Optional[Iterable[int]] = None,
    bounded: Optional[Iterable[int]] = None,
    in_bounded: Optional[Iterable[int]] = None,
    pool: Optional[ConstraintPool] = None,
) -> LPResult:
    """min{c·x : x ∈ P(f_J, b_J^α, E)} 的顶点最优解

    反复求解松弛顶点并加入全部点对上的违反约束。松弛多面体的顶点若落在 P 内，
    它也是 P 的顶点。
    """
    residual = function if isinstance(function, ResidualFunction) and not chosen else ResidualFunction(
        function.base, instance, set(function.chosen) | set(chosen)
    )
    edges = tuple(sorted(instance.edge_ids - residual.chosen if edges is None else edges))
    bounded = tuple(sorted(instance.bounds) if bounded is None else bounded)
    in_bounded = tuple(sorted(instance.in_bounds) if in_bounded is None else in_bounded)
    if pool is None:
        pool = ConstraintPool(instance, residual, alpha, edges, bounded, in_bounded)
    else:
        pool.refresh(residual, edges, bounded, in_bounded)

    cost = {e: instance.edges[e].cost for e in edges}
    cap = settings.CUTTING_PLANE_ROUND_FACTOR * 3 ** instance.node_count
    added = 0
    pivots = 0
    for rounds in range(1, cap + 1):
        result = solve_vertex(cost, pool)
        pivots += result.pivots
        violations = separate_all(instance, result.x, residual)
        if not violations:
            result.rounds = rounds
            result.cuts_added = added
            result.pivots = pivots
            logger.debug(
                f"割平面收敛: 轮数={rounds}, 新增割={added}, 池大小={len(pool)}, 目标值={result.objective}"
            )
            return result
        for violation in violations:
            if pool.add(violation.biset):
                added += 1
        logger.debug(
            f"割平面第 {rounds} 轮: 违反约束 {len(violations)} 条, 最严重 slack={violations[0].slack}"
        )
    raise LPError(f"割平面超过 {cap} 轮未收敛")


@dataclass
class Classification:
    zeros: FrozenSet[int] = field(default_factory=frozenset)
    high: FrozenSet[int] = field(default_factory=frozenset)
    fractional: FrozenSet[int] = field(default_factory=frozenset)


def classify(result: LPResult, alpha: int) -> Classification:
    """按 x(e)=0、x(e) >= 1/α 与其余划分边集"""
    threshold = Fraction(1, alpha)
    zeros, high, rest = set(), set(), set()
    for e, value in result.x.items():
        if value == 0:
            zeros.add(e)
        elif value >= threshold:
            high.add(e)
        else:
            rest.add(e)
    return Classification(frozenset(zeros), frozenset(high), frozenset(rest))
