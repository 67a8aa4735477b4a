from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

from loguru import logger

from app.core.biset import (
    Biset,
    BisetFamily,
    CountAudit,
    LaminarForest,
    build_forest,
    contains,
    count_audit,
    enumerate_bisets,
    first_crossing_pair,
    intersect,
    is_laminar,
    is_strongly_laminar,
    strongly_disjoint,
    subtract,
    uncrossing_potential,
    union,
)
from app.core.graph import Instance, delta
from app.functions.base import ConnectivityFunction, FunctionKind, Supermodularity
from app.solvers.lp_engine import LPResult, PoolRow, RowKind, independent_rows, rank_of
from app.solvers.simplex import RowSense
from config.config import settings


class LaminarMode(str, Enum):
    LAMINAR = "laminar"
    STRONG = "strongly-laminar"


def mode_for(function: ConnectivityFunction) -> LaminarMode:
    """有向相交超模用层状族，无向斜超模用强层状族"""
    if function.supermodularity == Supermodularity.INTERSECTING and function.directed:
        return LaminarMode.LAMINAR
    return LaminarMode.STRONG


@dataclass
class TightFamily:
    family: BisetFamily
    nodes: Tuple[int, ...]
    rows: List[PoolRow]
    edges: Tuple[int, ...]
    mode: LaminarMode
    forest: LaminarForest

    @property
    def leaves(self) -> List[Biset]:
        return self.forest.leaves


@dataclass
class ExtractionFailure:
    reason: str
    pair: Optional[Tuple[Biset, Biset]] = None
    rank: int = 0


@dataclass
class ChainDecomposition:
    """E⁺_S：覆盖 Ŝ 但不覆盖任何子成员的边；E⁻_S：覆盖某个子成员但不覆盖 Ŝ 的边"""

    plus: Dict[Biset, FrozenSet[int]] = field(default_factory=dict)
    minus: Dict[Biset, FrozenSet[int]] = field(default_factory=dict)


def _tight_value(instance: Instance, result: LPResult, function: ConnectivityFunction, biset: Biset) -> Optional[int]:
    required = function.evaluate(biset)
    if required < 1:
        return None
    covered = delta(instance, result.edges, biset)
    if sum((result.x[e] for e in covered), Fraction(0)) != required:
        return None
    return required


def _crosses(x: Biset, y: Biset, mode: LaminarMode) -> bool:
    if contains(x, y) or contains(y, x):
        return False
    if mode == LaminarMode.LAMINAR:
        return bool(x.inner & y.inner)
    return not strongly_disjoint(x, y)


def _uncross(x: Biset, y: Biset, mode: LaminarMode) -> List[Biset]:
    candidates = [intersect(x, y), union(x, y)]
    if mode == LaminarMode.STRONG:
        candidates += [subtract(x, y), subtract(y, x)]
    return candidates


def tight_bisets(instance: Instance, result: LPResult, function: ConnectivityFunction, mode: LaminarMode) -> List[Biset]:
    """小规模时穷举全部紧双集合，否则从证书中的双集合行出发做去交叉闭包"""
    if instance.node_count <= settings.EXHAUSTIVE_MAX_NODES:
        return [
            b for b in enumerate_bisets(instance.node_count)
            if _tight_value(instance, result, function, b) is not None
        ]

    seeds = [row.key for row in result.tight if row.kind == RowKind.BISET]
    found = {b for b in seeds if _tight_value(instance, result, function, b) is not None}
    frontier = list(found)
    while frontier:
        current = frontier.pop()
        for other in list(found):
            if not _crosses(current, other, mode):
                continue
            for candidate in _uncross(current, other, mode):
                if candidate not in found and _tight_value(instance, result, function, candidate) is not None:
                    found.add(candidate)
                    frontier.append(candidate)
    return sorted(found, key=lambda b: (uncrossing_potential(b), b.inner, b.outer))


def _biset_row(instance: Instance, result: LPResult, function: ConnectivityFunction, biset: Biset) -> PoolRow:
    covered = delta(instance, result.edges, biset)
    return PoolRow(RowKind.BISET, biset, tuple((e, 1) for e in covered), RowSense.GE, Fraction(function.evaluate(biset)))


def extract_tight_family(
    result: LPResult,
    function: ConnectivityFunction,
    instance: Instance,
    mode: Optional[LaminarMode] = None,
) -> Union[TightFamily, ExtractionFailure]:
    """从顶点解中取出 (强)层状的紧双集合族 L 与紧度约束点集 C，使其行线性无关且 |L|+|C|=|E|"""
    mode = LaminarMode(mode) if mode is not None else mode_for(function)
    edges = result.edges
    if any(not 0 < result.x[e] < 1 for e in edges):
        return ExtractionFailure("存在取值为 0 或 1 的边，不满足 0 < x < 1")

    candidates = sorted(
        tight_bisets(instance, result, function, mode),
        key=lambda b: (uncrossing_potential(b), b.inner, b.outer),
    )
    laminar: List[Biset] = []
    for biset in candidates:
        if all(not _crosses(biset, member, mode) for member in laminar):
            laminar.append(biset)

    biset_rows = [_biset_row(instance, result, function, b) for b in laminar]
    degree_rows = [row for row in result.tight if row.kind == RowKind.DEGREE]
    chosen_rows = independent_rows(biset_rows + degree_rows, edges)
    if len(chosen_rows) < len(edges):
        crossing = None
        for biset in candidates:
            if biset in laminar:
                continue
            crossing = next(((biset, m) for m in laminar if _crosses(biset, m, mode)), None)
            if crossing:
                break
        logger.warning(f"紧族秩不足: 秩={len(chosen_rows)}, |E|={len(edges)}, 冲突对={crossing}")
        return ExtractionFailure("紧约束秩小于 |E|", pair=crossing, rank=len(chosen_rows))

    family = BisetFamily(row.key for row in chosen_rows if row.kind == RowKind.BISET)
    nodes = tuple(sorted(row.key for row in chosen_rows if row.kind == RowKind.DEGREE))
    check = is_laminar(family) if mode == LaminarMode.LAMINAR else is_strongly_laminar(family)
    if not check:
        pair = first_crossing_pair(family, strong=mode == LaminarMode.STRONG)
        return ExtractionFailure("选出的族不满足层状条件", pair=pair, rank=len(chosen_rows))
    return TightFamily(
        family=family,
        nodes=nodes,
        rows=chosen_rows,
        edges=edges,
        mode=mode,
        forest=build_forest(family),
    )


def chain_decomposition(instance: Instance, tight: TightFamily) -> ChainDecomposition:
    decomposition = ChainDecomposition()
    for member in tight.family:
        own = set(delta(instance, tight.edges, member))
        by_children = set()
        for child in tight.forest.children[member]:
            by_children.update(delta(instance, tight.edges, child))
        decomposition.plus[member] = frozenset(own - by_children)
        decomposition.minus[member] = frozenset(by_children - own)
    return decomposition


@dataclass
class TokenAudit:
    quantities: Dict[Biset, Fraction] = field(default_factory=dict)
    rank_ok: bool = True
    laminar_ok: bool = True
    integral_ok: bool = True
    positive_ok: Optional[bool] = None  # 仅当全部 x < 1/α 时断言
    nonleaf_ok: bool = True
    leaf_ok: bool = True
    count: Optional[CountAudit] = None
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            self.rank_ok
            and self.laminar_ok
            and self.integral_ok
            and self.positive_ok is not False
            and self.nonleaf_ok
            and self.leaf_ok
            and (self.count is None or self.count.passed)
        )

    def flags(self) -> Dict[str, bool]:
        flags = {
            "rank": self.rank_ok,
            "laminar": self.laminar_ok,
            "tokens": self.integral_ok and self.positive_ok is not False,
            "children": self.nonleaf_ok,
            "leaves": self.leaf_ok,
        }
        if self.count is not None:
            flags["count"] = self.count.passed
        return flags


def token_audit(
    tight: TightFamily,
    result: LPResult,
    function: ConnectivityFunction,
    alpha: int,
    instance: Instance,
) -> TokenAudit:
    """核对层状族上的整数性、叶子紧性与计数上界"""
    audit = TokenAudit()
    audit.rank_ok = rank_of(tight.rows, tight.edges) == len(tight.rows) == len(tight.edges)
    audit.laminar_ok = (
        is_laminar(tight.family) if tight.mode == LaminarMode.LAMINAR else is_strongly_laminar(tight.family)
    )
    if not audit.rank_ok:
        audit.failures.append("行秩不等于 |E|")

    x = result.x
    decomposition = chain_decomposition(instance, tight)
    all_small = all(x[e] < Fraction(1, alpha) for e in tight.edges)
    if tight.mode == LaminarMode.LAMINAR and all_small:
        audit.positive_ok = True
    for member in tight.family:
        plus = decomposition.plus[member]
        minus = decomposition.minus[member]
        quantity = alpha * sum((x[e] for e in plus), Fraction(0)) + len(minus) - alpha * sum(
            (x[e] for e in minus), Fraction(0)
        )
        audit.quantities[member] = quantity
        if tight.forest.children[member] and not plus and not minus:
            audit.nonleaf_ok = False
            audit.failures.append(f"非叶子成员 {member} 的 E⁺ 与 E⁻ 均为空，行线性相关")
        if tight.mode == LaminarMode.LAMINAR:
            if quantity.denominator != 1:
                audit.integral_ok = False
                audit.failures.append(f"{member} 的令牌数 {quantity} 不是整数")
            if all_small and quantity < 1:
                audit.positive_ok = False
                audit.failures.append(f"{member} 的令牌数 {quantity} 不是正数")

    for leaf in tight.leaves:
        covered = sum((x[e] for e in delta(instance, tight.edges, leaf)), Fraction(0))
        required = function.evaluate(leaf)
        if covered != required or required < 1:
            audit.leaf_ok = False
            audit.failures.append(f"叶子 {leaf} 不紧: x(δ)={covered}, f={required}")

    gamma = max((m.boundary_size() for m in tight.family), default=0)
    audit.count = count_audit(tight.forest, tight.nodes, gamma)
    if audit.failures:
        logger.warning(f"令牌审计未通过: {audit.failures}")
    return audit


def laminar_auditor(instance: Instance, function: ConnectivityFunction, result: LPResult, params) -> Dict[str, bool]:
    """迭代舍入的审计钩子，只在全分数顶点上运行"""
    if instance.in_bounds or function.base.kind not in (FunctionKind.OUT_CONNECTIVITY, FunctionKind.ELEMENT):
        return {}
    if not result.edges or any(not 0 < result.x[e] < 1 for e in result.edges):
        return {}
    tight = extract_tight_family(result, function, instance)
    if isinstance(tight, ExtractionFailure):
        return {"extract": False}
    audit = token_audit(tight, result, function, params.alpha, instance)
    return {"extract": True, **audit.flags()}
