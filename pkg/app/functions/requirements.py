from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

from loguru import logger

from app.core.biset import Biset, enumerate_bisets, intersect, mask_of, subtract, union
from app.core.exceptions import TooLarge
from app.core.graph import (
    ElementRequirement,
    Instance,
    KConnRequirement,
    OutConnRequirement,
    delta,
)
from app.functions.base import (
    ConnectivityFunction,
    FunctionKind,
    SeparationPair,
    Supermodularity,
)
from config.config import settings


def eval_g(biset: Biset, root: int, k: int) -> int:
    """k − |Γ(Ŝ)|，当 S ≠ ∅ 且 s ∉ S⁺"""
    if biset.inner and not (biset.outer >> root) & 1:
        return k - biset.boundary_size()
    return 0


def eval_h(biset: Biset, terminals: int, requirement: Dict[Tuple[int, int], int]) -> int:
    """max_{u∈S∩T, v∈T∖S⁺} r(u,v) − |Γ(Ŝ)|，当 S∩T ≠ ∅ ≠ T∖S⁺ 且 T∩Γ = ∅"""
    inside = biset.inner & terminals
    outside = terminals & ~biset.outer
    if not inside or not outside or biset.boundary & terminals:
        return 0
    best = 0
    for (u, v), r in requirement.items():
        u_bit, v_bit = 1 << u, 1 << v
        if (inside & u_bit and outside & v_bit) or (inside & v_bit and outside & u_bit):
            best = max(best, r)
    return best - biset.boundary_size()


def eval_fk(biset: Biset, k: int, node_count: int) -> int:
    """k − |Γ(Ŝ)|，当 S ≠ ∅ 且 S⁺ ≠ V"""
    if biset.inner and biset.outer != (1 << node_count) - 1:
        return k - biset.boundary_size()
    return 0


class OutConnectivityFunction(ConnectivityFunction):
    """g：从根 s 出发的 k-出连通需求"""

    kind = FunctionKind.OUT_CONNECTIVITY
    supermodularity = Supermodularity.INTERSECTING

    def __init__(self, node_count: int, root: int, k: int, directed: bool = True):
        super().__init__(node_count, directed)
        self.root = root
        self.k = k

    def evaluate(self, biset: Biset) -> int:
        return eval_g(biset, self.root, self.k)

    def gamma(self) -> int:
        return self.k - 1

    def separation_pairs(self) -> List[SeparationPair]:
        return [
            SeparationPair(self.root, v, self.k, (1 << self.root) | (1 << v))
            for v in range(self.node_count)
            if v != self.root
        ]


class ElementConnectivityFunction(ConnectivityFunction):
    """h：元素连通需求，终端不会出现在边界上"""

    kind = FunctionKind.ELEMENT
    supermodularity = Supermodularity.SKEW

    def __init__(self, node_count: int, terminals: Iterable[int], pairs: Iterable[Tuple[int, int, int]]):
        super().__init__(node_count, directed=False)
        self.terminals = tuple(sorted(set(terminals)))
        self.terminal_mask = mask_of(self.terminals)
        self.requirement: Dict[Tuple[int, int], int] = {}
        for u, v, r in pairs:
            if u != v and r > 0:
                self.requirement[(min(u, v), max(u, v))] = r

    def evaluate(self, biset: Biset) -> int:
        return eval_h(biset, self.terminal_mask, self.requirement)

    def max_requirement(self) -> int:
        return max(self.requirement.values(), default=0)

    def gamma(self) -> int:
        return max(self.max_requirement() - 1, 0)

    def separation_pairs(self) -> List[SeparationPair]:
        return [
            SeparationPair(u, v, r, self.terminal_mask)
            for (u, v), r in sorted(self.requirement.items())
        ]


class KConnectivityFunction(ConnectivityFunction):
    """f^k：k-连通需求"""

    kind = FunctionKind.K_CONNECTIVITY
    supermodularity = Supermodularity.CROSSING

    def __init__(self, node_count: int, k: int, directed: bool = False):
        super().__init__(node_count, directed)
        self.k = k

    def evaluate(self, biset: Biset) -> int:
        return eval_fk(biset, self.k, self.node_count)

    def gamma(self) -> int:
        return self.k - 1

    def separation_pairs(self) -> List[SeparationPair]:
        return [
            SeparationPair(u, v, self.k, (1 << u) | (1 << v))
            for u in range(self.node_count)
            for v in range(self.node_count)
            if u != v
        ]

    def is_symmetric_at(self, biset: Biset) -> bool:
        full = (1 << self.node_count) - 1
        mirror = Biset(full & ~biset.outer, full & ~biset.inner)
        return self.evaluate(biset) == self.evaluate(mirror)


class ResidualFunction(ConnectivityFunction):
    """f_J(Ŝ) = f(Ŝ) − |δ_J(Ŝ)|"""

    kind = FunctionKind.RESIDUAL

    def __init__(self, base: ConnectivityFunction, instance: Instance, chosen: Iterable[int]):
        super().__init__(base.node_count, instance.directed)
        self._base = base
        self.instance = instance
        self._chosen = frozenset(chosen)
        self.supermodularity = base.supermodularity

    @property
    def base(self) -> ConnectivityFunction:
        return self._base

    @property
    def chosen(self) -> FrozenSet[int]:
        return self._chosen

    def evaluate(self, biset: Biset) -> int:
        value = self._base.evaluate(biset)
        if not self._chosen:
            return value
        return value - len(delta(self.instance, self._chosen, biset))

    def gamma(self) -> int:
        # 剩余函数只会缩小正值支撑集
        return self._base.gamma()

    def separation_pairs(self) -> Optional[List[SeparationPair]]:
        return self._base.separation_pairs()

    def with_chosen(self, chosen: Iterable[int]) -> "ResidualFunction":
        return ResidualFunction(self._base, self.instance, chosen)

    def describe(self) -> str:
        return f"residual({self._base.describe()}, |J|={len(self._chosen)})"


def eval_residual(function: ConnectivityFunction, instance: Instance, chosen: Iterable[int], biset: Biset) -> int:
    return ResidualFunction(function.base, instance, set(function.chosen) | set(chosen)).evaluate(biset)


def gamma_of(function: ConnectivityFunction) -> int:
    return function.gamma()


def function_for(instance: Instance) -> ConnectivityFunction:
    """按实例需求构造对应的双集合函数"""
    requirement = instance.requirement
    if isinstance(requirement, OutConnRequirement):
        return OutConnectivityFunction(instance.node_count, requirement.root, requirement.k, instance.directed)
    if isinstance(requirement, ElementRequirement):
        return ElementConnectivityFunction(instance.node_count, requirement.terminals, requirement.pairs)
    if isinstance(requirement, KConnRequirement):
        return KConnectivityFunction(instance.node_count, requirement.k, instance.directed)
    raise ValueError(f"未知需求类型: {requirement!r}")


@dataclass
class SupermodularityReport:
    """穷举所有双集合对的超模性审计结果"""

    property: Supermodularity
    node_count: int
    pairs_checked: int = 0
    violations: List[Tuple[Biset, Biset]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def supermodularity_audit(
    function: ConnectivityFunction,
    node_count: Optional[int] = None,
    prop: Optional[Supermodularity] = None,
    max_violations: int = 20,
    positive: bool = True,
) -> SupermodularityReport:
    """按函数声明的性质穷举检查超模 / 后模不等式

    positive=True 时只检查 f(X) > 0 且 f(Y) > 0 的双集合对 (正相交 / 正斜超模)，
    positive=False 对所有对检查原始值。
    """
    n = node_count if node_count is not None else function.node_count
    if n > settings.EXHAUSTIVE_MAX_NODES:
        raise TooLarge(f"超模性审计只支持 |V| <= {settings.EXHAUSTIVE_MAX_NODES}，当前 {n}")
    prop = prop or function.supermodularity
    full = (1 << n) - 1
    bisets = list(enumerate_bisets(n))
    values = {(b.inner, b.outer): function.evaluate(b) for b in bisets}
    report = SupermodularityReport(property=prop, node_count=n)

    def value(b: Biset) -> int:
        return values[(b.inner, b.outer)]

    for x, y in combinations_with_replacement(bisets, 2):
        if prop in (Supermodularity.INTERSECTING, Supermodularity.CROSSING):
            if not x.inner & y.inner:
                continue
            if prop == Supermodularity.CROSSING and (x.outer | y.outer) == full:
                continue
        if positive and (value(x) <= 0 or value(y) <= 0):
            continue
        report.pairs_checked += 1
        lhs = value(x) + value(y)
        supermodular = lhs <= value(intersect(x, y)) + value(union(x, y))
        if supermodular:
            continue
        if prop == Supermodularity.SKEW and lhs <= value(subtract(x, y)) + value(subtract(y, x)):
            continue
        report.violations.append((x, y))
        if len(report.violations) >= max_violations:
            break

    if report.violations:
        logger.warning(
            f"超模性审计发现违反: 性质={prop.value}, 第一对={report.violations[0]}, 共检查 {report.pairs_checked} 对"
        )
    else:
        logger.debug(f"超模性审计通过: 性质={prop.value}, 共检查 {report.pairs_checked} 对")
    return report
