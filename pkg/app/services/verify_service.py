from fractions import Fraction
from typing import FrozenSet, Iterable, List, Mapping, Optional

import networkx as nx
from loguru import logger
from networkx.algorithms.flow import edmonds_karp
from pydantic import BaseModel, ConfigDict, Field

from app.core.biset import enumerate_bisets
from app.core.exceptions import Infeasible, InputError, NotTerminal, TooLarge
from app.core.graph import Instance, delta
from app.functions.base import ConnectivityFunction
from app.functions.requirements import (
    ElementConnectivityFunction,
    KConnectivityFunction,
    OutConnectivityFunction,
    function_for,
)
from config.config import settings


def _flow_value(instance: Instance, edge_ids: Iterable[int], source: int, sink: int, unsplit: int) -> int:
    """整数容量拆点网络上的最大流，边容量为重数"""
    graph = nx.DiGraph()
    unsplit |= (1 << source) | (1 << sink)
    for v in range(instance.node_count):
        if (unsplit >> v) & 1:
            graph.add_edge(("in", v), ("out", v))
        else:
            graph.add_edge(("in", v), ("out", v), capacity=1)
    for i in edge_ids:
        edge = instance.edges[i]
        arcs = [(edge.tail, edge.head)] if instance.directed else [(edge.tail, edge.head), (edge.head, edge.tail)]
        for a, b in arcs:
            key = (("out", a), ("in", b))
            if graph.has_edge(*key):
                graph[key[0]][key[1]]["capacity"] += 1
            else:
                graph.add_edge(*key, capacity=1)
    return int(nx.maximum_flow_value(graph, ("in", source), ("out", sink), flow_func=edmonds_karp))


def node_connectivity(instance: Instance, edge_ids: Iterable[int], u: int, v: int) -> int:
    """κ(u,v)：内部点不交的 u-v 路数，直连边按重数计"""
    if u == v:
        raise InputError("node_connectivity 要求 u != v")
    return _flow_value(instance, list(edge_ids), u, v, 0)


def element_connectivity(
    instance: Instance, edge_ids: Iterable[int], terminals: Iterable[int], u: int, v: int
) -> int:
    """λ^T(u,v)：边不交且非终端点不交的 u-v 路数"""
    terminal_set = set(terminals)
    if u not in terminal_set or v not in terminal_set:
        raise NotTerminal(f"节点 {u} 或 {v} 不是终端")
    if u == v:
        raise InputError("element_connectivity 要求 u != v")
    mask = 0
    for t in terminal_set:
        mask |= 1 << t
    return _flow_value(instance, list(edge_ids), u, v, mask)


class PairCheck(BaseModel):
    source: int
    sink: int
    required: int
    achieved: int


class DegreeCheck(BaseModel):
    node: int
    degree: int
    limit: int
    incoming: bool = False

    @property
    def violated(self) -> bool:
        return self.degree > self.limit


def connectivity_deficits(
    instance: Instance, edge_ids: Iterable[int], function: ConnectivityFunction, first_only: bool = False
) -> List[PairCheck]:
    """逐对最大流检查 f-连通性，返回所有不满足的点对"""
    edges = sorted(set(edge_ids) | set(function.chosen))
    base = function.base
    deficits: List[PairCheck] = []

    def check(u: int, v: int, required: int, achieved: int) -> bool:
        if achieved < required:
            deficits.append(PairCheck(source=u, sink=v, required=required, achieved=achieved))
            return first_only
        return False

    n = instance.node_count
    if isinstance(base, OutConnectivityFunction):
        for v in range(n):
            if v != base.root and check(base.root, v, base.k, node_connectivity(instance, edges, base.root, v)):
                break
    elif isinstance(base, ElementConnectivityFunction):
        for (u, v), r in sorted(base.requirement.items()):
            if check(u, v, r, element_connectivity(instance, edges, base.terminals, u, v)):
                break
    elif isinstance(base, KConnectivityFunction):
        pairs = [(u, v) for u in range(n) for v in range(n) if u != v and (instance.directed or u < v)]
        for u, v in pairs:
            if check(u, v, base.k, node_connectivity(instance, edges, u, v)):
                break
    else:
        if n > settings.EXHAUSTIVE_MAX_NODES:
            raise TooLarge(f"自定义函数只能在 |V| <= {settings.EXHAUSTIVE_MAX_NODES} 时穷举验证")
        for biset in enumerate_bisets(n):
            required = base.evaluate(biset)
            if required > 0:
                achieved = len(delta(instance, edges, biset))
                if check(-1, -1, required, achieved):
                    break
    return deficits


def is_f_connected(instance: Instance, edge_ids: Iterable[int], function: ConnectivityFunction) -> bool:
    return not connectivity_deficits(instance, edge_ids, function, first_only=True)


def is_k_connected(instance: Instance, edge_ids: Iterable[int], k: int) -> bool:
    return is_f_connected(instance, edge_ids, KConnectivityFunction(instance.node_count, k, instance.directed))


def degree_checks(
    instance: Instance,
    edge_ids: Iterable[int],
    limits: Optional[Mapping[int, int]] = None,
    in_limits: Optional[Mapping[int, int]] = None,
) -> List[DegreeCheck]:
    edges = list(edge_ids)
    limits = instance.bounds if limits is None else limits
    in_limits = instance.in_bounds if in_limits is None else in_limits
    checks = [
        DegreeCheck(node=v, degree=instance.degree(edges, v), limit=limit)
        for v, limit in sorted(limits.items())
    ]
    checks.extend(
        DegreeCheck(node=v, degree=instance.in_degree(edges, v), limit=limit, incoming=True)
        for v, limit in sorted(in_limits.items())
    )
    return checks


class IlpResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    cost: Fraction
    edges: FrozenSet[int]
    nodes_explored: int = 0


def ilp_opt(
    instance: Instance,
    function: Optional[ConnectivityFunction] = None,
    limits: Optional[Mapping[int, int]] = None,
    in_limits: Optional[Mapping[int, int]] = None,
    candidates: Optional[Iterable[int]] = None,
) -> IlpResult:
    """分支定界求精确最优整数解

    先尝试排除边；已选边费用不低于当前最优、已选边违反度上界、或已选加未定边
    不再 f-连通时剪枝。
    """
    function = function or function_for(instance)
    order = sorted(instance.edge_ids if candidates is None else candidates)
    if len(order) > settings.ILP_MAX_EDGES:
        raise TooLarge(f"分支定界只支持 |E| <= {settings.ILP_MAX_EDGES}，当前 {len(order)}")
    limits = instance.bounds if limits is None else limits
    in_limits = instance.in_bounds if in_limits is None else in_limits
    costs = {e: instance.edges[e].cost for e in order}

    best_cost: Optional[Fraction] = None
    best_edges: FrozenSet[int] = frozenset()
    explored = 0

    def degree_ok(chosen: List[int]) -> bool:
        for v, limit in limits.items():
            if instance.degree(chosen, v) > limit:
                return False
        for v, limit in in_limits.items():
            if instance.in_degree(chosen, v) > limit:
                return False
        return True

    def search(position: int, chosen: List[int], cost: Fraction, excluded: FrozenSet[int], check: bool) -> None:
        nonlocal best_cost, best_edges, explored
        explored += 1
        if best_cost is not None and cost >= best_cost:
            return
        # 选入一条边不改变可用边集，无需重新检查连通性
        if check and not is_f_connected(instance, [e for e in order if e not in excluded], function):
            return
        if position == len(order):
            best_cost, best_edges = cost, frozenset(chosen)
            return
        edge = order[position]
        search(position + 1, chosen, cost, excluded | {edge}, True)
        chosen.append(edge)
        if degree_ok(chosen):
            search(position + 1, chosen, cost + costs[edge], excluded, False)
        chosen.pop()

    search(0, [], Fraction(0), frozenset(), True)
    if best_cost is None:
        raise Infeasible("不存在满足连通性与度约束的整数解")
    logger.debug(f"分支定界完成: 最优费用={best_cost}, 搜索节点={explored}")
    return IlpResult(cost=best_cost, edges=best_edges, nodes_explored=explored)


class VerificationReport(BaseModel):
    """独立于求解器的验证结果，连通度全部由最大流重新计算"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    requirement: str = Field(..., description="需求类型")
    cost: Fraction
    lp_bound: Optional[Fraction] = Field(default=None, description="LP 下界 τ*")
    ilp_cost: Optional[Fraction] = None
    deficits: List[PairCheck] = Field(default_factory=list)
    degrees: List[DegreeCheck] = Field(default_factory=list)

    @property
    def connected(self) -> bool:
        return not self.deficits

    @property
    def degree_violations(self) -> List[DegreeCheck]:
        return [d for d in self.degrees if d.violated]

    @property
    def max_degree_excess(self) -> int:
        return max((d.degree - d.limit for d in self.degrees), default=0)

    @property
    def passed(self) -> bool:
        return self.connected and not self.degree_violations

    @property
    def ratio_to_lp(self) -> Optional[Fraction]:
        if self.lp_bound is None or self.lp_bound == 0:
            return None
        return self.cost / self.lp_bound

    @property
    def ratio_to_ilp(self) -> Optional[Fraction]:
        if self.ilp_cost is None or self.ilp_cost == 0:
            return None
        return self.cost / self.ilp_cost


def verify(
    instance: Instance,
    edge_ids: Iterable[int],
    limits: Optional[Mapping[int, int]] = None,
    in_limits: Optional[Mapping[int, int]] = None,
    lp_bound: Optional[Fraction] = None,
    with_ilp: bool = False,
) -> VerificationReport:
    edges = sorted(set(edge_ids))
    for e in edges:
        if not 0 <= e < len(instance.edges):
            raise InputError(f"解中的边编号不存在: {e}")
    function = function_for(instance)
    report = VerificationReport(
        requirement=function.kind.value,
        cost=instance.cost_of(edges),
        lp_bound=lp_bound,
        deficits=connectivity_deficits(instance, edges, function),
        degrees=degree_checks(instance, edges, limits, in_limits),
    )
    if with_ilp:
        try:
            report.ilp_cost = ilp_opt(instance, function).cost
        except (Infeasible, TooLarge) as e:
            logger.warning(f"分支定界最优解不可用: {e}")
    if not report.passed:
        logger.warning(
            f"验证未通过: 不满足点对={[(d.source, d.sink) for d in report.deficits]}, "
            f"超度节点={[d.node for d in report.degree_violations]}"
        )
    return report
