from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Hashable, Iterable, List, Mapping, Tuple

import networkx as nx
from networkx.algorithms.flow import edmonds_karp

from app.core.biset import Biset
from app.core.exceptions import MalformedCut
from app.core.graph import Instance

# 拆点网络中节点 v 的两个副本: (v, 0) 为入副本, (v, 1) 为出副本
IN_COPY = 0
OUT_COPY = 1

Arc = Tuple[Hashable, Hashable]


@dataclass
class SplitNetwork:
    """带节点容量的 s-t 网络

    可拆分节点的 (v,0)->(v,1) 弧容量为 1，其余节点该弧无 capacity 属性即无穷大；
    原边 u->w 对应弧 (u,1)->(w,0)，无向边两个方向各一条。
    """

    graph: nx.DiGraph
    source: Hashable
    sink: Hashable
    node_count: int
    split: int  # 可出现在边界上的节点掩码
    edge_arcs: Dict[Arc, List[int]] = field(default_factory=dict)

    @property
    def source_node(self) -> int:
        return self.source[0]

    @property
    def sink_node(self) -> int:
        return self.sink[0]


@dataclass(frozen=True)
class MinCut:
    value: Fraction
    sink_side: FrozenSet[Hashable]
    arcs: Tuple[Arc, ...]


def build_split_network(
    instance: Instance,
    capacities: Mapping[int, Fraction],
    source: int,
    sink: int,
    unsplit: int,
) -> SplitNetwork:
    """按边容量构造拆点网络

    Args:
        instance: 问题实例
        capacities: 边编号 -> 容量，未出现的边不进入网络
        source: 源点 (不在 S⁺ 中)
        sink: 汇点 (在 S 中)
        unsplit: 不拆分节点掩码，源汇点总是不拆分
    """
    unsplit |= (1 << source) | (1 << sink)
    graph = nx.DiGraph()
    split = 0
    for v in range(instance.node_count):
        if (unsplit >> v) & 1:
            graph.add_edge((v, IN_COPY), (v, OUT_COPY))
        else:
            graph.add_edge((v, IN_COPY), (v, OUT_COPY), capacity=Fraction(1))
            split |= 1 << v

    network = SplitNetwork(
        graph=graph,
        source=(source, IN_COPY),
        sink=(sink, OUT_COPY),
        node_count=instance.node_count,
        split=split,
    )
    for edge_id in sorted(capacities):
        edge = instance.edges[edge_id]
        value = Fraction(capacities[edge_id])
        directions = [(edge.tail, edge.head)]
        if not instance.directed:
            directions.append((edge.head, edge.tail))
        for tail, head in directions:
            arc = ((tail, OUT_COPY), (head, IN_COPY))
            if graph.has_edge(*arc):
                graph[arc[0]][arc[1]]["capacity"] += value
            else:
                graph.add_edge(*arc, capacity=value)
            network.edge_arcs.setdefault(arc, []).append(edge_id)
    return network


def max_flow(network: SplitNetwork) -> MinCut:
    """精确最大流与最小割，汇侧为残量网络中能到达汇点的节点"""
    value, (_, sink_side) = nx.minimum_cut(
        network.graph, network.source, network.sink, flow_func=edmonds_karp
    )
    sink_side = frozenset(sink_side)
    arcs = tuple(
        (u, w)
        for u, w in network.graph.edges()
        if u not in sink_side and w in sink_side
    )
    return MinCut(value=Fraction(value), sink_side=sink_side, arcs=arcs)


def cut_value(network: SplitNetwork, arcs: Iterable[Arc]) -> Fraction:
    total = Fraction(0)
    for u, w in arcs:
        data = network.graph[u][w]
        if "capacity" not in data:
            raise MalformedCut(f"割中包含无穷容量弧: {u} -> {w}")
        total += data["capacity"]
    return total


def cut_to_biset(network: SplitNetwork, cut: MinCut) -> Biset:
    """S⁺ 为出副本在汇侧的节点，S 为两个副本都在汇侧的节点"""
    if network.source in cut.sink_side:
        raise MalformedCut("源点位于汇侧")
    if network.sink not in cut.sink_side:
        raise MalformedCut("汇点不在汇侧")
    inner = 0
    outer = 0
    for v in range(network.node_count):
        in_side = (v, IN_COPY) in cut.sink_side
        out_side = (v, OUT_COPY) in cut.sink_side
        if out_side:
            outer |= 1 << v
            if in_side:
                inner |= 1 << v
    boundary = outer & ~inner
    if boundary & ~network.split:
        raise MalformedCut("不可拆分节点出现在边界上")
    return Biset(inner, outer)
