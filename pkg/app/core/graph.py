from enum import Enum
from fractions import Fraction
from typing import Annotated, Dict, FrozenSet, Iterable, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.biset import Biset
from app.core.exceptions import ModeMismatch, NodeNotBounded


# 覆盖方向
class CoverMode(str, Enum):
    IN = "in"  # δ⁻：进入双集合
    OUT = "out"  # δ⁺：离开双集合
    UNDIRECTED = "undirected"  # δ


# 连通性需求类型
class RequirementKind(str, Enum):
    OUTCONN = "outconn"  # 从根 s 出发的 k-出连通
    ELEMENT = "element"  # 元素连通
    KCONN = "kconn"  # k-连通


def to_fraction(value) -> Fraction:
    """接受 int / Fraction / "p/q" / 十进制字符串"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError("费用不能是布尔值")
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, float):
        # 浮点只在人工构造时出现，按十进制文本转换避免二进制误差
        return Fraction(repr(value))
    raise ValueError(f"无法解析为有理数: {value!r}")


class Edge(BaseModel):
    """边 / 弧，cost 为精确有理数"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    tail: int = Field(..., ge=0, description="尾 / 无向边较小端点")
    head: int = Field(..., ge=0, description="头 / 无向边较大端点")
    cost: Fraction = Field(default=Fraction(0), description="非负有理费用")

    @field_validator("cost", mode="before")
    @classmethod
    def _parse_cost(cls, value):
        cost = to_fraction(value)
        if cost < 0:
            raise ValueError(f"费用必须非负: {cost}")
        return cost

    @model_validator(mode="after")
    def _no_loop(self):
        if self.tail == self.head:
            raise ValueError(f"不允许自环: {self.tail}")
        return self

    def ends(self) -> Tuple[int, int]:
        return self.tail, self.head


class OutConnRequirement(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["outconn"] = "outconn"
    root: int = Field(..., ge=0, description="根节点 s")
    k: int = Field(..., ge=1)


class ElementRequirement(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["element"] = "element"
    k: int = Field(..., ge=1, description="最大需求，仅作记录")
    terminals: Tuple[int, ...] = Field(..., description="终端集合 T")
    pairs: Tuple[Tuple[int, int, int], ...] = Field(..., description="(u, v, r) 且 u < v")

    @model_validator(mode="before")
    @classmethod
    def _canonical(cls, data):
        if isinstance(data, dict):
            data = dict(data)
            data["terminals"] = tuple(sorted(set(data.get("terminals", ()))))
            merged: Dict[Tuple[int, int], int] = {}
            for u, v, r in data.get("pairs", ()):
                if u == v:
                    if r != 0:
                        raise ValueError(f"需求在对角线上必须为 0: ({u}, {v})")
                    continue
                key = (min(u, v), max(u, v))
                if key in merged and merged[key] != r:
                    raise ValueError(f"需求必须对称: r({u},{v}) 冲突")
                merged[key] = r
            data["pairs"] = tuple((u, v, r) for (u, v), r in sorted(merged.items()))
        return data

    @model_validator(mode="after")
    def _check(self):
        terminal_set = set(self.terminals)
        for u, v, r in self.pairs:
            if u not in terminal_set or v not in terminal_set:
                raise ValueError(f"需求对必须在终端集合中: ({u}, {v})")
            if r < 0:
                raise ValueError(f"需求必须非负: r({u},{v})={r}")
        return self

    def requirement(self, u: int, v: int) -> int:
        key = (min(u, v), max(u, v))
        for a, b, r in self.pairs:
            if (a, b) == key:
                return r
        return 0

    def max_requirement(self) -> int:
        return max((r for _, _, r in self.pairs), default=0)


class KConnRequirement(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["kconn"] = "kconn"
    k: int = Field(..., ge=1)


RequirementSpec = Annotated[
    Union[OutConnRequirement, ElementRequirement, KConnRequirement],
    Field(discriminator="kind"),
]


class Instance(BaseModel):
    """问题实例：图、费用、度约束与连通性需求"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    directed: bool = Field(..., description="是否有向")
    node_count: int = Field(..., ge=1, le=64, description="节点数 n")
    edges: Tuple[Edge, ...] = Field(default=(), description="边列表，下标即边编号")
    bounds: Dict[int, int] = Field(default_factory=dict, description="出度 / 度上界 b(v)")
    in_bounds: Dict[int, int] = Field(default_factory=dict, description="有向图入度上界 b⁻(v)")
    requirement: RequirementSpec

    @model_validator(mode="before")
    @classmethod
    def _canonical_edges(cls, data):
        # 无向边统一存为 u < v
        if isinstance(data, dict) and not data.get("directed", True):
            canonical = []
            for edge in data.get("edges", ()):
                if isinstance(edge, Edge):
                    tail, head, cost = edge.tail, edge.head, edge.cost
                elif isinstance(edge, dict):
                    tail, head, cost = edge["tail"], edge["head"], edge.get("cost", 0)
                else:
                    tail, head, cost = edge
                canonical.append(Edge(tail=min(tail, head), head=max(tail, head), cost=cost))
            data = dict(data)
            data["edges"] = tuple(canonical)
        elif isinstance(data, dict):
            data = dict(data)
            data["edges"] = tuple(
                e if isinstance(e, (Edge, dict)) else Edge(tail=e[0], head=e[1], cost=e[2])
                for e in data.get("edges", ())
            )
        return data

    @model_validator(mode="after")
    def _check(self):
        n = self.node_count
        for index, edge in enumerate(self.edges):
            if edge.tail >= n or edge.head >= n:
                raise ValueError(f"边 {index} 端点越界: {edge.tail}, {edge.head}")
        for name, table in (("bounds", self.bounds), ("in_bounds", self.in_bounds)):
            for v, b in table.items():
                if not 0 <= v < n:
                    raise ValueError(f"{name} 中节点越界: {v}")
                if b < 1:
                    raise ValueError(f"度上界必须 >= 1，节点 {v} 的上界为 {b}")
        if self.in_bounds and not self.directed:
            raise ValueError("无向图不接受入度上界")
        requirement = self.requirement
        if isinstance(requirement, OutConnRequirement) and not 0 <= requirement.root < n:
            raise ValueError(f"根节点越界: {requirement.root}")
        if isinstance(requirement, ElementRequirement):
            if self.directed:
                raise ValueError("元素连通需求只适用于无向图")
            if any(not 0 <= t < n for t in requirement.terminals):
                raise ValueError("终端节点越界")
        return self

    @property
    def edge_ids(self) -> FrozenSet[int]:
        return frozenset(range(len(self.edges)))

    @property
    def full_mask(self) -> int:
        return (1 << self.node_count) - 1

    @property
    def cover_mode(self) -> CoverMode:
        return CoverMode.IN if self.directed else CoverMode.UNDIRECTED

    def is_simple(self) -> bool:
        seen = set()
        for edge in self.edges:
            key = edge.ends()
            if key in seen:
                return False
            seen.add(key)
        return True

    def cost_of(self, edge_ids: Iterable[int]) -> Fraction:
        return sum((self.edges[i].cost for i in edge_ids), Fraction(0))

    def degree(self, edge_ids: Iterable[int], v: int) -> int:
        """有向图为出度，无向图为度"""
        count = 0
        for i in edge_ids:
            edge = self.edges[i]
            if edge.tail == v or (not self.directed and edge.head == v):
                count += 1
        return count

    def in_degree(self, edge_ids: Iterable[int], v: int) -> int:
        return sum(1 for i in edge_ids if self.edges[i].head == v)

    def model_copy_with(self, **changes) -> "Instance":
        data = {
            "directed": self.directed,
            "node_count": self.node_count,
            "edges": self.edges,
            "bounds": dict(self.bounds),
            "in_bounds": dict(self.in_bounds),
            "requirement": self.requirement,
        }
        data.update(changes)
        return Instance(**data)


def covers(edge: Edge, biset: Biset, mode: CoverMode, directed: bool) -> bool:
    """边是否覆盖双集合"""
    if directed and mode == CoverMode.UNDIRECTED:
        raise ModeMismatch("有向边不能按无向方式覆盖")
    if not directed and mode != CoverMode.UNDIRECTED:
        raise ModeMismatch("无向边只能按无向方式覆盖")
    tail_bit = 1 << edge.tail
    head_bit = 1 << edge.head
    if mode == CoverMode.IN:
        return bool(head_bit & biset.inner) and not (tail_bit & biset.outer)
    if mode == CoverMode.OUT:
        return bool(tail_bit & biset.inner) and not (head_bit & biset.outer)
    return (bool(tail_bit & biset.inner) and not (head_bit & biset.outer)) or (
        bool(head_bit & biset.inner) and not (tail_bit & biset.outer)
    )


def delta(
    instance: Instance, edge_ids: Iterable[int], biset: Biset, mode: Optional[CoverMode] = None
) -> List[int]:
    """E' 中覆盖 Ŝ 的边编号，按编号升序"""
    mode = mode or instance.cover_mode
    return sorted(
        i for i in edge_ids if covers(instance.edges[i], biset, mode, instance.directed)
    )


def residual_bound(
    instance: Instance, chosen: Iterable[int], alpha: int, v: int, incoming: bool = False
) -> Fraction:
    """b_J^α(v) = b(v) − deg_J(v)/α"""
    table = instance.in_bounds if incoming else instance.bounds
    if v not in table:
        raise NodeNotBounded(f"节点 {v} 不在度约束集合中")
    if alpha < 1:
        raise ValueError("alpha 必须 >= 1")
    used = instance.in_degree(chosen, v) if incoming else instance.degree(chosen, v)
    return Fraction(table[v]) - Fraction(used, alpha)
