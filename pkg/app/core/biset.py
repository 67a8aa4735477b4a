from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional

from loguru import logger

from app.core.exceptions import BisetError, NotLaminar

# 节点集合统一用整数位掩码表示，桌面规模 n <= 64


def mask_of(nodes: Iterable[int]) -> int:
    """节点列表转位掩码"""
    result = 0
    for v in nodes:
        result |= 1 << v
    return result


def nodes_of(mask: int) -> List[int]:
    """位掩码转升序节点列表"""
    result = []
    v = 0
    while mask:
        if mask & 1:
            result.append(v)
        mask >>= 1
        v += 1
    return result


def full_mask(node_count: int) -> int:
    return (1 << node_count) - 1


@dataclass(frozen=True, order=True)
class Biset:
    """双集合 Ŝ=(S, S⁺)，inner ⊆ outer"""

    inner: int
    outer: int

    def __post_init__(self):
        if self.inner & ~self.outer:
            raise BisetError(
                f"双集合内部不包含于外部: inner={nodes_of(self.inner)}, outer={nodes_of(self.outer)}"
            )

    @classmethod
    def of(cls, inner: Iterable[int], outer: Iterable[int]) -> "Biset":
        return cls(mask_of(inner), mask_of(outer))

    @classmethod
    def node(cls, v: int) -> "Biset":
        return cls(1 << v, 1 << v)

    @property
    def boundary(self) -> int:
        return self.outer & ~self.inner

    def boundary_size(self) -> int:
        return self.boundary.bit_count()

    def is_proper(self) -> bool:
        return self.inner != 0

    def __repr__(self) -> str:
        return f"Biset({nodes_of(self.inner)}, {nodes_of(self.outer)})"


def intersect(x: Biset, y: Biset) -> Biset:
    return Biset(x.inner & y.inner, x.outer & y.outer)


def union(x: Biset, y: Biset) -> Biset:
    return Biset(x.inner | y.inner, x.outer | y.outer)


def subtract(x: Biset, y: Biset) -> Biset:
    # X̂∖Ŷ = (X∖Y⁺, X⁺∖Y)
    return Biset(x.inner & ~y.outer, x.outer & ~y.inner)


def contains(x: Biset, y: Biset) -> bool:
    """x ⊆ y，即 X ⊆ Y 且 X⁺ ⊆ Y⁺"""
    return (x.inner & ~y.inner) == 0 and (x.outer & ~y.outer) == 0


def strongly_disjoint(x: Biset, y: Biset) -> bool:
    return (x.inner & y.outer) == 0 and (y.inner & x.outer) == 0


def enumerate_bisets(node_count: int) -> Iterator[Biset]:
    """枚举 V 上全部 3^n 个双集合"""
    full = full_mask(node_count)
    outer = full
    while True:
        inner = outer
        while True:
            yield Biset(inner, outer)
            if inner == 0:
                break
            inner = (inner - 1) & outer
        if outer == 0:
            break
        outer = (outer - 1) & full


class BisetFamily:
    """有序双集合族，禁止重复成员"""

    def __init__(self, members: Iterable[Biset] = ()):
        self._members: List[Biset] = []
        self._index: Dict[Biset, int] = {}
        for member in members:
            self.add(member)

    def add(self, member: Biset) -> None:
        if member in self._index:
            raise BisetError(f"双集合族中已存在成员: {member}")
        self._index[member] = len(self._members)
        self._members.append(member)

    def __contains__(self, member: object) -> bool:
        return member in self._index

    def __iter__(self) -> Iterator[Biset]:
        return iter(self._members)

    def __len__(self) -> int:
        return len(self._members)

    def __getitem__(self, position: int) -> Biset:
        return self._members[position]

    def position(self, member: Biset) -> int:
        return self._index[member]

    def __repr__(self) -> str:
        return f"BisetFamily({self._members})"


def _laminar_pair(x: Biset, y: Biset) -> bool:
    return contains(x, y) or contains(y, x) or (x.inner & y.inner) == 0


def _strongly_laminar_pair(x: Biset, y: Biset) -> bool:
    return contains(x, y) or contains(y, x) or strongly_disjoint(x, y)


def is_laminar(family: Iterable[Biset]) -> bool:
    members = list(family)
    return all(
        _laminar_pair(members[i], members[j])
        for i in range(len(members))
        for j in range(i + 1, len(members))
    )


def is_strongly_laminar(family: Iterable[Biset]) -> bool:
    members = list(family)
    return all(
        _strongly_laminar_pair(members[i], members[j])
        for i in range(len(members))
        for j in range(i + 1, len(members))
    )


def first_crossing_pair(family: Iterable[Biset], strong: bool = False) -> Optional[tuple]:
    """返回第一对不满足(强)层状条件的成员，用于诊断"""
    members = list(family)
    check = _strongly_laminar_pair if strong else _laminar_pair
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            if not check(members[i], members[j]):
                return members[i], members[j]
    return None


@dataclass
class LaminarForest:
    """层状族按包含序构成的森林"""

    family: BisetFamily
    parent: Dict[Biset, Optional[Biset]] = field(default_factory=dict)
    children: Dict[Biset, List[Biset]] = field(default_factory=dict)

    @property
    def roots(self) -> List[Biset]:
        return [m for m in self.family if self.parent[m] is None]

    @property
    def leaves(self) -> List[Biset]:
        return [m for m in self.family if not self.children[m]]


def _size_key(member: Biset):
    return (member.inner.bit_count(), member.outer.bit_count())


def build_forest(family: BisetFamily) -> LaminarForest:
    """parent(X̂) 为真包含 X̂ 的最小成员"""
    if not is_laminar(family):
        pair = first_crossing_pair(family)
        raise NotLaminar(f"双集合族不是层状的，冲突成员: {pair}")

    forest = LaminarForest(family=family)
    for member in family:
        forest.children[member] = []
    for member in family:
        supersets = [other for other in family if other != member and contains(member, other)]
        if not supersets:
            forest.parent[member] = None
            continue
        # 层状族中包含同一成员的集合构成链，取最小者
        candidates = [
            other for other in supersets
            if all(contains(other, rest) for rest in supersets)
        ]
        if not candidates:
            candidates = sorted(supersets, key=_size_key)
        forest.parent[member] = candidates[0]
        forest.children[candidates[0]].append(member)
    return forest


def owns(forest: LaminarForest, v: int) -> Optional[Biset]:
    """内部包含 v 的最小成员"""
    bit = 1 << v
    holders = [m for m in forest.family if m.inner & bit]
    minimal = [m for m in holders if not any(o != m and contains(o, m) for o in holders)]
    if not minimal:
        return None
    return minimal[0]


def sharers(forest: LaminarForest, v: int) -> List[Biset]:
    """边界包含 v 的极小成员"""
    bit = 1 << v
    holders = [m for m in forest.family if m.boundary & bit]
    return [m for m in holders if not any(o != m and contains(o, m) for o in holders)]


def shares_count(forest: LaminarForest, v: int) -> int:
    """Δ_L(v)"""
    return len(sharers(forest, v))


@dataclass
class CountAudit:
    lhs: int
    rhs_laminar: int
    rhs_strong: Optional[int]
    laminar_pass: bool
    strong_pass: Optional[bool]

    @property
    def passed(self) -> bool:
        return self.laminar_pass and self.strong_pass is not False


def count_audit(forest: LaminarForest, nodes: Iterable[int], gamma: int) -> CountAudit:
    """核对 Σ_{v∈C} max{Δ(v),1} 与叶子数给出的两个上界"""
    node_list = list(nodes)
    leaf_count = len(forest.leaves)
    lhs = sum(max(shares_count(forest, v), 1) for v in node_list)
    rhs_laminar = 2 * gamma * (leaf_count - 1) + len(node_list)
    strong = is_strongly_laminar(forest.family)
    rhs_strong = gamma * leaf_count + len(node_list) if strong else None
    # 空族时左端为 |C|，两个上界都按 |C| 处理
    if leaf_count == 0:
        rhs_laminar = len(node_list)
        rhs_strong = len(node_list) if strong else None
    audit = CountAudit(
        lhs=lhs,
        rhs_laminar=rhs_laminar,
        rhs_strong=rhs_strong,
        laminar_pass=lhs <= rhs_laminar,
        strong_pass=(lhs <= rhs_strong) if rhs_strong is not None else None,
    )
    if not audit.passed:
        logger.warning(f"计数审计未通过: lhs={lhs}, 层状上界={rhs_laminar}, 强层状上界={rhs_strong}")
    return audit


def uncrossing_potential(member: Biset) -> int:
    """|S|²+|S⁺|²，去交叉时按该势函数排序"""
    return member.inner.bit_count() ** 2 + member.outer.bit_count() ** 2
