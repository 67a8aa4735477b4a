import random
from fractions import Fraction
from typing import Dict, List, Optional, Set, Tuple

from loguru import logger

from app.core.exceptions import InputError
from app.core.graph import (
    ElementRequirement,
    Instance,
    KConnRequirement,
    OutConnRequirement,
    RequirementKind,
)


def _random_cost(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(1, 20), rng.randint(1, 4))


def _core_arcs(rng: random.Random, n: int, k: int, directed: bool, both_ways: bool) -> Set[Tuple[int, int]]:
    """(k+1)-团核心，其余节点依次连向 k 个已有节点，保持 k-(出)连通"""
    arcs: Set[Tuple[int, int]] = set()
    for u in range(k + 1):
        for v in range(u + 1, k + 1):
            arcs.add((u, v))
            if directed:
                arcs.add((v, u))
    for v in range(k + 1, n):
        for u in rng.sample(range(v), k):
            if not directed:
                arcs.add((u, v))
                continue
            arcs.add((u, v))
            if both_ways:
                arcs.add((v, u))
    return arcs


def generate(
    seed: int,
    n: int,
    density: float,
    kind: RequirementKind,
    k: int,
    slack: Optional[int],
    directed: Optional[bool] = None,
) -> Instance:
    """生成保证可行的伪随机实例

    Args:
        seed: 随机种子，相同参数得到完全相同的实例
        n: 节点数，至少 k+1
        density: 额外边出现的概率
        kind: 需求类型
        k: 连通度 (元素连通时为最大需求)
        slack: b(v) = deg_H(v) + slack；None 表示不设度约束
        directed: 缺省时 outconn 为有向，其余为无向
    """
    if k < 1 or n < k + 1:
        raise InputError(f"生成实例需要 k >= 1 且 n >= k+1，当前 n={n}, k={k}")
    kind = RequirementKind(kind)
    if directed is None:
        directed = kind == RequirementKind.OUTCONN
    if kind == RequirementKind.ELEMENT and directed:
        raise InputError("元素连通实例只能是无向图")

    rng = random.Random(seed)
    core = _core_arcs(rng, n, k, directed, both_ways=kind == RequirementKind.KCONN)

    extra: List[Tuple[int, int]] = []
    for u in range(n):
        for v in range(n):
            if u == v or (not directed and u > v) or (u, v) in core:
                continue
            if rng.random() < density:
                extra.append((u, v))

    all_arcs = sorted(core | set(extra))
    edges = [(u, v, _random_cost(rng)) for u, v in all_arcs]

    bounds: Dict[int, int] = {}
    if slack is not None:
        for v in range(n):
            if directed:
                degree = sum(1 for a, _ in core if a == v)
            else:
                degree = sum(1 for a, b in core if v in (a, b))
            bounds[v] = max(1, degree + slack)

    if kind == RequirementKind.OUTCONN:
        requirement = OutConnRequirement(root=0, k=k)
    elif kind == RequirementKind.KCONN:
        requirement = KConnRequirement(k=k)
    else:
        size = max(2, n // 2 + 1)
        terminals = sorted(rng.sample(range(n), size))
        pairs = []
        for i, u in enumerate(terminals):
            for v in terminals[i + 1:]:
                if rng.random() < 0.5:
                    pairs.append((u, v, rng.randint(1, k)))
        if not pairs:
            pairs.append((terminals[0], terminals[1], k))
        requirement = ElementRequirement(
            k=max(r for _, _, r in pairs), terminals=tuple(terminals), pairs=tuple(pairs)
        )

    instance = Instance(
        directed=directed,
        node_count=n,
        edges=tuple(edges),
        bounds=bounds,
        requirement=requirement,
    )
    logger.debug(
        f"生成实例: seed={seed}, n={n}, k={k}, kind={kind.value}, |E|={len(edges)}, 有向={directed}"
    )
    return instance
