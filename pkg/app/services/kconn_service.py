from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx
from loguru import logger

from app.core.biset import enumerate_bisets
from app.core.exceptions import (
    BadR,
    CertificateViolation,
    InsufficientConnectivity,
    InputError,
    NoSwapFound,
    NotCompletable,
    NotSimple,
)
from app.core.graph import Edge, Instance, KConnRequirement, OutConnRequirement, delta
from app.functions.requirements import KConnectivityFunction, OutConnectivityFunction
from app.services.rounding_service import (
    Auditor,
    ParamsPreset,
    RoundingParams,
    RoundingTrace,
    preset_params,
    prune_inclusion_minimal,
    run,
    undirected_outconnected,
)
from app.services.verify_service import is_k_connected, node_connectivity
from config.config import settings

Pair = Tuple[int, int]


def select_r(instance: Instance, k: int) -> Tuple[int, ...]:
    """度约束余量最大的 k 个节点，无约束节点优先，同余量按编号"""
    if not 1 <= k <= instance.node_count:
        raise BadR(f"无法从 {instance.node_count} 个节点中选出 {k} 个")
    order = sorted(
        range(instance.node_count),
        key=lambda v: (0, 0, v) if v not in instance.bounds else (1, -instance.bounds[v], v),
    )
    return tuple(sorted(order[:k]))


def with_extra(instance: Instance, edge_ids: Iterable[int], pairs: Sequence[Pair]) -> Tuple[Instance, List[int]]:
    """在实例上追加零费用边，返回新实例与 edge_ids ∪ 新边编号"""
    m = len(instance.edges)
    extended = instance.model_copy_with(
        edges=instance.edges + tuple(Edge(tail=u, head=v, cost=0) for u, v in pairs),
        bounds={},
        in_bounds={},
    )
    return extended, sorted(edge_ids) + list(range(m, m + len(pairs)))


def _k_connected_with(instance: Instance, edge_ids: Iterable[int], pairs: Sequence[Pair], k: int) -> bool:
    extended, ids = with_extra(instance, edge_ids, pairs)
    return is_k_connected(extended, ids, k)


@dataclass
class ExternalResult:
    edges: FrozenSet[int]
    plus: FrozenSet[int]
    minus: FrozenSet[int]
    root_instance: Instance
    params: RoundingParams
    trace: RoundingTrace
    lp_objective: Fraction
    minus_cost: Fraction = Fraction(0)
    degree_limits: Dict[int, int] = field(default_factory=dict)


def _augment_with_root(instance: Instance, r_nodes: Sequence[int], reverse: bool = False) -> Instance:
    """新增节点 s=n 与到 R 的零费用边；reverse 时所有原弧反向"""
    s = instance.node_count
    edges = [
        (e.head, e.tail, e.cost) if reverse else (e.tail, e.head, e.cost)
        for e in instance.edges
    ]
    edges += [(s, r, Fraction(0)) for r in r_nodes]
    bounds = {} if reverse else {v: b + (1 if v in r_nodes else 0) for v, b in instance.bounds.items()}
    k = len(r_nodes)
    return Instance(
        directed=instance.directed,
        node_count=instance.node_count + 1,
        edges=tuple(edges),
        bounds=bounds,
        requirement=OutConnRequirement(root=s, k=k),
    )


def external_outconnectivity(
    instance: Instance,
    k: int,
    r_nodes: Sequence[int],
    alpha: int,
    auditor: Optional[Auditor] = None,
) -> ExternalResult:
    """外部 k-出连通：加新根 s 与 s-R 零费用边，求 k-出连通后去掉 s"""
    r_nodes = tuple(sorted(set(r_nodes)))
    if len(r_nodes) != k or any(not 0 <= r < instance.node_count for r in r_nodes):
        raise BadR(f"R 必须是 {k} 个不同的节点: {r_nodes}")
    m = len(instance.edges)
    augmented = _augment_with_root(instance, r_nodes)
    s = instance.node_count

    if not instance.directed:
        outcome = undirected_outconnected(augmented, alpha, root=s, k=k, auditor=auditor)
        edges = frozenset(e for e in outcome.edges if e < m)
        limits = {v: lim for v, lim in outcome.degree_limits.items() if v < s}
        return ExternalResult(
            edges=edges,
            plus=edges,
            minus=frozenset(),
            root_instance=augmented,
            params=outcome.params,
            trace=outcome.trace,
            lp_objective=outcome.lp_objective,
            degree_limits=limits,
        )

    function = OutConnectivityFunction(augmented.node_count, s, k, directed=True)
    params = preset_params(ParamsPreset.DIRECTED_OUT, alpha, function.gamma())
    plus, trace = run(augmented, function, params, auditor=auditor)

    # J⁻：反向图上不带度约束求 k-出连通，即原图中 k-入连通到 s
    reversed_instance = _augment_with_root(instance, r_nodes, reverse=True)
    reverse_function = OutConnectivityFunction(reversed_instance.node_count, s, k, directed=True)
    minus, minus_trace = run(reversed_instance, reverse_function, RoundingParams(alpha=1, beta=0, sigma=1), bounded=())
    minus = prune_inclusion_minimal(reversed_instance, minus, reverse_function)
    trace.lp_rounds += minus_trace.lp_rounds
    trace.cuts_added += minus_trace.cuts_added

    plus_ids = frozenset(e for e in plus if e < m)
    minus_ids = frozenset(e for e in minus if e < m)
    limits = {v: params.degree_limit(b) + k for v, b in augmented.bounds.items() if v < s}
    logger.info(f"外部 k-出连通完成: |J⁺|={len(plus_ids)}, |J⁻|={len(minus_ids)}")
    return ExternalResult(
        edges=plus_ids | minus_ids,
        plus=plus_ids,
        minus=minus_ids,
        root_instance=augmented,
        params=params,
        trace=trace,
        lp_objective=trace.initial_objective or Fraction(0),
        minus_cost=instance.cost_of(minus_ids),
        degree_limits=limits,
    )


def deficient_bisets_meet_r(instance: Instance, edge_ids: Iterable[int], k: int, r_nodes: Sequence[int]):
    """J 上每个 f^k 亏缺双集合的内部都与 R 相交；返回 (是否成立, 第一个反例)"""
    function = KConnectivityFunction(instance.node_count, k, instance.directed)
    edges = list(edge_ids)
    r_mask = 0
    for r in r_nodes:
        r_mask |= 1 << r
    for biset in enumerate_bisets(instance.node_count):
        required = function.evaluate(biset)
        if required > 0 and len(delta(instance, edges, biset)) < required and not biset.inner & r_mask:
            return False, biset
    return True, None


@dataclass
class CompletionSet:
    edges: Tuple[Pair, ...]
    max_degree: int
    certificate: bool
    directed: bool

    def degree(self, v: int) -> int:
        return max(_out_degree(self.edges, v), _in_degree(self.edges, v)) if self.directed else _degree(self.edges, v)


def _degree(pairs: Iterable[Pair], v: int) -> int:
    return sum(1 for u, w in pairs if v in (u, w))


def _out_degree(pairs: Iterable[Pair], v: int) -> int:
    return sum(1 for u, _ in pairs if u == v)


def _in_degree(pairs: Iterable[Pair], v: int) -> int:
    return sum(1 for _, w in pairs if w == v)


def _max_degree(pairs: Sequence[Pair], node_count: int, directed: bool) -> int:
    if directed:
        return max(
            (max(_out_degree(pairs, v), _in_degree(pairs, v)) for v in range(node_count)),
            default=0,
        )
    return max((_degree(pairs, v) for v in range(node_count)), default=0)


def forest_certificate(pairs: Sequence[Pair], k: int, directed: bool) -> bool:
    """无向：F 是森林且 |F| <= k-1；有向：F 的二部图是森林且 |F| <= 2k-1"""
    graph = nx.Graph()
    if directed:
        graph.add_edges_from(((u, "out"), (v, "in")) for u, v in pairs)
        return len(pairs) <= 2 * k - 1 and (not pairs or nx.is_forest(graph))
    graph.add_edges_from(pairs)
    return len(pairs) <= k - 1 and (not pairs or nx.is_forest(graph))


def _existing_pairs(instance: Instance, edge_ids: Iterable[int]) -> set:
    return {instance.edges[e].ends() for e in edge_ids}


def minimal_completion(instance: Instance, edge_ids: Iterable[int], r_nodes: Sequence[int], k: int) -> CompletionSet:
    """从 R 上的完全(双向)图出发，按固定顺序贪心删边，保持 J ∪ F k-连通"""
    edges = sorted(edge_ids)
    present = _existing_pairs(instance, edges)
    r_sorted = sorted(r_nodes)
    if instance.directed:
        start = [(u, v) for u in r_sorted for v in r_sorted if u != v and (u, v) not in present]
    else:
        start = [(u, v) for i, u in enumerate(r_sorted) for v in r_sorted[i + 1:] if (u, v) not in present]
    if not _k_connected_with(instance, edges, start, k):
        raise NotCompletable(f"J 加上 R 上完全图仍不是 {k}-连通")

    current = list(start)
    for pair in start:
        trial = [p for p in current if p != pair]
        if _k_connected_with(instance, edges, trial, k):
            current = trial
    completion = CompletionSet(
        edges=tuple(current),
        max_degree=_max_degree(current, instance.node_count, instance.directed),
        certificate=forest_certificate(current, k, instance.directed),
        directed=instance.directed,
    )
    if not completion.certificate:
        raise CertificateViolation(
            f"极小补全集不满足森林证书: F={current}, k={k}",
            detail={"edges": edges, "r": r_sorted},
        )
    return completion


def violates_threshold(degree: int, k: int, directed: bool) -> bool:
    """d > max{3, 3/2 + sqrt(2k + c)}，c = 1/4 (无向) 或 5/4 (有向)，整数形式比较"""
    if degree <= 3:
        return False
    return (2 * degree - 3) ** 2 > 8 * k + (5 if directed else 1)


def degree_threshold(k: int, directed: bool) -> int:
    """不违反阈值的最大整数度"""
    d = 3
    while not violates_threshold(d + 1, k, directed):
        d += 1
    return d


@dataclass
class ReductionResult:
    edges: Tuple[Pair, ...]
    swaps: int = 0
    reprunes: int = 0
    max_degree: int = 0


def _prune_pairs(instance: Instance, edge_ids: Sequence[int], pairs: List[Pair], k: int) -> List[Pair]:
    current = list(pairs)
    for pair in list(pairs):
        trial = [p for p in current if p != pair]
        if _k_connected_with(instance, edge_ids, trial, k):
            current = trial
    return current


def degree_reduce(instance: Instance, edge_ids: Iterable[int], completion: Sequence[Pair], k: int) -> ReductionResult:
    """把 F 中度数超过阈值的节点的边 ut 换成 vt，其中 deg_F(v) <= deg_F(u)-2，每次交换后检查 k-连通

    交换本身不改变 |F|。开始时以及找不到交换时会删去已不关键的边，
    所以返回的 F' 满足 |F'| <= |F|，删边次数记在 reprunes。
    """
    edges = sorted(edge_ids)
    directed = instance.directed
    n = instance.node_count
    for v in range(n):
        low = min(instance.degree(edges, v), instance.in_degree(edges, v)) if directed else instance.degree(edges, v)
        if low < k - 1:
            logger.warning(f"度数削减前提不满足: 节点 {v} 在 J 中的度 {low} < k-1")

    current = _prune_pairs(instance, edges, list(completion), k)
    result = ReductionResult(edges=tuple(current))
    if len(current) < len(completion):
        result.reprunes += 1
    present = _existing_pairs(instance, edges)

    # 有向图先削减出度，再削减入度
    for incoming in ([False, True] if directed else [False]):
        while True:
            offenders = [
                u for u in range(n)
                if violates_threshold(_f_degree(current, u, directed, incoming), k, directed)
            ]
            if not offenders:
                break
            u = offenders[0]
            swapped = _try_swap(instance, edges, current, u, k, incoming, present)
            if swapped is not None:
                current = swapped
                result.swaps += 1
                continue
            pruned = _prune_pairs(instance, edges, current, k)
            if len(pruned) < len(current):
                logger.warning(f"节点 {u} 找不到可交换的边，删去非关键边 {len(current) - len(pruned)} 条")
                current = pruned
                result.reprunes += 1
                continue
            raise NoSwapFound(
                f"节点 {u} 的 F-度 {_f_degree(current, u, directed, incoming)} 超过阈值且找不到保持 {k}-连通的交换",
                detail={"edges": edges, "completion": current, "k": k},
            )

    result.edges = tuple(current)
    result.max_degree = _max_degree(current, n, directed)
    return result


def _f_degree(pairs: Sequence[Pair], v: int, directed: bool, incoming: bool) -> int:
    if not directed:
        return _degree(pairs, v)
    return _in_degree(pairs, v) if incoming else _out_degree(pairs, v)


def _try_swap(
    instance: Instance,
    edges: Sequence[int],
    current: List[Pair],
    u: int,
    k: int,
    incoming: bool,
    present: set,
) -> Optional[List[Pair]]:
    directed = instance.directed
    d = _f_degree(current, u, directed, incoming)
    for old in sorted(current):
        if directed:
            head_side = old[1] if incoming else old[0]
            if head_side != u:
                continue
            t = old[0] if incoming else old[1]
        else:
            if u not in old:
                continue
            t = old[0] + old[1] - u
        for v in range(instance.node_count):
            if v in (u, t) or _f_degree(current, v, directed, incoming) > d - 2:
                continue
            if directed:
                new = (t, v) if incoming else (v, t)
            else:
                new = (min(v, t), max(v, t))
            if new in present or new in current:
                continue
            trial = [p for p in current if p != old] + [new]
            if _k_connected_with(instance, edges, trial, k):
                logger.debug(f"度数削减交换: {old} -> {new}")
                return trial
    return None


def _scaled_costs(instance: Instance, edge_ids: Iterable[int]) -> Dict[int, int]:
    ids = list(edge_ids)
    scale = 1
    for e in ids:
        scale = lcm(scale, instance.edges[e].cost.denominator)
    return {e: int(instance.edges[e].cost * scale) for e in ids}


def min_cost_augment(
    instance: Instance,
    chosen: Iterable[int],
    u: int,
    t: int,
    k: int,
    candidates: Optional[Iterable[int]] = None,
) -> FrozenSet[int]:
    """最小费用流求 I_ut ⊆ E∖J，使 J ∪ I_ut 含 k 条内部点不交的 u-t 路，再删为包含极小"""
    chosen = set(chosen)
    pool = set(instance.edge_ids - chosen if candidates is None else candidates) - chosen
    if node_connectivity(instance, chosen, u, t) >= k:
        return frozenset()
    if node_connectivity(instance, chosen | pool, u, t) < k:
        raise InsufficientConnectivity(f"J ∪ E 中 {u}-{t} 之间不足 {k} 条内部点不交路")

    weights = _scaled_costs(instance, pool)
    graph = nx.DiGraph()
    source = "source"
    graph.add_edge(source, ("out", u), capacity=k, weight=0)
    for v in range(instance.node_count):
        if v not in (u, t):
            graph.add_edge(("in", v), ("out", v), capacity=1, weight=0)
    for e in sorted(chosen | pool):
        edge = instance.edges[e]
        directions = [(edge.tail, edge.head)] if instance.directed else [(edge.tail, edge.head), (edge.head, edge.tail)]
        for a, b in directions:
            mid = ("edge", e, a)
            graph.add_edge(("out", a), mid, capacity=1, weight=0 if e in chosen else weights[e])
            graph.add_edge(mid, ("in", b), capacity=1, weight=0)
    graph.add_edge(("in", t), ("out", t), capacity=k, weight=0)

    flow = nx.max_flow_min_cost(graph, source, ("out", t))
    value = sum(flow[source].values())
    if value < k:
        raise InsufficientConnectivity(f"最小费用流只找到 {value} 条 {u}-{t} 路")
    used: Set[int] = set()
    for e in pool:
        edge = instance.edges[e]
        tails = (edge.tail,) if instance.directed else (edge.tail, edge.head)
        if any(flow[("out", a)].get(("edge", e, a), 0) > 0 for a in tails):
            used.add(e)

    # 删为包含极小
    for e in sorted(used, key=lambda e: (-instance.edges[e].cost, -e)):
        if node_connectivity(instance, chosen | (used - {e}), u, t) >= k:
            used.discard(e)
    return frozenset(used)


@dataclass
class KConnResult:
    edges: FrozenSet[int]
    external: ExternalResult
    r_nodes: Tuple[int, ...]
    completion: CompletionSet
    reduction: ReductionResult
    augmentations: Dict[Pair, FrozenSet[int]]
    lower_bound: Fraction
    cost_factor: Fraction
    degree_limits: Dict[int, Fraction]
    r_audit: Optional[bool] = None

    @property
    def max_f_degree(self) -> int:
        return self.reduction.max_degree


def db_k_connected(
    instance: Instance,
    alpha: int,
    r_nodes: Optional[Sequence[int]] = None,
    auditor: Optional[Auditor] = None,
) -> KConnResult:
    """度约束 k-连通子图：外部出连通 → 极小补全 → 度数削减 → 逐边增广"""
    requirement = instance.requirement
    if not isinstance(requirement, KConnRequirement):
        raise InputError("db_k_connected 需要 kconn 需求")
    if not instance.is_simple():
        raise NotSimple("k-连通流程要求简单图")
    k = requirement.k
    r_nodes = tuple(sorted(r_nodes)) if r_nodes is not None else select_r(instance, k)
    logger.info(f"k-连通流程开始: k={k}, R={r_nodes}, alpha={alpha}, 有向={instance.directed}")

    external = external_outconnectivity(instance, k, r_nodes, alpha, auditor=auditor)
    chosen = set(external.edges)

    r_audit = None
    if not instance.directed and instance.node_count <= settings.EXHAUSTIVE_MAX_NODES:
        r_audit, offender = deficient_bisets_meet_r(instance, chosen, k, r_nodes)
        if not r_audit:
            logger.warning(f"亏缺双集合未与 R 相交: {offender}")

    completion = minimal_completion(instance, chosen, r_nodes, k)
    reduction = degree_reduce(instance, chosen, completion.edges, k)

    augmentations: Dict[Pair, FrozenSet[int]] = {}
    extra: set = set()
    for u, t in reduction.edges:
        augmentations[(u, t)] = min_cost_augment(instance, chosen, u, t, k)
        extra |= augmentations[(u, t)]
    solution = frozenset(chosen | extra)
    if not is_k_connected(instance, solution, k):
        raise CertificateViolation(f"k-连通流程输出不是 {k}-连通", detail={"solution": sorted(solution)})

    size = len(reduction.edges)
    d = reduction.max_degree
    max_augment = max((instance.cost_of(i) for i in augmentations.values()), default=Fraction(0))
    if instance.directed:
        lower_bound = max(external.lp_objective, external.minus_cost, max_augment)
        cost_factor = Fraction(alpha + 1 + size)
        extra_degree = Fraction(size) + Fraction(k * d, 2)
    else:
        lower_bound = max(external.lp_objective / 2, max_augment)
        cost_factor = Fraction(2 * alpha + size)
        extra_degree = Fraction(2 * size) + Fraction(k * d, 2)
    limits = {v: Fraction(limit) + extra_degree for v, limit in external.degree_limits.items()}

    logger.info(
        f"k-连通流程完成: |J|={len(chosen)}, |F|={size}, d={d}, |I|={len(extra)}, 费用={instance.cost_of(solution)}"
    )
    return KConnResult(
        edges=solution,
        external=external,
        r_nodes=r_nodes,
        completion=completion,
        reduction=reduction,
        augmentations=augmentations,
        lower_bound=lower_bound,
        cost_factor=cost_factor,
        degree_limits=limits,
        r_audit=r_audit,
    )
