from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import ceil
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Set, Tuple, Union

from loguru import logger

from app.core.exceptions import BadAlpha, InputError, Stuck
from app.core.graph import Instance, OutConnRequirement, residual_bound
from app.functions.base import ConnectivityFunction
from app.functions.requirements import OutConnectivityFunction, ResidualFunction
from app.services.verify_service import is_f_connected
from app.solvers.lp_engine import ConstraintPool, LPResult, cutting_plane


# 每轮迭代的动作
class RoundingAction(str, Enum):
    DROP_ZERO = "drop-zero-edge"
    FIX_HIGH = "fix-high-edge"
    MOVE_UNBOUNDED = "move-unbounded-edge"
    DROP_BOUND = "drop-bound"
    DROP_IN_BOUND = "drop-in-bound"


# 参数预设
class ParamsPreset(str, Enum):
    DIRECTED_OUT = "directed-out"
    ELEMENT_COST = "element-cost"
    ELEMENT_DEGREE_ONLY = "element-degree-only"


@dataclass(frozen=True)
class RoundingParams:
    alpha: int
    beta: int
    sigma: int
    move_unbounded_edges: bool = False
    fast: bool = False

    def __post_init__(self):
        if self.alpha < 1:
            raise BadAlpha(f"alpha 必须 >= 1，当前 {self.alpha}")
        if self.beta < 0:
            raise BadAlpha(f"beta 必须 >= 0，当前 {self.beta}")
        if self.sigma > self.alpha:
            raise BadAlpha(f"sigma 不能超过 alpha: sigma={self.sigma}, alpha={self.alpha}")

    def degree_limit(self, bound: int) -> int:
        """deg_J(v) 的保证上界"""
        extra = max(self.beta - 1, 0) if self.sigma == 0 else self.beta
        return self.alpha * bound + extra


def preset_params(kind: ParamsPreset, alpha: int, gamma: int) -> RoundingParams:
    kind = ParamsPreset(kind)
    if kind == ParamsPreset.DIRECTED_OUT:
        if alpha < 2:
            raise BadAlpha(f"directed-out 需要 alpha >= 2，当前 {alpha}")
        return RoundingParams(alpha=alpha, beta=ceil(Fraction(2 * gamma, alpha - 1)) + 1, sigma=alpha)
    if kind == ParamsPreset.ELEMENT_COST:
        if alpha < 4:
            raise BadAlpha(f"element-cost 需要 alpha >= 4，当前 {alpha}")
        return RoundingParams(alpha=alpha, beta=ceil(Fraction(4 * (gamma + 2), alpha - 2)) + 5, sigma=0)
    if alpha != 2:
        raise BadAlpha(f"element-degree-only 固定 alpha = 2，当前 {alpha}")
    # 1.5γ²+7.5γ+16 = (3γ²+15γ+32)/2，γ² 与 γ 同奇偶，分子恒为偶数
    beta = (3 * gamma * gamma + 15 * gamma + 32) // 2
    return RoundingParams(alpha=2, beta=beta, sigma=0, move_unbounded_edges=True)


@dataclass
class IterationRecord:
    index: int
    objective: Fraction
    action: RoundingAction
    targets: Tuple[int, ...]
    edges_left: int
    bounded_left: int
    chosen: int
    reused: bool = False
    audits: Dict[str, bool] = field(default_factory=dict)

    def line(self) -> str:
        audit = ",".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in sorted(self.audits.items()))
        return (
            f"iter {self.index} obj {self.objective} action {self.action.value} "
            f"on {','.join(map(str, self.targets))} |E|={self.edges_left} |B|={self.bounded_left} "
            f"|J|={self.chosen}{' reused' if self.reused else ''}{' audit ' + audit if audit else ''}"
        )


@dataclass
class RoundingTrace:
    records: List[IterationRecord] = field(default_factory=list)
    initial_objective: Optional[Fraction] = None
    initial_fractional: int = 0
    charged: Fraction = Fraction(0)  # 高边固定时累计的 α·x(e)·c(e)
    flags: List[str] = field(default_factory=list)
    lp_rounds: int = 0
    cuts_added: int = 0
    vertices: List[Dict[int, Fraction]] = field(default_factory=list)

    def append(self, record: IterationRecord) -> None:
        self.records.append(record)

    def action_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for record in self.records:
            counts[record.action.value] = counts.get(record.action.value, 0) + 1
        return counts

    def audit_failures(self) -> List[str]:
        return [
            f"iter {r.index}: {name}"
            for r in self.records
            for name, ok in sorted(r.audits.items())
            if not ok
        ]

    def summary_lines(self) -> List[str]:
        counts = self.action_counts()
        return [
            f"iterations {len(self.records)}",
            "actions " + " ".join(f"{k}={counts[k]}" for k in sorted(counts)),
            f"lp_rounds {self.lp_rounds} cuts {self.cuts_added}",
        ]

    def full_lines(self) -> List[str]:
        return self.summary_lines() + [record.line() for record in self.records]


@dataclass(frozen=True)
class ProgressAction:
    action: RoundingAction
    targets: Tuple[int, ...]


Auditor = Callable[[Instance, ResidualFunction, LPResult, RoundingParams], Dict[str, bool]]


def _degree(instance: Instance, edges: Iterable[int], v: int, incoming: bool) -> int:
    return instance.in_degree(edges, v) if incoming else instance.degree(edges, v)


def progress_check(
    result: LPResult,
    edges: Iterable[int],
    bounded: Iterable[int],
    params: RoundingParams,
    instance: Instance,
    chosen: Iterable[int],
    in_bounded: Iterable[int] = (),
) -> Union[ProgressAction, Stuck]:
    """按 零边 → 高边 → 无界边 → 度约束 的优先级给出本轮动作，没有可行动作时返回 Stuck"""
    edges = sorted(edges)
    chosen = list(chosen)
    x = result.x
    zeros = [e for e in edges if x[e] == 0]
    if zeros:
        return ProgressAction(RoundingAction.DROP_ZERO, (zeros[0],))

    threshold = Fraction(1, params.alpha)
    high = sorted((e for e in edges if x[e] >= threshold), key=lambda e: (-x[e], e))
    if high:
        return ProgressAction(RoundingAction.FIX_HIGH, tuple(high) if params.fast else (high[0],))

    bounded = sorted(bounded)
    in_bounded = sorted(in_bounded)
    if params.move_unbounded_edges:
        bounded_set = set(bounded)
        for e in edges:
            edge = instance.edges[e]
            ends = (edge.tail,) if instance.directed else (edge.tail, edge.head)
            if not bounded_set.intersection(ends):
                return ProgressAction(RoundingAction.MOVE_UNBOUNDED, (e,))

    for incoming, nodes, action in (
        (False, bounded, RoundingAction.DROP_BOUND),
        (True, in_bounded, RoundingAction.DROP_IN_BOUND),
    ):
        for v in nodes:
            limit = params.sigma * residual_bound(instance, chosen, params.alpha, v, incoming) + params.beta
            if _degree(instance, edges, v, incoming) <= limit:
                return ProgressAction(action, (v,))

    return Stuck(
        "顶点解上没有可执行的动作",
        detail={
            "x": {e: str(x[e]) for e in edges},
            "bounded": bounded,
            "in_bounded": in_bounded,
            "chosen": sorted(chosen),
            "params": params,
        },
    )


def run(
    instance: Instance,
    function: ConnectivityFunction,
    params: RoundingParams,
    bounded: Optional[Iterable[int]] = None,
    in_bounded: Optional[Iterable[int]] = None,
    auditor: Optional[Auditor] = None,
    keep_vertices: bool = False,
) -> Tuple[FrozenSet[int], RoundingTrace]:
    """迭代舍入：反复求顶点解，删零边、固定高边、撤销度约束，直到 E 为空"""
    base = function.base
    chosen: Set[int] = set(function.chosen)
    edges: Set[int] = set(instance.edge_ids) - chosen
    bounded_set: Set[int] = set(instance.bounds if bounded is None else bounded)
    in_bounded_set: Set[int] = set(instance.in_bounds if in_bounded is None else in_bounded)

    trace = RoundingTrace()
    if not base.has_theorem or in_bounded_set:
        trace.flags.append("no-theorem")
    if params.fast:
        trace.flags.append("fast")
    if params.move_unbounded_edges:
        trace.flags.append("degree-only")

    run_logger = logger.bind(component="rounding")
    run_logger.info(
        f"开始迭代舍入: {base.describe()}, |E|={len(edges)}, |B|={len(bounded_set)}, "
        f"alpha={params.alpha}, beta={params.beta}, sigma={params.sigma}"
    )

    pool: Optional[ConstraintPool] = None
    result: Optional[LPResult] = None
    reuse = False
    index = 0
    while edges:
        index += 1
        residual = ResidualFunction(base, instance, chosen)
        audits: Dict[str, bool] = {}
        reused = reuse and result is not None
        if reused:
            result = LPResult(
                x={e: result.x[e] for e in edges},
                objective=result.objective,
                rows=[],
                edges=tuple(sorted(edges)),
            )
        else:
            if pool is None:
                pool = ConstraintPool(instance, residual, params.alpha, edges, bounded_set, in_bounded_set)
            result = cutting_plane(
                instance, residual, alpha=params.alpha, edges=edges,
                bounded=bounded_set, in_bounded=in_bounded_set, pool=pool,
            )
            trace.lp_rounds += result.rounds
            trace.cuts_added += result.cuts_added
            if trace.initial_objective is None:
                trace.initial_objective = result.objective
                trace.initial_fractional = sum(1 for v in result.x.values() if 0 < v < 1)
            if keep_vertices:
                trace.vertices.append(dict(result.x))
            if auditor is not None:
                audits = auditor(instance, residual, result, params)

        step = progress_check(result, edges, bounded_set, params, instance, chosen, in_bounded_set)
        if isinstance(step, Stuck):
            run_logger.error(f"迭代舍入卡住: {step.message}, 状态={step.detail}")
            raise step

        if step.action == RoundingAction.DROP_ZERO:
            edges.difference_update(step.targets)
            reuse = True
        elif step.action in (RoundingAction.FIX_HIGH, RoundingAction.MOVE_UNBOUNDED):
            for e in step.targets:
                edges.discard(e)
                chosen.add(e)
                if step.action == RoundingAction.FIX_HIGH:
                    trace.charged += params.alpha * result.x[e] * instance.edges[e].cost
            reuse = False
        elif step.action == RoundingAction.DROP_BOUND:
            bounded_set.difference_update(step.targets)
            reuse = False
        else:
            in_bounded_set.difference_update(step.targets)
            reuse = False

        record = IterationRecord(
            index=index,
            objective=result.objective,
            action=step.action,
            targets=step.targets,
            edges_left=len(edges),
            bounded_left=len(bounded_set),
            chosen=len(chosen),
            reused=reused,
            audits=audits,
        )
        trace.append(record)
        run_logger.debug(record.line())

    run_logger.info(
        f"迭代舍入完成: |J|={len(chosen)}, 费用={instance.cost_of(chosen)}, 迭代 {index} 轮"
    )
    return frozenset(chosen), trace


def prune_inclusion_minimal(
    instance: Instance,
    edge_ids: Iterable[int],
    function: ConnectivityFunction,
    keep: Iterable[int] = (),
) -> FrozenSet[int]:
    """按费用从高到低贪心删边，保持 f-连通，得到包含极小的边集"""
    current = set(edge_ids)
    fixed = set(keep)
    order = sorted(current - fixed, key=lambda e: (-instance.edges[e].cost, -e))
    for e in order:
        current.discard(e)
        if not is_f_connected(instance, current, function):
            current.add(e)
    return frozenset(current)


@dataclass
class OutconnResult:
    """无向 k-出连通：双向化后有向求解，再取无向支撑"""

    edges: FrozenSet[int]
    arcs: FrozenSet[int]
    directed_instance: Instance
    params: RoundingParams
    trace: RoundingTrace
    lp_objective: Fraction
    degree_limits: Dict[int, int]


def bidirect(instance: Instance, root: int, k: int, bounds: Optional[Dict[int, int]] = None) -> Instance:
    """无向边 i 拆成弧 2i 与 2i+1，费用相同"""
    arcs = []
    for edge in instance.edges:
        arcs.append((edge.tail, edge.head, edge.cost))
        arcs.append((edge.head, edge.tail, edge.cost))
    return Instance(
        directed=True,
        node_count=instance.node_count,
        edges=tuple(arcs),
        bounds=dict(instance.bounds if bounds is None else bounds),
        requirement=OutConnRequirement(root=root, k=k),
    )


def undirected_outconnected(
    instance: Instance,
    alpha: int,
    root: Optional[int] = None,
    k: Optional[int] = None,
    bounds: Optional[Dict[int, int]] = None,
    auditor: Optional[Auditor] = None,
    params: Optional[RoundingParams] = None,
) -> OutconnResult:
    if root is None or k is None:
        requirement = instance.requirement
        if not isinstance(requirement, OutConnRequirement):
            raise InputError("未给出根与 k 时实例必须带 outconn 需求")
        root = requirement.root if root is None else root
        k = requirement.k if k is None else k

    directed = bidirect(instance, root, k, bounds)
    function = OutConnectivityFunction(directed.node_count, root, k, directed=True)
    params = params or preset_params(ParamsPreset.DIRECTED_OUT, alpha, function.gamma())
    arcs, trace = run(directed, function, params, auditor=auditor)
    arcs = prune_inclusion_minimal(directed, arcs, function)
    support = frozenset(a // 2 for a in arcs)
    limits = {v: params.degree_limit(b) + k for v, b in directed.bounds.items()}
    logger.info(
        f"无向 k-出连通完成: 弧数={len(arcs)}, 边数={len(support)}, 费用={instance.cost_of(support)}"
    )
    return OutconnResult(
        edges=support,
        arcs=arcs,
        directed_instance=directed,
        params=params,
        trace=trace,
        lp_objective=trace.initial_objective or Fraction(0),
        degree_limits=limits,
    )
