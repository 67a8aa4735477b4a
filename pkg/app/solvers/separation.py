from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from loguru import logger

from app.core.biset import Biset, enumerate_bisets
from app.core.exceptions import TooLarge
from app.core.graph import Instance, delta
from app.functions.base import ConnectivityFunction
from app.functions.requirements import ResidualFunction
from app.solvers.flow import build_split_network, cut_to_biset, max_flow
from config.config import settings

FractionalSolution = Dict[int, Fraction]


@dataclass(frozen=True)
class ViolatedConstraint:
    """x(δ_E(Ŝ)) ≥ f_J(Ŝ) 的一条违反约束"""

    biset: Biset
    required: int
    actual: Fraction
    pair: Tuple[int, int] = (-1, -1)

    @property
    def slack(self) -> Fraction:
        return self.actual - self.required

    def sort_key(self, pair_index: int = 0):
        return (self.slack, pair_index, self.biset.inner)


def _as_residual(
    instance: Instance, function: ConnectivityFunction, chosen: Optional[Iterable[int]]
) -> ResidualFunction:
    if chosen is None and isinstance(function, ResidualFunction):
        return function
    merged = set(function.chosen) | set(chosen or ())
    return ResidualFunction(function.base, instance, merged)


def _violation_at(
    instance: Instance,
    x: Mapping[int, Fraction],
    residual: ResidualFunction,
    biset: Biset,
    pair: Tuple[int, int],
) -> Optional[ViolatedConstraint]:
    required = residual.evaluate(biset)
    if required <= 0:
        return None
    actual = sum((x[i] for i in delta(instance, x.keys(), biset)), Fraction(0))
    if actual >= required:
        return None
    return ViolatedConstraint(biset=biset, required=required, actual=actual, pair=pair)


def _pair_violations(
    instance: Instance, x: Mapping[int, Fraction], residual: ResidualFunction
) -> List[Tuple[int, ViolatedConstraint]]:
    pairs = residual.separation_pairs()
    capacities: Dict[int, Fraction] = {i: Fraction(value) for i, value in x.items()}
    for edge_id in residual.chosen:
        capacities[edge_id] = Fraction(1)

    found = []
    for index, pair in enumerate(pairs):
        network = build_split_network(instance, capacities, pair.source, pair.sink, pair.unsplit)
        cut = max_flow(network)
        if cut.value >= pair.threshold:
            continue
        biset = cut_to_biset(network, cut)
        violation = _violation_at(instance, x, residual, biset, (pair.source, pair.sink))
        if violation is None:
            # 割值低于阈值时 f_J(Ŝ) > x(δ_E(Ŝ)) 必然成立
            logger.warning(f"最小割 {biset} 未给出违反约束, 割值={cut.value}, 点对={pair}")
            continue
        found.append((index, violation))
    return found


def separate_exhaustive(
    instance: Instance,
    x: Mapping[int, Fraction],
    function: ConnectivityFunction,
    chosen: Optional[Iterable[int]] = None,
) -> Optional[ViolatedConstraint]:
    """穷举全部 3^n 个双集合，用于没有点对流的函数和正确性对照"""
    if instance.node_count > settings.EXHAUSTIVE_MAX_NODES:
        raise TooLarge(f"穷举分离只支持 |V| <= {settings.EXHAUSTIVE_MAX_NODES}")
    residual = _as_residual(instance, function, chosen)
    best = None
    for biset in enumerate_bisets(instance.node_count):
        violation = _violation_at(instance, x, residual, biset, (-1, -1))
        if violation is not None and (best is None or violation.sort_key() < best.sort_key()):
            best = violation
    return best


def separate_all(
    instance: Instance,
    x: Mapping[int, Fraction],
    function: ConnectivityFunction,
    chosen: Optional[Iterable[int]] = None,
) -> List[ViolatedConstraint]:
    """每个点对最多一条违反约束，按 (slack, 点对序号, 内部掩码) 排序并去重"""
    residual = _as_residual(instance, function, chosen)
    if residual.separation_pairs() is None:
        single = separate_exhaustive(instance, x, residual)
        return [single] if single is not None else []

    found = _pair_violations(instance, x, residual)
    found.sort(key=lambda item: item[1].sort_key(item[0]))
    result: List[ViolatedConstraint] = []
    seen = set()
    for _, violation in found:
        if violation.biset in seen:
            continue
        seen.add(violation.biset)
        result.append(violation)
    return result


def separate(
    instance: Instance,
    x: Mapping[int, Fraction],
    function: ConnectivityFunction,
    chosen: Optional[Iterable[int]] = None,
) -> Optional[ViolatedConstraint]:
    """返回违反最严重的双集合约束，不存在时返回 None

    Args:
        instance: 问题实例
        x: 当前边集 E 上的分数解，0 <= x <= 1
        function: 需求函数 f，或已带 J 的剩余函数
        chosen: 额外的已选边集 J，在网络中容量为 1
    """
    violations = separate_all(instance, x, function, chosen)
    return violations[0] if violations else None
