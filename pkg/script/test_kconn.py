#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
测试度约束 k-连通流程：R 的选择、外部出连通、极小补全、度数削减与最小费用增广
"""

import itertools
import os
import random
import sys

import pytest

# 添加项目根目录到PYTHONPATH
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.core.exceptions import BadR, InputError, InsufficientConnectivity, NotCompletable, NotSimple
from app.core.graph import Instance, KConnRequirement, OutConnRequirement, RequirementKind
from app.functions.requirements import OutConnectivityFunction
from app.services.generator_service import generate
from app.services.kconn_service import (
    db_k_connected,
    deficient_bisets_meet_r,
    degree_reduce,
    degree_threshold,
    external_outconnectivity,
    forest_certificate,
    min_cost_augment,
    minimal_completion,
    select_r,
    violates_threshold,
    with_extra,
)
from app.services.verify_service import ilp_opt, is_f_connected, is_k_connected, node_connectivity


def undirected(n, edges, k=2, bounds=None):
    return Instance(
        directed=False,
        node_count=n,
        edges=tuple(edges),
        bounds=bounds or {},
        requirement=KConnRequirement(k=k),
    )


def cycle4(k=2):
    return undirected(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1), (0, 3, 1)], k=k)


def complete(n, directed, k, bound=None):
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v and (directed or u < v)]
    return Instance(
        directed=directed,
        node_count=n,
        edges=tuple((u, v, 1) for u, v in pairs),
        bounds={v: bound for v in range(n)} if bound else {},
        requirement=KConnRequirement(k=k),
    )


def test_select_r():
    instance = undirected(4, [(0, 1, 1)], bounds={0: 1, 1: 3, 2: 3})
    assert select_r(instance, 2) == (1, 3)
    assert select_r(instance, 3) == (1, 2, 3)
    with pytest.raises(BadR):
        select_r(instance, 0)
    with pytest.raises(BadR):
        select_r(instance, 5)


def test_thresholds():
    assert degree_threshold(4, directed=False) == 4
    assert violates_threshold(5, 4, directed=False)
    assert not violates_threshold(4, 4, directed=False)
    assert degree_threshold(1, directed=False) == 3
    assert degree_threshold(10, directed=False) == 6
    assert degree_threshold(4, directed=True) == 4
    assert not violates_threshold(3, 100, directed=True)


def test_forest_certificate():
    assert forest_certificate([(0, 1), (1, 2)], 3, directed=False)
    assert not forest_certificate([(0, 1), (1, 2)], 2, directed=False)
    assert not forest_certificate([(0, 1), (1, 2), (0, 2)], 4, directed=False)
    assert forest_certificate([], 1, directed=False)
    assert not forest_certificate([(0, 1), (1, 0)], 1, directed=True)
    assert forest_certificate([(0, 1), (1, 0)], 2, directed=True)


def test_external_spanning_for_k1():
    instance = undirected(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1), (0, 2, 3), (1, 3, 3)], k=1)
    result = external_outconnectivity(instance, 1, (0,), 2)
    assert is_k_connected(instance, result.edges, 1)
    assert result.minus == frozenset()


def test_external_on_cycle():
    # R 取不相邻的两点时需要整个圈
    instance = cycle4()
    result = external_outconnectivity(instance, 2, (0, 2), 2)
    assert result.edges == frozenset({0, 1, 2, 3})
    ok, offender = deficient_bisets_meet_r(instance, result.edges, 2, (0, 2))
    assert ok and offender is None


def test_external_with_adjacent_r_is_outconnected():
    # R 相邻时路 0-3-2-1 已足够，结果只需在加根后的图上 2-出连通
    instance = cycle4()
    result = external_outconnectivity(instance, 2, (0, 1), 2)
    augmented = result.root_instance
    ids = set(result.edges) | {4, 5}
    assert is_f_connected(augmented, ids, OutConnectivityFunction(5, 4, 2, directed=False))
    assert instance.cost_of(result.edges) <= result.params.alpha * result.lp_objective
    assert instance.cost_of(result.edges) >= ilp_opt(augmented).cost


def test_external_rejects_bad_r():
    with pytest.raises(BadR):
        external_outconnectivity(cycle4(), 2, (0,), 2)
    with pytest.raises(BadR):
        external_outconnectivity(cycle4(), 2, (0, 7), 2)


@pytest.mark.parametrize("seed", range(4))
def test_external_deficient_bisets_meet_r(seed):
    instance = generate(seed=seed, n=5, density=0.4, kind=RequirementKind.KCONN, k=2, slack=1)
    r_nodes = select_r(instance, 2)
    result = external_outconnectivity(instance, 2, r_nodes, 2)
    ok, offender = deficient_bisets_meet_r(instance, result.edges, 2, r_nodes)
    assert ok, offender


def test_completion_empty_when_connected():
    completion = minimal_completion(cycle4(), [0, 1, 2, 3], (0, 1), 2)
    assert completion.edges == ()
    assert completion.certificate and completion.max_degree == 0


def test_completion_closes_cycle():
    instance = undirected(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1)])
    completion = minimal_completion(instance, [0, 1, 2], (0, 3), 2)
    assert completion.edges == ((0, 3),)
    assert completion.degree(0) == 1 and completion.max_degree == 1


def test_completion_impossible():
    instance = undirected(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1)])
    with pytest.raises(NotCompletable):
        minimal_completion(instance, [0, 1, 2], (0, 1), 2)


def test_degree_reduce_keeps_small_completion():
    instance = undirected(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1)])
    result = degree_reduce(instance, [0, 1, 2], [(0, 3)], 2)
    assert result.edges == ((0, 3),)
    assert result.swaps == 0 and result.reprunes == 0 and result.max_degree == 1


def test_degree_reduce_swaps_high_degree_node():
    # 星形 F 的每条边都关键，节点 0 的 F-度 4 超过 k=2 的阈值 3
    cycle = [(5, 6, 1), (6, 7, 1), (7, 8, 1), (5, 8, 1)]
    pendants = [(1, 5, 1), (2, 6, 1), (3, 7, 1), (4, 8, 1), (0, 5, 1)]
    instance = undirected(9, cycle + pendants)
    ids = list(range(len(instance.edges)))
    star = [(0, 1), (0, 2), (0, 3), (0, 4)]
    assert violates_threshold(4, 2, directed=False)

    result = degree_reduce(instance, ids, star, 2)
    assert result.swaps >= 1 and result.reprunes == 0
    assert len(result.edges) == len(star)
    assert result.max_degree <= degree_threshold(2, directed=False)
    extended, extra_ids = with_extra(instance, ids, result.edges)
    assert is_k_connected(extended, extra_ids, 2)


def test_degree_reduce_reprunes_redundant_edges():
    # 路 1-5-2-6-3-7-4 加星形 F 时 (0,2) 与 (0,3) 不关键，F' 比 F 小
    path = [(1, 5, 1), (2, 5, 1), (2, 6, 1), (3, 6, 1), (3, 7, 1), (4, 7, 1)]
    instance = undirected(8, path)
    ids = list(range(len(instance.edges)))
    star = [(0, 1), (0, 2), (0, 3), (0, 4)]

    result = degree_reduce(instance, ids, star, 2)
    assert result.edges == ((0, 1), (0, 4))
    assert result.reprunes == 1 and result.swaps == 0
    assert len(result.edges) < len(star)
    extended, extra_ids = with_extra(instance, ids, result.edges)
    assert is_k_connected(extended, extra_ids, 2)


def test_min_cost_augment_examples():
    instance = undirected(3, [(0, 1, 1), (1, 2, 1), (0, 2, 5)])
    assert min_cost_augment(instance, [0, 1], 0, 2, 2) == frozenset({2})
    assert min_cost_augment(instance, [0, 1, 2], 0, 2, 2) == frozenset()
    with pytest.raises(InsufficientConnectivity):
        min_cost_augment(instance, [0, 1], 0, 2, 3)


def test_min_cost_augment_matches_subset_oracle():
    rng = random.Random(43)
    checked = 0
    for _ in range(30):
        instance = generate(seed=rng.randint(0, 10 ** 6), n=5, density=0.5, kind=RequirementKind.KCONN, k=2, slack=None)
        m = len(instance.edges)
        chosen = set(rng.sample(range(m), m // 3))
        pool = sorted(set(range(m)) - chosen)
        u, t = rng.sample(range(5), 2)
        best = None
        for size in range(len(pool) + 1):
            for subset in itertools.combinations(pool, size):
                if node_connectivity(instance, chosen | set(subset), u, t) >= 2:
                    cost = instance.cost_of(subset)
                    best = cost if best is None or cost < best else best
        try:
            found = min_cost_augment(instance, chosen, u, t, 2)
        except InsufficientConnectivity:
            assert best is None
            continue
        assert node_connectivity(instance, chosen | found, u, t) >= 2
        assert instance.cost_of(found) == best
        checked += 1
    assert checked > 0


def test_pipeline_on_k4():
    instance = complete(4, directed=False, k=2, bound=3)
    result = db_k_connected(instance, 2)
    assert result.r_nodes == (0, 1)
    assert is_k_connected(instance, result.edges, 2)
    assert instance.cost_of(result.edges) <= result.cost_factor * result.lower_bound
    assert result.lower_bound <= ilp_opt(instance).cost
    assert len(result.completion.edges) <= 1
    for v, limit in result.degree_limits.items():
        assert instance.degree(result.edges, v) <= limit
    assert result.r_audit


def test_pipeline_k1_is_spanning():
    instance = undirected(4, [(0, 1, 1), (1, 2, 1), (2, 3, 1), (0, 3, 4)], k=1)
    result = db_k_connected(instance, 2)
    assert is_k_connected(instance, result.edges, 1)
    assert result.completion.edges == ()
    assert result.augmentations == {}


def test_pipeline_on_directed_triangle():
    instance = complete(3, directed=True, k=1)
    result = db_k_connected(instance, 2)
    assert is_k_connected(instance, result.edges, 1)
    assert len(result.completion.edges) <= 1
    assert result.lower_bound >= result.external.minus_cost
    assert instance.cost_of(result.edges) <= result.cost_factor * result.lower_bound


@pytest.mark.parametrize("seed", range(3))
def test_pipeline_random_runs(seed):
    instance = generate(seed=seed, n=5, density=0.4, kind=RequirementKind.KCONN, k=2, slack=2)
    result = db_k_connected(instance, 2)
    assert is_k_connected(instance, result.edges, 2)
    assert len(result.completion.edges) <= 1
    assert result.max_f_degree <= degree_threshold(2, directed=False)
    assert instance.cost_of(result.edges) <= result.cost_factor * result.lower_bound


def test_pipeline_rejects_bad_input():
    outconn = Instance(
        directed=False, node_count=3, edges=((0, 1, 1),), requirement=OutConnRequirement(root=0, k=1)
    )
    with pytest.raises(InputError):
        db_k_connected(outconn, 2)
    multi = undirected(3, [(0, 1, 1), (1, 0, 2), (1, 2, 1)], k=1)
    with pytest.raises(NotSimple):
        db_k_connected(multi, 2)


def main():
    """运行所有测试"""
    return pytest.main([__file__])


if __name__ == "__main__":
    sys.exit(main())
