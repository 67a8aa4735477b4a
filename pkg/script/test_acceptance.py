#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
大批量随机实例上的保证检查：费用与度数上界、无度约束时的整数性与半整数性、
紧双集合族抽取、补全集与度数削减、LP 与分支定界最优值的比较

较慢，可用 pytest -m "not acceptance" 跳过
"""

import os
import random
import sys
from fractions import Fraction

import pytest

# 添加项目根目录到PYTHONPATH
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.core.exceptions import TooLarge
from app.core.graph import RequirementKind
from app.functions.requirements import function_for, gamma_of
from app.services.generator_service import generate
from app.services.kconn_service import (
    db_k_connected,
    degree_reduce,
    degree_threshold,
    forest_certificate,
    with_extra,
)
from app.services.laminar_service import laminar_auditor
from app.services.rounding_service import ParamsPreset, preset_params, run
from app.services.verify_service import ilp_opt, is_f_connected, is_k_connected

pytestmark = pytest.mark.acceptance


def _ilp_cost(instance):
    try:
        return ilp_opt(instance).cost
    except TooLarge:
        return None


@pytest.mark.parametrize("seed", range(200))
def test_directed_outconn_guarantees(seed):
    rng = random.Random(seed)
    k = rng.choice([1, 2, 3])
    alpha = rng.choice([2, 3])
    n = rng.randint(k + 2, 6)
    instance = generate(seed=seed, n=n, density=0.3, kind=RequirementKind.OUTCONN, k=k, slack=rng.choice([0, 1]))
    function = function_for(instance)
    params = preset_params(ParamsPreset.DIRECTED_OUT, alpha, gamma_of(function))
    chosen, trace = run(instance, function, params)

    tau = trace.initial_objective
    assert is_f_connected(instance, chosen, function)
    assert instance.cost_of(chosen) <= alpha * tau
    assert params.beta == -(-2 * (k - 1) // (alpha - 1)) + 1
    for v, b in instance.bounds.items():
        assert instance.degree(chosen, v) <= alpha * b + params.beta
    ilp = _ilp_cost(instance)
    if ilp is not None:
        assert tau <= ilp


@pytest.mark.parametrize("seed", range(200))
def test_element_guarantees(seed):
    rng = random.Random(1000 + seed)
    k = rng.choice([1, 2, 3])
    n = rng.randint(k + 2, 6)
    instance = generate(seed=1000 + seed, n=n, density=0.4, kind=RequirementKind.ELEMENT, k=k, slack=rng.choice([0, 1]))
    function = function_for(instance)
    gamma = gamma_of(function)
    r = instance.requirement.max_requirement()

    params = preset_params(ParamsPreset.ELEMENT_COST, 4, gamma)
    chosen, trace = run(instance, function, params)
    assert is_f_connected(instance, chosen, function)
    assert instance.cost_of(chosen) <= 4 * trace.initial_objective
    for v, b in instance.bounds.items():
        assert instance.degree(chosen, v) <= 4 * b + -(-4 * (r + 1) // 2) + 4

    degree_only = preset_params(ParamsPreset.ELEMENT_DEGREE_ONLY, 2, gamma)
    chosen, _ = run(instance, function, degree_only)
    assert is_f_connected(instance, chosen, function)
    for v, b in instance.bounds.items():
        assert instance.degree(chosen, v) <= 2 * b + Fraction(3, 2) * r * r + Fraction(9, 2) * r + 9


@pytest.mark.parametrize("seed", range(100))
def test_unbounded_directed_vertices_are_integral(seed):
    rng = random.Random(2000 + seed)
    k = rng.choice([1, 2])
    instance = generate(
        seed=2000 + seed, n=rng.randint(k + 2, 6), density=0.3, kind=RequirementKind.OUTCONN, k=k, slack=None
    )
    function = function_for(instance)
    chosen, trace = run(instance, function, preset_params(ParamsPreset.DIRECTED_OUT, 2, gamma_of(function)))
    assert trace.initial_fractional == 0
    ilp = _ilp_cost(instance)
    if ilp is not None:
        assert instance.cost_of(chosen) == ilp


@pytest.mark.parametrize("seed", range(100))
def test_unbounded_element_vertices_are_half_integral(seed):
    rng = random.Random(3000 + seed)
    k = rng.choice([1, 2])
    instance = generate(
        seed=3000 + seed, n=rng.randint(k + 2, 6), density=0.4, kind=RequirementKind.ELEMENT, k=k, slack=None
    )
    function = function_for(instance)
    chosen, trace = run(
        instance, function, preset_params(ParamsPreset.ELEMENT_COST, 4, gamma_of(function)), keep_vertices=True
    )
    for x in trace.vertices:
        if x:
            assert max(x.values()) >= Fraction(1, 2)
    tau = trace.initial_objective
    assert instance.cost_of(chosen) <= 2 * tau
    ilp = _ilp_cost(instance)
    if ilp is not None:
        assert tau <= ilp <= instance.cost_of(chosen)


def test_tight_family_extraction_on_many_vertices():
    extracted = 0
    seed = 0
    while extracted < 100 and seed < 1000:
        rng = random.Random(4000 + seed)
        if seed % 2:
            instance = generate(seed=4000 + seed, n=rng.randint(4, 6), density=0.5, kind=RequirementKind.ELEMENT, k=2, slack=0)
            params = preset_params(ParamsPreset.ELEMENT_COST, 4, gamma_of(function_for(instance)))
        else:
            instance = generate(seed=4000 + seed, n=rng.randint(4, 6), density=0.4, kind=RequirementKind.OUTCONN, k=2, slack=0)
            params = preset_params(ParamsPreset.DIRECTED_OUT, 2, gamma_of(function_for(instance)))
        _, trace = run(instance, function_for(instance), params, auditor=laminar_auditor)
        for record in trace.records:
            if record.audits.get("extract"):
                assert all(record.audits.values()), record.line()
                extracted += 1
        seed += 1
    assert extracted >= 100


@pytest.mark.parametrize("seed", range(100))
def test_kconn_completion_and_reduction(seed):
    rng = random.Random(5000 + seed)
    directed = seed % 4 == 0
    k = rng.choice([1, 2]) if directed else rng.choice([2, 3])
    n = rng.randint(k + 2, 5 if directed else 6)
    instance = generate(seed=5000 + seed, n=n, density=0.4, kind=RequirementKind.KCONN, k=k, slack=2, directed=directed)
    result = db_k_connected(instance, 2)

    completion = result.completion.edges
    assert forest_certificate(completion, k, directed)
    assert len(completion) <= (2 * k - 1 if directed else k - 1)
    assert result.max_f_degree <= degree_threshold(k, directed)
    assert is_k_connected(instance, result.edges, k)
    assert instance.cost_of(result.edges) <= result.cost_factor * result.lower_bound


@pytest.mark.parametrize("seed", range(100))
def test_degree_reduction_from_star_completions(seed):
    # J 保留节点 0 的 k-1 条边，F 把 0 连到其余所有不相邻的点，J ∪ F 仍包含原图
    rng = random.Random(6000 + seed)
    k = 2 + seed % 3
    n = rng.randint(k + 3, 7)
    instance = generate(seed=6000 + seed, n=n, density=0.5, kind=RequirementKind.KCONN, k=k, slack=None)
    at_zero = [i for i, e in enumerate(instance.edges) if 0 in e.ends()]
    kept = set(rng.sample(at_zero, k - 1))
    ids = sorted(i for i in instance.edge_ids if i not in at_zero or i in kept)
    neighbours = {sum(instance.edges[i].ends()) for i in kept}
    star = [(0, v) for v in range(1, n) if v not in neighbours]

    result = degree_reduce(instance, ids, star, k)
    assert result.max_degree <= degree_threshold(k, directed=False)
    assert len(result.edges) <= len(star)
    extended, extra_ids = with_extra(instance, ids, result.edges)
    assert is_k_connected(extended, extra_ids, k)


def main():
    """运行所有测试"""
    return pytest.main([__file__])


if __name__ == "__main__":
    sys.exit(main())
