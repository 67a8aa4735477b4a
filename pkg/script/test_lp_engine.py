#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
测试精确单纯形、约束池、割平面与边分类
"""

import itertools
import os
import random
import sys
from fractions import Fraction

import pytest
from sympy import Matrix

# 添加项目根目录到PYTHONPATH
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.core.exceptions import BadAlpha, Infeasible
from app.core.graph import ElementRequirement, Instance, OutConnRequirement, RequirementKind
from app.functions.requirements import (
    ElementConnectivityFunction,
    OutConnectivityFunction,
    ResidualFunction,
    function_for,
)
from app.services.generator_service import generate
from app.services.verify_service import ilp_opt
from app.solvers.lp_engine import ConstraintPool, LPResult, classify, cutting_plane, rank_of
from app.solvers.simplex import RowSense, row_from_dict, solve_lp


def box_rows(n):
    return [row_from_dict({j: 1}, RowSense.LE, 1) for j in range(n)]


def test_single_variable():
    result = solve_lp([Fraction(1)], [row_from_dict({0: 1}, RowSense.GE, Fraction(1, 2))] + box_rows(1))
    assert result.x == [Fraction(1, 2)]
    assert result.objective == Fraction(1, 2)


def test_optimum_is_a_vertex():
    rows = [row_from_dict({0: 1, 1: 1}, RowSense.GE, 1)] + box_rows(2)
    result = solve_lp([Fraction(1), Fraction(1)], rows)
    assert result.objective == 1
    assert sorted(result.x) == [0, 1]


def test_infeasible_lp():
    with pytest.raises(Infeasible):
        solve_lp([Fraction(1)], [row_from_dict({0: 1}, RowSense.GE, 2)] + box_rows(1))


def _enumerate_vertices(cost, rows, n):
    """对每组 n 条约束取等号求解，保留可行点中的最优目标值"""
    equalities = [(dict(row.coeffs), row.rhs) for row in rows]
    equalities += [({j: Fraction(1)}, Fraction(0)) for j in range(n)]
    best = None
    for group in itertools.combinations(equalities, n):
        a = Matrix([[coeffs.get(j, 0) for j in range(n)] for coeffs, _ in group])
        if a.det() == 0:
            continue
        solution = a.LUsolve(Matrix([rhs for _, rhs in group]))
        x = [Fraction(int(v.p), int(v.q)) for v in solution]
        if any(v < 0 for v in x) or not all(row.satisfied(x) for row in rows):
            continue
        value = sum(c * v for c, v in zip(cost, x))
        if best is None or value < best:
            best = value
    return best


def test_random_lps_match_vertex_enumeration():
    rng = random.Random(41)
    for _ in range(25):
        n = rng.randint(2, 3)
        cost = [Fraction(rng.randint(0, 6), rng.randint(1, 3)) for _ in range(n)]
        rows = box_rows(n)
        for _ in range(rng.randint(1, 4)):
            coeffs = {j: rng.randint(0, 2) for j in range(n)}
            if not any(coeffs.values()):
                coeffs[0] = 1
            # x = (1,...,1) 总是可行
            rhs = Fraction(rng.randint(0, sum(coeffs.values()) * 2), 2)
            rows.append(row_from_dict(coeffs, RowSense.GE, rhs))
        result = solve_lp(cost, rows)
        assert all(row.satisfied(result.x) for row in rows)
        assert result.objective == _enumerate_vertices(cost, rows, n)


def _triangle():
    arcs = [(u, v, 1) for u in range(3) for v in range(3) if u != v]
    return Instance(directed=True, node_count=3, edges=tuple(arcs), requirement=OutConnRequirement(root=0, k=1))


def test_pool_rejects_bad_alpha():
    instance = _triangle()
    with pytest.raises(BadAlpha):
        ConstraintPool(instance, OutConnectivityFunction(3, 0, 1), 0, instance.edge_ids)


def test_cutting_plane_on_directed_triangle():
    instance = _triangle()
    result = cutting_plane(instance, OutConnectivityFunction(3, 0, 1))
    assert result.objective == 2
    assert all(v in (0, 1) for v in result.x.values())
    assert result.rounds >= 2 and result.cuts_added >= 1
    assert all(row.satisfied(result.x) for row in result.rows)

    certificate = result.vertex_certificate
    assert len(certificate) == len(result.edges)
    assert rank_of(certificate, result.edges) == len(result.edges)
    assert all(row.is_tight(result.x) for row in certificate)


def test_cutting_plane_infeasible_bounds():
    instance = Instance(
        directed=True,
        node_count=3,
        edges=((0, 1, 1), (0, 2, 1), (1, 2, 1), (2, 1, 1)),
        bounds={0: 1},
        requirement=OutConnRequirement(root=0, k=2),
    )
    with pytest.raises(Infeasible):
        cutting_plane(instance, function_for(instance))


def test_cutting_plane_on_four_cycle():
    instance = Instance(
        directed=False,
        node_count=4,
        edges=((0, 1, 1), (1, 2, 1), (2, 3, 1), (0, 3, 1)),
        requirement=ElementRequirement(k=2, terminals=(0, 2), pairs=((0, 2, 2),)),
    )
    h = ElementConnectivityFunction(4, [0, 2], [(0, 2, 2)])
    result = cutting_plane(instance, h)
    assert result.objective == 4
    assert result.objective == ilp_opt(instance).cost


def test_pool_purges_satisfied_rows():
    instance = _triangle()
    g = OutConnectivityFunction(3, 0, 1)
    result = cutting_plane(instance, g)
    pool = ConstraintPool(instance, g, 1, instance.edge_ids)
    for row in result.tight:
        if row.kind.value == "biset":
            pool.add(row.key)
    before = len(pool)
    assert before > 0
    assert pool.refresh(g, instance.edge_ids) == 0

    # 选入 0->1 与 0->2 之后所有双集合行右端都不再为正
    edges = [i for i, e in enumerate(instance.edges) if e.tail == 0]
    purged = pool.refresh(ResidualFunction(g, instance, edges), instance.edge_ids - set(edges))
    assert purged == before and len(pool) == 0


def test_classify_examples():
    result = LPResult(
        x={0: Fraction(0), 1: Fraction(1, 3), 2: Fraction(1)}, objective=Fraction(0), rows=[], edges=(0, 1, 2)
    )
    parts = classify(result, 2)
    assert parts.zeros == {0} and parts.high == {2} and parts.fractional == {1}

    half = LPResult(x={0: Fraction(1, 2)}, objective=Fraction(0), rows=[], edges=(0,))
    assert classify(half, 2).high == {0}
    third = LPResult(x={0: Fraction(1, 3)}, objective=Fraction(0), rows=[], edges=(0,))
    assert classify(third, 3).high == {0}


@pytest.mark.parametrize("seed", range(6))
def test_directed_outconn_vertex_is_integral(seed):
    instance = generate(seed=seed, n=5, density=0.3, kind=RequirementKind.OUTCONN, k=2, slack=None)
    result = cutting_plane(instance, function_for(instance))
    assert all(v in (0, 1) for v in result.x.values())
    assert result.objective == ilp_opt(instance).cost


@pytest.mark.parametrize("seed", range(6))
def test_undirected_element_vertex_has_half_edge(seed):
    instance = generate(seed=seed, n=5, density=0.3, kind=RequirementKind.ELEMENT, k=2, slack=None)
    result = cutting_plane(instance, function_for(instance))
    assert max(result.x.values()) >= Fraction(1, 2)
    assert len(result.vertex_certificate) == len(result.edges)


def main():
    """运行所有测试"""
    return pytest.main([__file__])


if __name__ == "__main__":
    sys.exit(main())
