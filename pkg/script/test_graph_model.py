#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
测试实例模型、覆盖关系、需求函数与超模性审计
"""

import os
import random
import sys
from fractions import Fraction

import pytest
from pydantic import ValidationError

# 添加项目根目录到PYTHONPATH
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.core.biset import Biset, enumerate_bisets, intersect, subtract, union
from app.core.exceptions import ModeMismatch, NodeNotBounded, TooLarge
from app.core.graph import (
    CoverMode,
    Edge,
    ElementRequirement,
    Instance,
    KConnRequirement,
    OutConnRequirement,
    covers,
    delta,
    residual_bound,
)
from app.functions.base import Supermodularity
from app.functions.requirements import (
    ElementConnectivityFunction,
    KConnectivityFunction,
    OutConnectivityFunction,
    ResidualFunction,
    eval_fk,
    eval_g,
    eval_h,
    eval_residual,
    gamma_of,
    supermodularity_audit,
)


def B(inner, outer):
    return Biset.of(inner, outer)


def random_instance(rng, n, directed, m):
    edges = []
    for _ in range(m):
        u, v = rng.sample(range(n), 2)
        edges.append((u, v, Fraction(rng.randint(1, 9), rng.randint(1, 3))))
    return Instance(
        directed=directed,
        node_count=n,
        edges=tuple(edges),
        requirement=OutConnRequirement(root=0, k=1) if directed else KConnRequirement(k=1),
    )


def test_instance_validation():
    with pytest.raises(ValidationError):
        Instance(directed=True, node_count=3, edges=((0, 0, 1),), requirement=KConnRequirement(k=1))
    with pytest.raises(ValidationError):
        Instance(directed=True, node_count=3, edges=((0, 1, -1),), requirement=KConnRequirement(k=1))
    with pytest.raises(ValidationError):
        Instance(directed=True, node_count=3, bounds={1: 0}, requirement=KConnRequirement(k=1))
    with pytest.raises(ValidationError):
        Instance(directed=True, node_count=3, requirement=OutConnRequirement(root=5, k=1))

    instance = Instance(directed=False, node_count=3, edges=((2, 0, "3/2"),), requirement=KConnRequirement(k=1))
    assert instance.edges[0] == Edge(tail=0, head=2, cost=Fraction(3, 2))


def test_element_requirement_is_symmetric():
    requirement = ElementRequirement(k=2, terminals=(3, 1), pairs=((3, 1, 2), (1, 3, 2)))
    assert requirement.terminals == (1, 3)
    assert requirement.pairs == ((1, 3, 2),)
    assert requirement.requirement(3, 1) == 2
    with pytest.raises(ValidationError):
        ElementRequirement(k=2, terminals=(1, 3), pairs=((1, 3, 2), (3, 1, 1)))


def test_covers_examples():
    target = B([1], [1, 2])
    assert covers(Edge(tail=3, head=1), target, CoverMode.IN, directed=True)
    assert not covers(Edge(tail=2, head=1), target, CoverMode.IN, directed=True)
    assert covers(Edge(tail=1, head=3), target, CoverMode.UNDIRECTED, directed=False)
    assert covers(Edge(tail=1, head=3), target, CoverMode.OUT, directed=True)
    with pytest.raises(ModeMismatch):
        covers(Edge(tail=1, head=3), target, CoverMode.UNDIRECTED, directed=True)
    with pytest.raises(ModeMismatch):
        covers(Edge(tail=1, head=3), target, CoverMode.IN, directed=False)


def test_eval_examples():
    assert eval_g(B([1], [1, 2]), 0, 3) == 2
    assert eval_g(B([1], [0, 1]), 0, 3) == 0
    assert eval_g(B([], []), 0, 3) == 0

    terminals = (1 << 1) | (1 << 4)
    assert eval_h(B([1], [1, 2]), terminals, {(1, 4): 2}) == 1
    assert eval_h(B([1], [1, 4]), terminals, {(1, 4): 2}) == 0
    assert eval_h(B([2], [2, 3]), terminals, {(1, 4): 2}) == 0

    full = list(range(5))
    assert eval_fk(B([1], [1, 2]), 2, 5) == 1
    assert eval_fk(B(full, full), 2, 5) == 0
    assert eval_fk(B([1], full), 2, 5) == 0


def test_residual_examples():
    instance = Instance(
        directed=True,
        node_count=3,
        edges=((0, 1, 1), (2, 1, 1)),
        requirement=OutConnRequirement(root=0, k=2),
    )
    g = OutConnectivityFunction(3, 0, 2)
    target = B([1], [1])
    assert eval_residual(g, instance, [0], target) == 1
    assert eval_residual(g, instance, [], target) == g.evaluate(target)


def test_residual_matches_edge_scan():
    rng = random.Random(3)
    for _ in range(5):
        instance = random_instance(rng, 4, True, 6)
        g = OutConnectivityFunction(4, 0, 2)
        chosen = rng.sample(range(6), 3)
        for biset in enumerate_bisets(4):
            entering = sum(
                1 for e in chosen
                if (biset.inner >> instance.edges[e].head) & 1 and not (biset.outer >> instance.edges[e].tail) & 1
            )
            assert eval_residual(g, instance, chosen, biset) == g.evaluate(biset) - entering


def test_residual_bound_examples():
    instance = Instance(
        directed=True,
        node_count=3,
        edges=((0, 1, 1), (0, 2, 1), (1, 2, 1)),
        bounds={0: 3, 1: 1},
        requirement=OutConnRequirement(root=0, k=1),
    )
    assert residual_bound(instance, [0, 1], 2, 0) == 2
    assert residual_bound(instance, [], 2, 0) == 3
    with pytest.raises(NodeNotBounded):
        residual_bound(instance, [], 2, 2)

    undirected = Instance(
        directed=False,
        node_count=4,
        edges=((0, 1, 1), (0, 2, 1), (0, 3, 1)),
        bounds={0: 1},
        requirement=KConnRequirement(k=1),
    )
    assert residual_bound(undirected, [0, 1, 2], 2, 0) == Fraction(-1, 2)


def test_gamma_examples():
    assert gamma_of(OutConnectivityFunction(5, 0, 4)) == 3
    assert gamma_of(ElementConnectivityFunction(5, [0, 1, 2], [(0, 1, 2), (1, 2, 1)])) == 1
    assert gamma_of(KConnectivityFunction(5, 1)) == 0


def test_values_bounded_by_k():
    n, k = 4, 3
    g = OutConnectivityFunction(n, 0, k)
    fk = KConnectivityFunction(n, k)
    for biset in enumerate_bisets(n):
        for value in (g.evaluate(biset), fk.evaluate(biset)):
            assert value <= k
            if value > 0:
                assert biset.boundary_size() <= k - 1


@pytest.mark.parametrize("n,k", [(4, 1), (4, 2), (5, 2), (5, 3)])
def test_g_is_intersecting_supermodular(n, k):
    report = supermodularity_audit(OutConnectivityFunction(n, 0, k))
    assert report.property == Supermodularity.INTERSECTING
    assert report.pairs_checked > 0
    assert report.passed


@pytest.mark.parametrize("n,pairs", [
    (4, [(0, 3, 1)]),
    (5, [(0, 2, 2), (2, 4, 1)]),
    (5, [(0, 1, 3), (1, 4, 2), (0, 4, 1)]),
])
def test_h_is_skew_supermodular(n, pairs):
    terminals = sorted({u for u, _, _ in pairs} | {v for _, v, _ in pairs})
    report = supermodularity_audit(ElementConnectivityFunction(n, terminals, pairs))
    assert report.property == Supermodularity.SKEW
    assert report.passed


def test_g_on_six_nodes():
    assert supermodularity_audit(OutConnectivityFunction(6, 0, 3)).passed


def test_fk_is_crossing_supermodular_and_symmetric():
    fk = KConnectivityFunction(5, 2)
    assert supermodularity_audit(fk).passed
    assert all(fk.is_symmetric_at(b) for b in enumerate_bisets(5))


def test_residuals_keep_their_property():
    rng = random.Random(11)
    directed = random_instance(rng, 4, True, 7)
    residual = ResidualFunction(OutConnectivityFunction(4, 0, 2), directed, [0, 2, 4])
    assert supermodularity_audit(residual).passed

    undirected = random_instance(rng, 4, False, 6)
    h = ElementConnectivityFunction(4, [0, 2, 3], [(0, 2, 2), (2, 3, 1)])
    assert supermodularity_audit(ResidualFunction(h, undirected, [1, 3])).passed


def test_negative_control_finds_violation():
    # f^k 不满足 S⁺ ≠ V 之外的相交超模不等式
    fk = KConnectivityFunction(4, 2)
    report = supermodularity_audit(fk, prop=Supermodularity.INTERSECTING)
    assert not report.passed
    x, y = report.violations[0]
    assert fk.evaluate(x) + fk.evaluate(y) > fk.evaluate(intersect(x, y)) + fk.evaluate(union(x, y))


def test_raw_values_of_g_are_not_supermodular():
    # 只有 f(X), f(Y) > 0 的对满足不等式
    g = OutConnectivityFunction(4, 0, 1)
    x = Biset.of([1], [0, 1, 2, 3])
    y = Biset.of([1, 2, 3], [1, 2, 3])
    assert g.evaluate(x) == 0 and g.evaluate(y) == 1
    assert g.evaluate(intersect(x, y)) == -1 and g.evaluate(union(x, y)) == 0
    assert not supermodularity_audit(g, positive=False).passed
    assert supermodularity_audit(g).passed


def test_audit_rejects_large_ground_set():
    with pytest.raises(TooLarge):
        supermodularity_audit(OutConnectivityFunction(9, 0, 1))


def test_cover_count_inequalities():
    rng = random.Random(5)
    bisets = list(enumerate_bisets(4))
    for directed in (True, False):
        instance = random_instance(rng, 4, directed, 8)
        edges = list(range(8))
        for _ in range(300):
            x, y = rng.choice(bisets), rng.choice(bisets)
            d = lambda b: len(delta(instance, edges, b))
            assert d(x) + d(y) >= d(intersect(x, y)) + d(union(x, y))
            if not directed:
                assert d(x) + d(y) >= d(subtract(x, y)) + d(subtract(y, x))


def main():
    """运行所有测试"""
    return pytest.main([__file__])


if __name__ == "__main__":
    sys.exit(main())
