#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
测试紧双集合族的抽取与令牌审计
"""

import os
import sys
from fractions import Fraction

import pytest

# 添加项目根目录到PYTHONPATH
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.core.biset import Biset, BisetFamily, build_forest, is_strongly_laminar
from app.core.graph import ElementRequirement, Instance, OutConnRequirement, RequirementKind
from app.functions.requirements import ElementConnectivityFunction, OutConnectivityFunction, function_for
from app.services.generator_service import generate
from app.services.laminar_service import (
    ExtractionFailure,
    LaminarMode,
    TightFamily,
    chain_decomposition,
    extract_tight_family,
    laminar_auditor,
    mode_for,
    token_audit,
)
from app.services.rounding_service import ParamsPreset, RoundingParams, preset_params, run
from app.solvers.lp_engine import LPResult, cutting_plane, rank_of


def B(inner, outer):
    return Biset.of(inner, outer)


def _steiner_triangle():
    """三个终端两两需求 1，唯一最优顶点为 x ≡ 1/2"""
    instance = Instance(
        directed=False,
        node_count=3,
        edges=((0, 1, 1), (1, 2, 1), (0, 2, 1)),
        requirement=ElementRequirement(k=1, terminals=(0, 1, 2), pairs=((0, 1, 1), (1, 2, 1), (0, 2, 1))),
    )
    return instance, function_for(instance)


def test_modes():
    assert mode_for(OutConnectivityFunction(4, 0, 1)) == LaminarMode.LAMINAR
    assert mode_for(ElementConnectivityFunction(4, [0, 1], [(0, 1, 1)])) == LaminarMode.STRONG


def test_half_vertex_on_triangle():
    instance, h = _steiner_triangle()
    result = cutting_plane(instance, h)
    assert result.objective == Fraction(3, 2)
    assert all(v == Fraction(1, 2) for v in result.x.values())

    tight = extract_tight_family(result, h, instance)
    assert isinstance(tight, TightFamily)
    assert tight.mode == LaminarMode.STRONG
    assert set(tight.family) == {B([0], [0]), B([1], [1]), B([2], [2])}
    assert len(tight.family) + len(tight.nodes) == len(result.edges)
    assert rank_of(tight.rows, result.edges) == len(result.edges)
    assert is_strongly_laminar(tight.family)


def test_triangle_in_laminar_mode():
    instance, h = _steiner_triangle()
    result = cutting_plane(instance, h)
    tight = extract_tight_family(result, h, instance, mode=LaminarMode.LAMINAR)
    assert isinstance(tight, TightFamily)
    assert len(tight.family) == 3


def test_token_audit_on_triangle():
    instance, h = _steiner_triangle()
    result = cutting_plane(instance, h)
    tight = extract_tight_family(result, h, instance)
    audit = token_audit(tight, result, h, 2, instance)
    assert audit.passed
    # 叶子的令牌数为 α·f(Ŝ)
    assert audit.quantities[B([0], [0])] == 2
    assert audit.count.lhs == 0
    assert audit.positive_ok is None


def test_integral_vertex_is_rejected():
    arcs = tuple((u, v, 1) for u in range(3) for v in range(3) if u != v)
    instance = Instance(directed=True, node_count=3, edges=arcs, requirement=OutConnRequirement(root=0, k=1))
    g = OutConnectivityFunction(3, 0, 1)
    result = cutting_plane(instance, g)
    failure = extract_tight_family(result, g, instance)
    assert isinstance(failure, ExtractionFailure)
    assert failure.pair is None


def test_nonleaf_without_edges_is_flagged():
    instance = Instance(
        directed=False,
        node_count=3,
        edges=((0, 1, 1),),
        requirement=ElementRequirement(k=1, terminals=(0, 1), pairs=((0, 1, 1),)),
    )
    h = function_for(instance)
    family = BisetFamily([B([1], [1]), B([1, 2], [1, 2])])
    tight = TightFamily(
        family=family,
        nodes=(),
        rows=[],
        edges=(0,),
        mode=LaminarMode.STRONG,
        forest=build_forest(family),
    )
    decomposition = chain_decomposition(instance, tight)
    assert decomposition.plus[B([1, 2], [1, 2])] == frozenset()
    assert decomposition.minus[B([1, 2], [1, 2])] == frozenset()

    result = LPResult(x={0: Fraction(1, 2)}, objective=Fraction(1, 2), rows=[], edges=(0,))
    audit = token_audit(tight, result, h, 2, instance)
    assert not audit.nonleaf_ok
    assert not audit.leaf_ok
    assert not audit.passed
    assert audit.failures


def test_auditor_inside_rounding():
    instance, h = _steiner_triangle()
    chosen, trace = run(instance, h, RoundingParams(alpha=2, beta=0, sigma=0), auditor=laminar_auditor)
    first = trace.records[0].audits
    assert first["extract"] and all(first.values())
    assert not trace.audit_failures()
    assert len(chosen) >= 2


def test_auditor_skips_integral_vertices():
    arcs = tuple((u, v, 1) for u in range(3) for v in range(3) if u != v)
    instance = Instance(directed=True, node_count=3, edges=arcs, requirement=OutConnRequirement(root=0, k=1))
    g = OutConnectivityFunction(3, 0, 1)
    result = cutting_plane(instance, g)
    assert laminar_auditor(instance, g, result, RoundingParams(alpha=2, beta=0, sigma=2)) == {}


@pytest.mark.parametrize("seed", range(4))
def test_successful_extractions_pass_audits(seed):
    instance = generate(seed=seed, n=5, density=0.5, kind=RequirementKind.ELEMENT, k=2, slack=0)
    function = function_for(instance)
    params = preset_params(ParamsPreset.ELEMENT_COST, 4, 1)
    _, trace = run(instance, function, params, auditor=laminar_auditor)
    for record in trace.records:
        if record.audits.get("extract"):
            assert all(record.audits.values()), record.line()


def main():
    """运行所有测试"""
    return pytest.main([__file__])


if __name__ == "__main__":
    sys.exit(main())
