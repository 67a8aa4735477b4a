from fractions import Fraction
from math import floor
from typing import Dict, List, Literal, Optional, Tuple

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from app.core.exceptions import InputError
from app.core.graph import Instance, KConnRequirement, OutConnRequirement, RequirementKind
from app.functions.requirements import function_for
from app.services.kconn_service import KConnResult, db_k_connected, degree_threshold
from app.services.laminar_service import laminar_auditor
from app.services.rounding_service import (
    ParamsPreset,
    RoundingParams,
    RoundingTrace,
    preset_params,
    run,
    undirected_outconnected,
)
from app.services.verify_service import DegreeCheck, is_f_connected
from config.config import settings
from storage.instance_file import digest


class SolveOptions(BaseModel):
    """命令行求解参数"""

    kind: Optional[RequirementKind] = Field(default=None, description="期望的需求类型，缺省取实例自身")
    alpha: int = Field(default_factory=lambda: settings.DEFAULT_ALPHA, ge=1)
    degree_only: bool = False
    sigma: Optional[int] = Field(default=None, ge=0)
    beta: Optional[int] = Field(default=None, ge=0)
    fast: bool = False
    audit: bool = Field(default_factory=lambda: settings.AUDIT_LAMINAR)
    trace: str = Field(default_factory=lambda: settings.SOLVER_TRACE)

    @property
    def overridden(self) -> bool:
        return self.sigma is not None or self.beta is not None


class GuaranteeLine(BaseModel):
    """一条保证：observed 与 bound 按 relation 比较；claimed 为假时只记录观察值"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str
    observed: Fraction
    bound: Fraction
    source: str
    claimed: bool = True
    relation: Literal["<=", ">="] = "<="

    @property
    def holds(self) -> bool:
        if self.relation == ">=":
            return self.observed >= self.bound
        return self.observed <= self.bound

    @property
    def status(self) -> str:
        if not self.claimed:
            return "OBSERVED"
        return "PASS" if self.holds else "FAIL"

    def line(self) -> str:
        return f"{self.name} observed {self.observed} {self.relation} {self.bound} {self.status} src={self.source}"


class SolveReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    instance_digest: str
    requirement: RequirementKind
    directed: bool
    algorithm: str
    alpha: int
    beta: Optional[int] = None
    sigma: Optional[int] = None
    gamma: int
    flags: List[str] = Field(default_factory=list)
    lp_objective: Optional[Fraction] = Field(default=None, description="首个割平面顶点的目标值 τ*")
    lower_bound: Optional[Fraction] = Field(default=None, description="k-连通流程的可计算下界")
    edges: Tuple[int, ...] = ()
    cost: Fraction = Fraction(0)
    degrees: List[DegreeCheck] = Field(default_factory=list)
    guarantees: List[GuaranteeLine] = Field(default_factory=list)
    audits: List[str] = Field(default_factory=list)
    trace: List[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(g.holds for g in self.guarantees if g.claimed)

    @property
    def failed_guarantees(self) -> List[GuaranteeLine]:
        return [g for g in self.guarantees if g.claimed and not g.holds]

    @property
    def audit_failures(self) -> List[str]:
        return [a for a in self.audits if a.endswith("FAIL")]


class SolveService:
    """按需求类型分派到迭代舍入或 k-连通流程，并整理保证与审计"""

    def __init__(self, options: SolveOptions):
        self.options = options
        self.logger = logger.bind(component="solve")

    def _auditor(self):
        return laminar_auditor if self.options.audit else None

    def _check_options(self, instance: Instance) -> RequirementKind:
        kind = RequirementKind(instance.requirement.kind)
        options = self.options
        if options.kind is not None and options.kind != kind:
            raise InputError(f"--kind {options.kind.value} 与实例需求 {kind.value} 不一致")
        if options.degree_only and kind != RequirementKind.ELEMENT:
            raise InputError("--degree-only 只适用于元素连通实例")
        if options.overridden and kind == RequirementKind.KCONN:
            raise InputError("k-连通流程不接受 --sigma/--beta")
        return kind

    def _params(self, preset: ParamsPreset, gamma: int) -> RoundingParams:
        options = self.options
        params = preset_params(preset, options.alpha, gamma)
        if options.overridden or options.fast:
            params = RoundingParams(
                alpha=params.alpha,
                beta=params.beta if options.beta is None else options.beta,
                sigma=params.sigma if options.sigma is None else options.sigma,
                move_unbounded_edges=params.move_unbounded_edges,
                fast=options.fast,
            )
        return params

    def _trace_lines(self, trace: RoundingTrace) -> List[str]:
        if self.options.trace == "full":
            return trace.full_lines()
        if self.options.trace == "summary":
            return trace.summary_lines()
        return []

    def solve(self, instance: Instance) -> SolveReport:
        kind = self._check_options(instance)
        self.logger.info(
            f"开始求解: kind={kind.value}, n={instance.node_count}, |E|={len(instance.edges)}, "
            f"|B|={len(instance.bounds)}, alpha={self.options.alpha}"
        )
        if kind == RequirementKind.KCONN:
            report = self._solve_kconn(instance)
        elif kind == RequirementKind.OUTCONN and not instance.directed:
            report = self._solve_undirected_outconn(instance)
        else:
            report = self._solve_rounding(instance, kind)
        self.logger.info(
            f"求解完成: |J|={len(report.edges)}, 费用={report.cost}, 保证失败={len(report.failed_guarantees)}"
        )
        return report

    def _base_report(self, instance: Instance, kind: RequirementKind, algorithm: str, gamma: int) -> SolveReport:
        return SolveReport(
            instance_digest=digest(instance),
            requirement=kind,
            directed=instance.directed,
            algorithm=algorithm,
            alpha=self.options.alpha,
            gamma=gamma,
        )

    def _fill_solution(self, report: SolveReport, instance: Instance, edges) -> None:
        report.edges = tuple(sorted(edges))
        report.cost = instance.cost_of(report.edges)
        if not is_f_connected(instance, report.edges, function_for(instance)):
            report.audits.append("connectivity FAIL")
        else:
            report.audits.append("connectivity PASS")

    def _degree_lines(
        self,
        report: SolveReport,
        instance: Instance,
        limits: Dict[int, Fraction],
        source: str,
        claimed: bool,
        in_limits: Optional[Dict[int, Fraction]] = None,
    ) -> None:
        for incoming, table in ((False, limits), (True, in_limits or {})):
            for v, limit in sorted(table.items()):
                degree = instance.in_degree(report.edges, v) if incoming else instance.degree(report.edges, v)
                report.degrees.append(DegreeCheck(node=v, degree=degree, limit=floor(limit), incoming=incoming))
                name = f"{'in-degree' if incoming else 'degree'}({v})"
                report.guarantees.append(
                    GuaranteeLine(
                        name=name,
                        observed=Fraction(degree),
                        bound=Fraction(limit),
                        source=source,
                        claimed=claimed and not incoming,
                    )
                )

    def _laminar_audit_lines(self, report: SolveReport, trace: RoundingTrace) -> None:
        audited = [r for r in trace.records if r.audits]
        if not audited:
            return
        failures = trace.audit_failures()
        report.audits.append(
            f"laminar audited {len(audited)} failed {len(failures)} {'FAIL' if failures else 'PASS'}"
        )
        report.audits.extend(f"laminar {line} FAIL" for line in failures)

    def _solve_rounding(self, instance: Instance, kind: RequirementKind) -> SolveReport:
        options = self.options
        function = function_for(instance)
        gamma = function.gamma()
        if kind == RequirementKind.OUTCONN:
            preset, source = ParamsPreset.DIRECTED_OUT, "outconn-rounding"
        elif options.degree_only:
            preset, source = ParamsPreset.ELEMENT_DEGREE_ONLY, "element-degree-only"
        else:
            preset, source = ParamsPreset.ELEMENT_COST, "element-rounding"
        params = self._params(preset, gamma)
        no_bounds = not instance.bounds and not instance.in_bounds

        edges, trace = run(instance, function, params, auditor=self._auditor(), keep_vertices=no_bounds)
        report = self._base_report(instance, kind, preset.value, gamma)
        report.beta, report.sigma = params.beta, params.sigma
        report.flags = list(trace.flags) + (["override"] if options.overridden else [])
        report.lp_objective = trace.initial_objective
        self._fill_solution(report, instance, edges)

        claimed = not options.overridden and not options.fast and "no-theorem" not in trace.flags
        tau = trace.initial_objective or Fraction(0)
        report.guarantees.append(
            GuaranteeLine(
                name="cost <= alpha*tau",
                observed=report.cost,
                bound=params.alpha * tau,
                source=source,
                claimed=claimed and preset != ParamsPreset.ELEMENT_DEGREE_ONLY,
            )
        )
        limits = {v: Fraction(params.degree_limit(b)) for v, b in instance.bounds.items()}
        in_limits = {v: Fraction(params.degree_limit(b)) for v, b in instance.in_bounds.items()}
        self._degree_lines(report, instance, limits, source, claimed, in_limits)

        if no_bounds and kind == RequirementKind.OUTCONN:
            # 无度约束时有向出连通多面体的顶点是整数的
            report.guarantees.append(
                GuaranteeLine(
                    name="fractional edges at first vertex",
                    observed=Fraction(trace.initial_fractional),
                    bound=Fraction(0),
                    source="integral-polytope",
                    claimed=claimed,
                )
            )
        if no_bounds and kind == RequirementKind.ELEMENT:
            worst = min((max(x.values()) for x in trace.vertices if x), default=Fraction(1))
            report.guarantees.append(
                GuaranteeLine(
                    name="min over vertices of max x",
                    observed=worst,
                    bound=Fraction(1, 2),
                    relation=">=",
                    source="half-integral",
                    claimed=claimed,
                )
            )
            report.guarantees.append(
                GuaranteeLine(
                    name="cost <= 2*tau",
                    observed=report.cost,
                    bound=2 * tau,
                    source="half-integral",
                    claimed=claimed,
                )
            )
        self._laminar_audit_lines(report, trace)
        report.trace = self._trace_lines(trace)
        return report

    def _solve_undirected_outconn(self, instance: Instance) -> SolveReport:
        options = self.options
        requirement: OutConnRequirement = instance.requirement
        function = function_for(instance)
        params = self._params(ParamsPreset.DIRECTED_OUT, function.gamma())
        outcome = undirected_outconnected(instance, options.alpha, auditor=self._auditor(), params=params)

        report = self._base_report(instance, RequirementKind.OUTCONN, "bidirected-outconn", function.gamma())
        report.beta, report.sigma = params.beta, params.sigma
        report.flags = list(outcome.trace.flags) + (["override"] if options.overridden else [])
        report.lp_objective = outcome.lp_objective
        self._fill_solution(report, instance, outcome.edges)

        claimed = not options.overridden and not options.fast
        report.guarantees.append(
            GuaranteeLine(
                name="cost <= alpha*tau(bidirected)",
                observed=report.cost,
                bound=params.alpha * outcome.lp_objective,
                source="outconn-bidirected",
                claimed=claimed,
            )
        )
        limits = {v: Fraction(limit) for v, limit in outcome.degree_limits.items()}
        self._degree_lines(report, instance, limits, "outconn-bidirected", claimed)
        self._laminar_audit_lines(report, outcome.trace)
        report.trace = [f"root {requirement.root} arcs {len(outcome.arcs)}"] + self._trace_lines(outcome.trace)
        return report

    def _solve_kconn(self, instance: Instance) -> SolveReport:
        requirement: KConnRequirement = instance.requirement
        k = requirement.k
        result: KConnResult = db_k_connected(instance, self.options.alpha, auditor=self._auditor())
        external = result.external

        report = self._base_report(instance, RequirementKind.KCONN, "kconn-pipeline", max(k - 1, 0))
        report.beta, report.sigma = external.params.beta, external.params.sigma
        report.flags = list(external.trace.flags)
        report.lp_objective = external.lp_objective
        report.lower_bound = result.lower_bound
        self._fill_solution(report, instance, result.edges)

        claimed = not self.options.fast
        report.guarantees.append(
            GuaranteeLine(
                name="cost <= factor*LB",
                observed=report.cost,
                bound=result.cost_factor * result.lower_bound,
                source="kconn-pipeline",
                claimed=claimed,
            )
        )
        size_bound = 2 * k - 1 if instance.directed else k - 1
        report.guarantees.append(
            GuaranteeLine(
                name="|F|",
                observed=Fraction(len(result.completion.edges)),
                bound=Fraction(size_bound),
                source="completion-forest",
            )
        )
        report.guarantees.append(
            GuaranteeLine(
                name="max F-degree after reduction",
                observed=Fraction(result.max_f_degree),
                bound=Fraction(degree_threshold(k, instance.directed)),
                source="degree-reduction",
            )
        )
        self._degree_lines(report, instance, result.degree_limits, "kconn-pipeline", claimed)

        report.audits.append(f"completion certificate {'PASS' if result.completion.certificate else 'FAIL'}")
        if result.r_audit is not None:
            report.audits.append(f"deficient bisets meet R {'PASS' if result.r_audit else 'FAIL'}")
        self._laminar_audit_lines(report, external.trace)
        report.trace = [
            f"R {','.join(map(str, result.r_nodes))}",
            f"external plus {len(external.plus)} minus {len(external.minus)}",
            f"completion {len(result.completion.edges)} swaps {result.reduction.swaps} "
            f"reprunes {result.reduction.reprunes}",
            f"augmented pairs {len(result.augmentations)}",
        ] + self._trace_lines(external.trace)
        return report
