from fractions import Fraction
from pathlib import Path
from typing import TYPE_CHECKING, Dict, List, Optional, Tuple, Union

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from app.core.exceptions import InstanceFormatError
from app.core.graph import Instance, to_fraction
from storage.instance_file import split_sections

if TYPE_CHECKING:
    from app.services.solve_service import SolveReport

REPORT_SECTIONS = ("instance", "algorithm", "lp", "solution", "degrees", "guarantees", "audits", "trace")


def format_report(report: "SolveReport", instance: Instance) -> str:
    """把求解报告写成分节文本，[solution] 与 [degrees] 可被 verify 读回"""
    lines = [
        "[instance]",
        f"sha256 {report.instance_digest}",
        f"requirement {report.requirement.value}",
        f"directed {'true' if report.directed else 'false'}",
        f"n {instance.node_count}",
        f"m {len(instance.edges)}",
        "[algorithm]",
        f"name {report.algorithm}",
        f"alpha {report.alpha}",
        f"beta {'-' if report.beta is None else report.beta}",
        f"sigma {'-' if report.sigma is None else report.sigma}",
        f"gamma {report.gamma}",
        f"flags {','.join(report.flags) if report.flags else 'none'}",
        "[lp]",
        f"tau {'-' if report.lp_objective is None else report.lp_objective}",
    ]
    if report.lower_bound is not None:
        lines.append(f"lower_bound {report.lower_bound}")
    lines.append("[solution]")
    lines.append(f"cost {report.cost}")
    for e in report.edges:
        edge = instance.edges[e]
        lines.append(f"edge {e} {edge.tail} {edge.head} {edge.cost}")
    lines.append("[degrees]")
    bounds = {False: instance.bounds, True: instance.in_bounds}
    for check in report.degrees:
        tag = "in-node" if check.incoming else "node"
        lines.append(
            f"{tag} {check.node} degree {check.degree} bound {bounds[check.incoming][check.node]} limit {check.limit}"
        )
    lines.append("[guarantees]")
    lines += [g.line() for g in report.guarantees]
    lines.append("[audits]")
    lines += report.audits
    lines.append("[trace]")
    lines += report.trace
    return "\n".join(lines) + "\n"


def save_report(report: "SolveReport", instance: Instance, path: Union[str, Path]) -> None:
    path = Path(path)
    path.write_text(format_report(report, instance), encoding="utf-8")
    logger.info(f"报告已写入: {path}")


class SolutionFile(BaseModel):
    """verify 读回的解：边编号、度数上界与 LP 下界"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    digest: Optional[str] = None
    edges: Tuple[int, ...] = ()
    limits: Dict[int, int] = Field(default_factory=dict)
    in_limits: Dict[int, int] = Field(default_factory=dict)
    lp_bound: Optional[Fraction] = None
    has_degrees: bool = False


def _word_after(words: List[str], key: str, number: int) -> str:
    try:
        return words[words.index(key) + 1]
    except (ValueError, IndexError):
        raise InstanceFormatError(f"第 {number} 行: 缺少字段 {key}")


def parse_solution(text: str) -> SolutionFile:
    """接受完整报告或只含 [solution] 的文件；[solution] 中的每行是 "edge id u v cost" """
    sections = split_sections(text, REPORT_SECTIONS)
    if "solution" not in sections:
        raise InstanceFormatError("解文件缺少 [solution] 分节")
    solution = SolutionFile()

    for number, words in sections.get("instance", []):
        if words[0] == "sha256" and len(words) == 2:
            solution.digest = words[1]

    for number, words in sections.get("lp", []):
        if words[0] == "tau" and len(words) == 2 and words[1] != "-":
            solution.lp_bound = to_fraction(words[1])

    edges: List[int] = []
    for number, words in sections["solution"]:
        if words[0] == "cost":
            continue
        if words[0] != "edge" or len(words) < 2:
            raise InstanceFormatError(f"第 {number} 行: 需要 edge id u v cost")
        try:
            edges.append(int(words[1]))
        except ValueError:
            raise InstanceFormatError(f"第 {number} 行: 边编号不是整数 {words[1]!r}")
    solution.edges = tuple(edges)

    if "degrees" in sections:
        solution.has_degrees = True
        for number, words in sections["degrees"]:
            if words[0] not in ("node", "in-node") or len(words) < 2:
                raise InstanceFormatError(f"第 {number} 行: 无法识别的度数行")
            table = solution.in_limits if words[0] == "in-node" else solution.limits
            try:
                table[int(words[1])] = int(_word_after(words, "limit", number))
            except ValueError:
                raise InstanceFormatError(f"第 {number} 行: 节点或上界不是整数")
    return solution


def load_solution(path: Union[str, Path]) -> SolutionFile:
    path = Path(path)
    logger.info(f"读取解文件: {path}")
    return parse_solution(path.read_text(encoding="utf-8"))
