import hashlib
from pathlib import Path
from typing import Dict, List, Tuple, Union

from loguru import logger

from app.core.exceptions import InstanceFormatError
from app.core.graph import (
    ElementRequirement,
    Instance,
    KConnRequirement,
    OutConnRequirement,
    to_fraction,
)

# 实例文件允许的分节，顺序即输出顺序
SECTIONS = ("header", "edges", "bounds", "in_bounds", "requirement")
REQUIRED_SECTIONS = ("header", "edges", "requirement")

Line = Tuple[int, List[str]]


def split_sections(text: str, allowed: Tuple[str, ...]) -> Dict[str, List[Line]]:
    """按 [name] 分节，去掉空行与 # 注释，返回 {节名: [(行号, 词列表)]}"""
    sections: Dict[str, List[Line]] = {}
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in allowed:
                raise InstanceFormatError(f"第 {number} 行: 未知分节 [{current}]")
            if current in sections:
                raise InstanceFormatError(f"第 {number} 行: 分节 [{current}] 重复")
            sections[current] = []
            continue
        if current is None:
            raise InstanceFormatError(f"第 {number} 行: 内容出现在任何分节之前")
        sections[current].append((number, line.split()))
    return sections


def _int(number: int, token: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise InstanceFormatError(f"第 {number} 行: 需要整数，得到 {token!r}")


def _expect(number: int, words: List[str], size: int) -> None:
    if len(words) != size:
        raise InstanceFormatError(f"第 {number} 行: 需要 {size} 个字段，得到 {len(words)} 个")


def _parse_header(lines: List[Line]) -> Tuple[bool, int]:
    values: Dict[str, str] = {}
    for number, words in lines:
        _expect(number, words, 2)
        values[words[0]] = words[1]
    if "directed" not in values or "n" not in values:
        raise InstanceFormatError("[header] 需要 directed 与 n 两项")
    flag = values["directed"].lower()
    if flag not in ("true", "false"):
        raise InstanceFormatError(f"directed 只能是 true 或 false，得到 {values['directed']!r}")
    return flag == "true", _int(0, values["n"])


def _parse_requirement(lines: List[Line]):
    if not lines:
        raise InstanceFormatError("[requirement] 为空")
    number, words = lines[0]
    kind = words[0]
    if kind == "outconn":
        _expect(number, words, 3)
        return OutConnRequirement(root=_int(number, words[1]), k=_int(number, words[2]))
    if kind == "kconn":
        _expect(number, words, 2)
        return KConnRequirement(k=_int(number, words[1]))
    if kind == "element":
        _expect(number, words, 2)
        k = _int(number, words[1])
        terminals: List[int] = []
        pairs: List[Tuple[int, int, int]] = []
        for number, words in lines[1:]:
            if words[0] == "terminal":
                _expect(number, words, 2)
                terminals.append(_int(number, words[1]))
            else:
                _expect(number, words, 3)
                pairs.append(tuple(_int(number, w) for w in words))
        return ElementRequirement(k=k, terminals=tuple(terminals), pairs=tuple(pairs))
    raise InstanceFormatError(f"第 {number} 行: 未知需求类型 {kind!r}")


def parse_instance(text: str) -> Instance:
    """解析实例文本；字段违反模型约束时抛出 pydantic ValidationError"""
    sections = split_sections(text, SECTIONS)
    missing = [name for name in REQUIRED_SECTIONS if name not in sections]
    if missing:
        raise InstanceFormatError(f"缺少分节: {', '.join(missing)}")

    directed, n = _parse_header(sections["header"])
    edges = []
    for number, words in sections["edges"]:
        _expect(number, words, 3)
        try:
            cost = to_fraction(words[2])
        except (ValueError, ZeroDivisionError):
            raise InstanceFormatError(f"第 {number} 行: 无法解析费用 {words[2]!r}")
        edges.append((_int(number, words[0]), _int(number, words[1]), cost))

    tables: Dict[str, Dict[int, int]] = {"bounds": {}, "in_bounds": {}}
    for name in tables:
        for number, words in sections.get(name, []):
            _expect(number, words, 2)
            v = _int(number, words[0])
            if v in tables[name]:
                raise InstanceFormatError(f"第 {number} 行: 节点 {v} 的上界重复")
            tables[name][v] = _int(number, words[1])

    return Instance(
        directed=directed,
        node_count=n,
        edges=tuple(edges),
        bounds=tables["bounds"],
        in_bounds=tables["in_bounds"],
        requirement=_parse_requirement(sections["requirement"]),
    )


def serialize_instance(instance: Instance) -> str:
    lines = [
        "[header]",
        f"directed {'true' if instance.directed else 'false'}",
        f"n {instance.node_count}",
        "[edges]",
    ]
    lines += [f"{e.tail} {e.head} {e.cost}" for e in instance.edges]
    lines.append("[bounds]")
    lines += [f"{v} {b}" for v, b in sorted(instance.bounds.items())]
    if instance.in_bounds:
        lines.append("[in_bounds]")
        lines += [f"{v} {b}" for v, b in sorted(instance.in_bounds.items())]
    lines.append("[requirement]")
    requirement = instance.requirement
    if isinstance(requirement, OutConnRequirement):
        lines.append(f"outconn {requirement.root} {requirement.k}")
    elif isinstance(requirement, KConnRequirement):
        lines.append(f"kconn {requirement.k}")
    else:
        lines.append(f"element {requirement.k}")
        lines += [f"terminal {t}" for t in requirement.terminals]
        lines += [f"{u} {v} {r}" for u, v, r in requirement.pairs]
    return "\n".join(lines) + "\n"


def digest(instance: Instance) -> str:
    """规范化文本的 sha256，用于报告与实例的对应"""
    return hashlib.sha256(serialize_instance(instance).encode("utf-8")).hexdigest()


def load_instance(path: Union[str, Path]) -> Instance:
    path = Path(path)
    logger.info(f"读取实例文件: {path}")
    return parse_instance(path.read_text(encoding="utf-8"))


def save_instance(instance: Instance, path: Union[str, Path]) -> None:
    path = Path(path)
    path.write_text(serialize_instance(instance), encoding="utf-8")
    logger.info(f"实例已写入: {path}")
