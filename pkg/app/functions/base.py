from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, List, Optional

from loguru import logger

from app.core.biset import Biset


# 双集合函数类型
class FunctionKind(str, Enum):
    OUT_CONNECTIVITY = "g"  # k-出连通
    ELEMENT = "h"  # 元素连通
    K_CONNECTIVITY = "fk"  # k-连通
    RESIDUAL = "residual"  # 关于已选边集 J 的剩余函数
    CUSTOM = "custom"  # 用户自定义，无定理保证


# 超模性质类型
class Supermodularity(str, Enum):
    INTERSECTING = "intersecting"  # 内部相交时满足超模不等式
    SKEW = "skew"  # 超模或后模不等式至少一个成立
    CROSSING = "crossing"  # 相交且外部并不为 V 时满足超模不等式


@dataclass(frozen=True)
class SeparationPair:
    """分离时的一次 s-t 流：source 不在 S⁺ 中，sink 在 S 中"""

    source: int
    sink: int
    threshold: int  # 流值低于该阈值即存在违反约束
    unsplit: int  # 不拆分(不允许出现在边界上)的节点掩码


class ConnectivityFunction(ABC):
    """双集合函数抽象基类，所有需求函数必须实现 evaluate 与 gamma"""

    kind: FunctionKind = FunctionKind.CUSTOM
    supermodularity: Supermodularity = Supermodularity.SKEW

    def __init__(self, node_count: int, directed: bool):
        self.node_count = node_count
        self.directed = directed
        self.logger = logger.bind(function=self.kind.value)

    @abstractmethod
    def evaluate(self, biset: Biset) -> int:
        """f(Ŝ)

        Args:
            biset: 待求值的双集合

        Returns:
            int: 函数值，可以为负
        """
        pass

    @abstractmethod
    def gamma(self) -> int:
        """γ 的解析上界 max_{f(Ŝ)>0} |Γ(Ŝ)|"""
        pass

    def separation_pairs(self) -> Optional[List[SeparationPair]]:
        """分离所需的点对流；返回 None 表示只能穷举双集合"""
        return None

    @property
    def base(self) -> "ConnectivityFunction":
        return self

    @property
    def chosen(self) -> FrozenSet[int]:
        return frozenset()

    @property
    def has_theorem(self) -> bool:
        """是否属于有近似保证的函数类"""
        return self.base.kind in (
            FunctionKind.OUT_CONNECTIVITY,
            FunctionKind.ELEMENT,
            FunctionKind.K_CONNECTIVITY,
        )

    def __call__(self, biset: Biset) -> int:
        return self.evaluate(biset)

    def describe(self) -> str:
        return f"{self.kind.value}(n={self.node_count}, gamma={self.gamma()})"
