from pydantic_settings import BaseSettings
from typing import Literal

class Settings(BaseSettings):
    # 应用配置
    APP_NAME: str = "Degree-Bounded Network Design Solver"
    APP_VERSION: str = "1.0.0"
    DEBUG: bool = False

    # 日志配置
    LOG_FILE: str = "logs/solver.log"
    LOG_LEVEL: str = "INFO"

    # 求解轨迹输出: full / summary / off
    SOLVER_TRACE: Literal["full", "summary", "off"] = "summary"

    # 割平面轮数上限 = 系数 * 3^n
    CUTTING_PLANE_ROUND_FACTOR: int = 10

    # 穷举双集合的节点数上限
    EXHAUSTIVE_MAX_NODES: int = 8

    # 分支定界最优解的边数上限
    ILP_MAX_EDGES: int = 22

    # 命令行求解时是否做层状族审计
    AUDIT_LAMINAR: bool = True

    # 基准测试线程数
    BENCH_WORKERS: int = 4

    # 默认 alpha
    DEFAULT_ALPHA: int = 2

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = True

# 创建配置实例
settings = Settings()
