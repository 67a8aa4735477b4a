import argparse

from cli import bench, generate, solve, verify


def build_parser(prog: str = "dbnd") -> argparse.ArgumentParser:
    """创建主解析器并注册全部子命令"""
    parser = argparse.ArgumentParser(prog=prog, description="度约束生存网络设计求解器")
    subparsers = parser.add_subparsers(dest="command", required=True)

    # 注册子命令
    solve.register(subparsers)
    verify.register(subparsers)
    bench.register(subparsers)
    generate.register(subparsers)
    return parser
