import argparse
import sys

from loguru import logger

from app.core.graph import RequirementKind
from app.services.solve_service import SolveOptions, SolveService
from config.config import settings
from storage.instance_file import load_instance
from storage.report_file import format_report, save_report

# 有保证失败时的退出码，与定理违背诊断一致
GUARANTEE_FAILED = 3


def register(subparsers) -> None:
    parser = subparsers.add_parser("solve", help="求解实例并写出报告")
    parser.add_argument("instance", help="实例文件路径")
    parser.add_argument("-o", "--output", help="报告输出路径，缺省写到标准输出")
    parser.add_argument("--kind", choices=[k.value for k in RequirementKind], help="需求类型，须与实例一致")
    parser.add_argument("--alpha", type=int, default=settings.DEFAULT_ALPHA)
    parser.add_argument("--degree-only", action="store_true", help="元素连通的只控度数变体")
    parser.add_argument("--sigma", type=int, help="覆盖预设的 sigma")
    parser.add_argument("--beta", type=int, help="覆盖预设的 beta")
    parser.add_argument("--fast", action="store_true", help="一轮固定全部高边，不再声明保证")
    parser.add_argument("--no-audit", action="store_true", help="关闭层状族审计")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    options = SolveOptions(
        kind=args.kind,
        alpha=args.alpha,
        degree_only=args.degree_only,
        sigma=args.sigma,
        beta=args.beta,
        fast=args.fast,
        audit=settings.AUDIT_LAMINAR and not args.no_audit,
    )
    report = SolveService(options).solve(instance)
    if args.output:
        save_report(report, instance, args.output)
        print(f"cost {report.cost} tau {report.lp_objective} edges {len(report.edges)} -> {args.output}")
    else:
        sys.stdout.write(format_report(report, instance))
    if report.failed_guarantees:
        for line in report.failed_guarantees:
            logger.error(f"保证未满足: {line.line()}")
        return GUARANTEE_FAILED
    return 0
