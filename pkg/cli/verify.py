import argparse

from loguru import logger

from app.services.verify_service import verify
from storage.instance_file import digest, load_instance
from storage.report_file import load_solution

# 连通性或度数验证失败
VERIFY_FAILED = 4


def register(subparsers) -> None:
    parser = subparsers.add_parser("verify", help="用最大流独立验证一个解")
    parser.add_argument("instance", help="实例文件路径")
    parser.add_argument("solution", help="求解报告或只含 [solution] 的解文件")
    parser.add_argument("--ilp", action="store_true", help="同时用分支定界求最优值并报告比值")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    solution = load_solution(args.solution)
    if solution.digest is not None and solution.digest != digest(instance):
        logger.warning(f"解文件记录的实例摘要与当前实例不一致: {solution.digest}")

    # 报告里有 [degrees] 时按其中的保证上界检查，否则按实例的 b(v)
    report = verify(
        instance,
        solution.edges,
        limits=solution.limits if solution.has_degrees else None,
        in_limits=solution.in_limits if solution.has_degrees else None,
        lp_bound=solution.lp_bound,
        with_ilp=args.ilp,
    )

    print(f"requirement {report.requirement}")
    print(f"cost {report.cost}")
    if report.ratio_to_lp is not None:
        print(f"ratio_lp {report.ratio_to_lp}")
    if report.ilp_cost is not None:
        print(f"ilp {report.ilp_cost} ratio_ilp {report.ratio_to_ilp}")
    for deficit in report.deficits:
        print(f"DEFICIT pair {deficit.source} {deficit.sink} required {deficit.required} achieved {deficit.achieved}")
    for check in report.degree_violations:
        tag = "in-node" if check.incoming else "node"
        print(f"DEGREE {tag} {check.node} degree {check.degree} limit {check.limit}")

    if not report.passed:
        return VERIFY_FAILED
    print("OK")
    return 0
