import argparse
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import List, Optional

from loguru import logger
from pydantic import BaseModel, ConfigDict

from app.core.exceptions import SolverError, TooLarge
from app.core.graph import RequirementKind
from app.services.generator_service import generate
from app.services.solve_service import SolveOptions, SolveService
from app.services.verify_service import ilp_opt, verify
from config.config import settings


class BenchRow(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    index: int
    seed: int
    n: int
    m: int
    cost: Optional[Fraction] = None
    tau: Optional[Fraction] = None
    ilp: Optional[Fraction] = None
    degree_excess: Optional[int] = None
    verified: bool = False
    guarantees_ok: bool = False
    audits_ok: bool = False
    error: Optional[str] = None
    millis: int = 0

    @property
    def ratio_lp(self) -> Optional[Fraction]:
        if self.cost is None or not self.tau:
            return None
        return self.cost / self.tau

    @property
    def ratio_ilp(self) -> Optional[Fraction]:
        if self.cost is None or not self.ilp:
            return None
        return self.cost / self.ilp


def register(subparsers) -> None:
    parser = subparsers.add_parser("bench", help="生成实例并批量求解、验证、审计")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--count", type=int, default=20)
    parser.add_argument("--n", type=int, default=6)
    parser.add_argument("--k", type=int, default=2)
    parser.add_argument("--kind", choices=[k.value for k in RequirementKind], default=RequirementKind.OUTCONN.value)
    parser.add_argument("--alpha", type=int, default=settings.DEFAULT_ALPHA)
    parser.add_argument("--density", type=float, default=0.3)
    parser.add_argument("--slack", type=int, default=0)
    parser.add_argument("--no-bounds", action="store_true")
    parser.add_argument("--degree-only", action="store_true")
    parser.add_argument("--workers", type=int, default=settings.BENCH_WORKERS)
    parser.add_argument("--no-timings", action="store_true", help="不输出耗时，得到逐字节可复现的表")
    parser.set_defaults(handler=run)


def bench_one(index: int, args: argparse.Namespace) -> BenchRow:
    """每个线程各自生成实例并持有自己的求解状态"""
    seed = args.seed * 100003 + index
    instance = generate(
        seed=seed,
        n=args.n,
        density=args.density,
        kind=RequirementKind(args.kind),
        k=args.k,
        slack=None if args.no_bounds else args.slack,
    )
    row = BenchRow(index=index, seed=seed, n=instance.node_count, m=len(instance.edges))
    started = time.perf_counter()
    try:
        options = SolveOptions(alpha=args.alpha, degree_only=args.degree_only, audit=True, trace="off")
        report = SolveService(options).solve(instance)
        limits = {d.node: d.limit for d in report.degrees if not d.incoming}
        checked = verify(instance, report.edges, limits=limits, lp_bound=report.lp_objective)
        row.cost, row.tau = report.cost, report.lp_objective
        row.verified = checked.connected
        row.degree_excess = checked.max_degree_excess
        row.guarantees_ok = report.passed
        row.audits_ok = not report.audit_failures
        try:
            row.ilp = ilp_opt(instance).cost
        except TooLarge:
            pass
    except SolverError as e:
        logger.error(f"基准实例 {index} (seed={seed}) 失败: {type(e).__name__}: {e.message}")
        row.error = type(e).__name__
    except Exception as e:
        logger.exception(f"基准实例 {index} (seed={seed}) 出现未预期的错误: {e}")
        row.error = type(e).__name__
    row.millis = int((time.perf_counter() - started) * 1000)
    return row


def _fmt(value) -> str:
    return "-" if value is None else str(value)


def format_table(rows: List[BenchRow], timings: bool) -> List[str]:
    header = ["idx", "seed", "n", "m", "cost", "tau", "ratio_lp", "ilp", "ratio_ilp", "deg_excess", "verify", "guar", "audit"]
    if timings:
        header.append("ms")
    lines = [" ".join(header)]
    for row in rows:
        cells = [
            row.index, row.seed, row.n, row.m, row.cost, row.tau, row.ratio_lp, row.ilp, row.ratio_ilp,
            row.degree_excess,
            row.error or ("ok" if row.verified else "FAIL"),
            "ok" if row.guarantees_ok else "FAIL",
            "ok" if row.audits_ok else "FAIL",
        ]
        if timings:
            cells.append(row.millis)
        lines.append(" ".join(_fmt(c) for c in cells))

    done = [r for r in rows if r.error is None]
    lp_ratios = [r.ratio_lp for r in done if r.ratio_lp is not None]
    ilp_ratios = [r.ratio_ilp for r in done if r.ratio_ilp is not None]
    lines.append(f"runs {len(rows)} errors {len(rows) - len(done)}")
    if lp_ratios:
        lines.append(f"ratio_lp mean {float(sum(lp_ratios) / len(lp_ratios)):.4f} max {max(lp_ratios)}")
    if ilp_ratios:
        lines.append(f"ratio_ilp mean {float(sum(ilp_ratios) / len(ilp_ratios)):.4f} max {max(ilp_ratios)}")
    if done:
        lines.append(f"max degree excess {max(r.degree_excess for r in done)}")
        lines.append(f"verify pass {sum(r.verified for r in done)}/{len(done)}")
        lines.append(f"guarantee pass {sum(r.guarantees_ok for r in done)}/{len(done)}")
        lines.append(f"audit pass {sum(r.audits_ok for r in done)}/{len(done)}")
    if timings:
        lines.append(f"total ms {sum(r.millis for r in rows)}")
    return lines


def run(args: argparse.Namespace) -> int:
    logger.info(f"开始基准测试: seed={args.seed}, count={args.count}, n={args.n}, k={args.k}, kind={args.kind}")
    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        rows = list(pool.map(lambda i: bench_one(i, args), range(args.count)))
    for line in format_table(rows, timings=not args.no_timings):
        print(line)
    return 0
