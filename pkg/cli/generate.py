import argparse

from app.core.graph import RequirementKind
from app.services.generator_service import generate
from storage.instance_file import save_instance, serialize_instance


def register(subparsers) -> None:
    parser = subparsers.add_parser("generate", help="生成保证可行的随机实例")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--n", type=int, default=6)
    parser.add_argument("--k", type=int, default=2)
    parser.add_argument("--kind", choices=[k.value for k in RequirementKind], default=RequirementKind.OUTCONN.value)
    parser.add_argument("--density", type=float, default=0.3)
    parser.add_argument("--slack", type=int, default=0, help="b(v) = deg_H(v) + slack")
    parser.add_argument("--no-bounds", action="store_true", help="不设度约束")
    direction = parser.add_mutually_exclusive_group()
    direction.add_argument("--directed", dest="directed", action="store_true", default=None)
    direction.add_argument("--undirected", dest="directed", action="store_false")
    parser.add_argument("-o", "--output", help="输出路径，缺省写到标准输出")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    instance = generate(
        seed=args.seed,
        n=args.n,
        density=args.density,
        kind=RequirementKind(args.kind),
        k=args.k,
        slack=None if args.no_bounds else args.slack,
        directed=args.directed,
    )
    if args.output:
        save_instance(instance, args.output)
    else:
        print(serialize_instance(instance), end="")
    return 0
