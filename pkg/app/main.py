import sys
from typing import List, Optional

from loguru import logger
from pydantic import ValidationError

from app.core.exceptions import SolverError
from cli import build_parser
from config.config import settings


def configure_logging() -> None:
    """标准错误只保留 WARNING 以上，完整日志写入文件"""
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if settings.DEBUG else "WARNING")
    logger.add(
        settings.LOG_FILE,
        rotation="1 week",
        retention="4 weeks",
        level=settings.LOG_LEVEL,
        format="{time:YYYY-MM-DD HH:mm:ss} | {level} | {message}"
    )


def main(argv: Optional[List[str]] = None) -> int:
    configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    logger.info(f"{settings.APP_NAME} {settings.APP_VERSION}: {args.command}")

    try:
        return args.handler(args)
    except SolverError as e:
        logger.error(f"{type(e).__name__}: {e.message}")
        print(f"error: {type(e).__name__}: {e.message}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        logger.error(f"输入校验失败: {e}")
        print(f"error: invalid input: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        logger.error(f"文件读写失败: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        logger.exception(f"未预期的错误: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
