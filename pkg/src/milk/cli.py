import logging
import sys

from .CLI.CLI import app
from .printlog.print_log import setup_global_logging

logger = logging.getLogger(__name__)


def main():
    log_file = setup_global_logging()
    # 记录完整命令行
    logger.info(f"milk {' '.join(sys.argv[1:])} (日志: {log_file})")
    app()


if __name__ == "__main__":
    main()
