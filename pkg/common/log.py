import logging
import os
import sys

LOG_ENV = "SUBSONIC_LOG_LEVEL"
_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
_configured = False


def _configure():
    global _configured
    if _configured:
        return
    level_name = os.environ.get(LOG_ENV, "INFO").upper()
    level = getattr(logging, level_name, logging.INFO)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(_FORMAT))
    root = logging.getLogger("subsonic")
    root.addHandler(handler)
    root.setLevel(level)
    root.propagate = False
    # asyncio 的雜訊關掉
    logging.getLogger("asyncio").setLevel(logging.CRITICAL)
    _configured = True


def get_logger(name: str) -> logging.Logger:
    """取得 subsonic.* 命名空間下的 logger"""
    _configure()
    return logging.getLogger(f"subsonic.{name}")


def progress_line(k: int, update_norm: float, min_margin: float, stream=None):
    """每次外層迭代印一行（tab 分隔，格式固定）"""
    out = sys.stdout if stream is None else stream
    print(f"iter\t{k}\t{update_norm:.6e}\t{min_margin:.6e}", file=out, flush=True)
