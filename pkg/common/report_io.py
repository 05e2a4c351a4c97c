import json
from pathlib import Path

import numpy as np

MAX_LEN = 64 * 1024 * 1024


def write_json(path, obj: dict):
    """寫出 JSON（固定 key 順序，超過上限拒絕）"""
    data = json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True).encode("utf-8")
    n = len(data)
    if n > MAX_LEN:
        raise ValueError(f"JSON too large: {n} bytes")
    Path(path).write_bytes(data + b"\n")


def read_json(path):
    body = Path(path).read_bytes()
    if not (0 < len(body) <= MAX_LEN):
        raise ValueError(f"invalid JSON length: {len(body)}")
    return json.loads(body.decode("utf-8"))


def write_field_table(path, x1, x2, values, name: str = "value"):
    """一個欄位一張表：x1,x2,value"""
    table = np.column_stack([np.ravel(x1), np.ravel(x2), np.ravel(values)])
    np.savetxt(path, table, delimiter=",", header=f"x1,x2,{name}", comments="", fmt="%.17g")


def format_report_lines(rows) -> str:
    """rows: iterable of (key, value, threshold, verdict)"""
    lines = ["key\tvalue\tthreshold\tverdict"]
    for key, value, threshold, verdict in rows:
        lines.append(f"{key}\t{_fmt(value)}\t{_fmt(threshold)}\t{_verdict(verdict)}")
    return "\n".join(lines) + "\n"


def write_report(path, rows):
    Path(path).write_text(format_report_lines(rows), encoding="utf-8")


def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10e}"
    return str(v)


def _verdict(v):
    if v is None:
        return "info"
    return "pass" if v else "fail"
