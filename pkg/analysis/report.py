from __future__ import annotations

from dataclasses import dataclass, field

from common.report_io import format_report_lines


@dataclass(frozen=True)
class CheckResult:
    key: str
    value: object
    threshold: object = None
    verdict: bool | None = None  # None: 只報告，不判定


@dataclass
class DiagnosticsReport:
    checks: dict = field(default_factory=dict)
    exponents: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)

    def add(self, key: str, value, threshold=None, verdict=None) -> CheckResult:
        if key in self.checks:
            raise ValueError(f"check {key!r} reported twice")
        result = CheckResult(key, value, threshold, None if verdict is None else bool(verdict))
        self.checks[key] = result
        return result

    def extend(self, rows):
        for key, value, threshold, verdict in rows:
            self.add(key, value, threshold, verdict)

    @property
    def passed(self) -> bool:
        return all(c.verdict is not False for c in self.checks.values())

    @property
    def failures(self) -> list:
        return [k for k, c in self.checks.items() if c.verdict is False]

    def rows(self):
        """穩定排序：依 key"""
        return [(c.key, c.value, c.threshold, c.verdict) for _, c in sorted(self.checks.items())]

    def to_text(self) -> str:
        return format_report_lines(self.rows())

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": {k: {"value": c.value, "threshold": c.threshold, "verdict": c.verdict} for k, c in sorted(self.checks.items())},
            "exponents": self.exponents,
            "tables": self.tables,
        }
