"""Collects one summary line per acceptance criterion for the terminal report."""

ACCEPTANCE_LINES: list[str] = []


def record(number: int, ok: bool, title: str, detail: str) -> str:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line
