"""Versioned structured-text reports.

Every benchmark and replay writes the same shape: a version header, a
kind line, named metadata lines, then zero or more data rows of
``key=value`` tokens.  The format round-trips exactly through
``parse_report``/``format_report`` so downstream tooling can rely on it.

    #teleobridge-report v1
    kind: grasp-bench
    meta: robot ur5
    meta: trials 40
    row: index=0 phase=done flags=15
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

VERSION_LINE = "#teleobridge-report v1"


@dataclass
class Report:
    kind: str
    meta: dict[str, str] = field(default_factory=dict)
    rows: list[dict[str, str]] = field(default_factory=list)

    def require(self, name: str) -> str:
        try:
            return self.meta[name]
        except KeyError:
            raise ConfigError(f"report is missing meta field {name!r}") from None


def _check_token(text: str, what: str) -> str:
    text = str(text)
    if not text or any(c.isspace() for c in text):
        raise ConfigError(f"{what} must be a non-empty token, got {text!r}")
    return text


def format_report(report: Report) -> str:
    lines = [VERSION_LINE, f"kind: {_check_token(report.kind, 'report kind')}"]
    for name, value in report.meta.items():
        lines.append(f"meta: {_check_token(name, 'meta name')} {value}")
    for row in report.rows:
        tokens = []
        for key, value in row.items():
            tokens.append(
                f"{_check_token(key, 'row key')}={_check_token(value, 'row value')}"
            )
        lines.append("row: " + " ".join(tokens))
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> Report:
    lines = text.splitlines()
    if not lines or lines[0] != VERSION_LINE:
        raise ConfigError("not a recognised report: bad or missing version line")
    kind: str | None = None
    meta: dict[str, str] = {}
    rows: list[dict[str, str]] = []
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if line.startswith("kind: "):
            kind = line[len("kind: "):].strip()
        elif line.startswith("meta: "):
            body = line[len("meta: "):]
            name, _, value = body.partition(" ")
            if not name or not value:
                raise ConfigError(f"line {number}: malformed meta line")
            meta[name] = value
        elif line.startswith("row: "):
            row: dict[str, str] = {}
            for token in line[len("row: "):].split():
                key, sep, value = token.partition("=")
                if not sep or not key or not value:
                    raise ConfigError(f"line {number}: malformed row token {token!r}")
                row[key] = value
            rows.append(row)
        else:
            raise ConfigError(f"line {number}: unrecognised report line {line!r}")
    if kind is None:
        raise ConfigError("report has no kind line")
    return Report(kind=kind, meta=meta, rows=rows)


def write_report(report: Report, path) -> None:
    Path(path).write_text(format_report(report), encoding="ascii")


def read_report(path) -> Report:
    return parse_report(Path(path).read_text(encoding="ascii"))
