"""Byte-stable CSV/JSON rendering shared by benchmark and finance reports.

Floats are rendered with repr() (shortest round-trip form) in both formats,
so the same run always produces identical bytes and both formats carry the
same numeric content.
"""

from __future__ import annotations

import json
from typing import Any, Iterable, Sequence


def fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_comments(config: dict[str, Any]) -> list[str]:
    return [f"# {key}={fmt(value)}" for key, value in config.items()]


def csv_text(
    config: dict[str, Any],
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    footer: Iterable[Sequence[Any]] = (),
) -> str:
    lines = config_comments(config)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(fmt(x) for x in row))
    for row in footer:
        lines.append(",".join(fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def json_text(doc: dict[str, Any]) -> str:
    return json.dumps(doc, indent=2) + "\n"
