"""Plain-text key-value configuration blocks.

Format: one ``key = value`` pair per line, ``#`` comments and blank lines
ignored, keys may repeat (order preserved).  A line of the form
``[section]`` ends the block and starts a named free-form section whose raw
lines are returned untouched; manifests use this for tabular payloads.
"""

from __future__ import annotations

from .errors import ParseError


def parse_kv_text(text: str, source: str = "<config>"):
    """Return (pairs, sections): ordered key-value pairs plus raw sections."""
    pairs: list[tuple[str, str]] = []
    sections: dict[str, list[str]] = {}
    current: list[str] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = sections.setdefault(line[1:-1].strip(), [])
            continue
        if current is not None:
            current.append(raw)
            continue
        if "=" not in line:
            raise ParseError(
                f"expected 'key = value', got {line!r}",
                location=f"{source} line {lineno}",
            )
        key, _, value = line.partition("=")
        pairs.append((key.strip(), value.strip()))
    return pairs, sections


def read_kv_file(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_kv_text(fh.read(), source=str(path))


def format_kv(pairs) -> str:
    return "".join(f"{k} = {v}\n" for k, v in pairs)


def get_float_list(value: str, source="<config>") -> list[float]:
    try:
        return [float(x) for x in value.split(",")]
    except ValueError:
        raise ParseError(f"expected comma-separated numbers, got {value!r}",
                         location=source) from None


def get_int_list(value: str, source="<config>") -> list[int]:
    try:
        return [int(x) for x in value.split(",")]
    except ValueError:
        raise ParseError(f"expected comma-separated integers, got {value!r}",
                         location=source) from None


def get_str_list(value: str) -> list[str]:
    return [x.strip() for x in value.split(",")]
