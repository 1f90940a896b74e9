"""CSV output with a reproducibility header block.

All numeric output uses scientific notation with 17 significant digits, '.'
decimal separator, comma field separator and '\\n' line endings, so repeated
runs of the same configuration are byte-identical.  Each file carries a
leading block of '# '-prefixed comment lines recording the fully resolved
configuration (and, where relevant, the coefficient table).
"""

from pathlib import Path

__all__ = ["fmt", "write_csv"]


def fmt(value) -> str:
    """Render one CSV field: 17 significant digits for floats."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.16e}"
    return str(value)


def write_csv(path, comments, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
