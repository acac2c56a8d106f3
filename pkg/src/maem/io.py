"""CSV results with a self-describing commented YAML header."""

from __future__ import annotations

import csv
import io
import math
from datetime import datetime, timezone
from pathlib import Path

import yaml

from maem.config import RunConfig, build_config
from maem.errors import ResultsIOError


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float) or hasattr(v, "dtype"):
        x = float(v)
        if math.isnan(x):
            return "nan"
        return format(x, ".17g")
    return str(v)


def _plain(obj):
    """Convert numpy scalars and tuples so the header dumps as plain YAML."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return obj.item()
    return obj


def render_results(
    records,
    config: RunConfig | None = None,
    summary: dict | None = None,
    *,
    version: str | None = None,
    deterministic: bool = False,
    columns: list[str] | None = None,
) -> str:
    from maem import __version__

    records = list(records)
    if columns is None:
        columns = list(records[0].keys()) if records else []
    header = {"maem_version": version or __version__}
    if config is not None:
        header["experiment"] = config.experiment
        header["seed"] = config.values["seed"]
    if not deterministic:
        header["generated"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    if config is not None:
        header["config"] = config.resolved()
    if summary:
        header["summary"] = summary
    text = yaml.safe_dump(_plain(header), sort_keys=False, default_flow_style=False)
    buf = io.StringIO()
    for line in text.splitlines():
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for rec in records:
        writer.writerow([format_value(rec.get(c)) for c in columns])
    return buf.getvalue()


def write_results(records, path, config=None, summary=None, *, deterministic=False, columns=None):
    """Write records as CSV to ``path`` (``-`` for stdout)."""
    text = render_results(records, config, summary, deterministic=deterministic, columns=columns)
    if str(path) == "-":
        import sys

        sys.stdout.write(text)
        return
    p = Path(path)
    try:
        if p.parent and not p.parent.exists():
            p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ResultsIOError(path, f"cannot write results ({exc.strerror or exc})") from exc


def read_results(path):
    """Return ``(header, rows)``; rows are dicts of floats (empty cells -> None)."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ResultsIOError(path, f"cannot read results ({exc.strerror or exc})") from exc
    head = [ln[2:] if ln.startswith("# ") else ln[1:] for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    header = yaml.safe_load("\n".join(head)) or {}
    rows = []
    reader = csv.DictReader(body)
    for row in reader:
        rows.append({k: (float(v) if v != "" else None) for k, v in row.items()})
    return header, rows


def config_from_results(path) -> RunConfig:
    """Rebuild the exact configuration recorded in a results header."""
    header, _ = read_results(path)
    resolved = dict(header.get("config") or {})
    kind = resolved.pop("experiment", header.get("experiment"))
    return build_config(kind, resolved)
