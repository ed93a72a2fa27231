"""File outputs: full-precision CSV, versioned JSON, trace SVG, manifests."""

import datetime
import json
import os
from dataclasses import asdict, dataclass, field
from typing import List

import numpy as np

SCHEMA_VERSION = 1

try:
    from importlib.metadata import version as _pkg_version
    TOOL_VERSION = _pkg_version("slefrac")
except Exception:  # pragma: no cover - not installed
    TOOL_VERSION = "0.0.0+uninstalled"


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, header, columns) -> None:
    """Write columns as CSV with 17-significant-digit floats."""
    columns = [np.asarray(c) for c in columns]
    with open(path, "w", encoding="utf-8") as f:
        f.write(",".join(header) + "\n")
        for row in zip(*columns):
            f.write(",".join(_fmt(v) for v in row) + "\n")


def write_json(path, payload: dict) -> None:
    payload = dict(payload)
    payload.setdefault("schema_version", SCHEMA_VERSION)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


@dataclass
class ExperimentManifest:
    """Provenance record; identical parameters reproduce identical outputs."""

    experiment: str
    params: dict
    master_seed: int
    tool_version: str = TOOL_VERSION
    started: str = ""
    finished: str = ""
    outputs: List[str] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(asdict(self), f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "ExperimentManifest":
        with open(path, encoding="utf-8") as f:
            return cls(**json.load(f))


def write_trace_svg(path, points, width: int = 800, margin: float = 10.0) -> None:
    """Polyline rendering of a trace, y-flipped to screen coordinates."""
    pts = np.asarray(points, dtype=complex)
    x = pts.real
    y = pts.imag
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = float(y.min()), float(y.max())
    span_x = max(x1 - x0, 1e-12)
    span_y = max(y1 - y0, 1e-12)
    scale = (width - 2 * margin) / span_x
    height = span_y * scale + 2 * margin
    sx = margin + (x - x0) * scale
    sy = height - margin - (y - y0) * scale
    coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(sx, sy))
    with open(path, "w", encoding="utf-8") as f:
        f.write(f'<svg xmlns="http://www.w3.org/2000/svg" '
                f'viewBox="0 0 {width} {height:.2f}">\n')
        f.write(f'<polyline points="{coords}" fill="none" '
                f'stroke="black" stroke-width="0.6"/>\n</svg>\n')


def build_report(directory) -> str:
    """Markdown table aggregating every *_fit.json under a directory."""
    rows = []
    for name in sorted(os.listdir(directory)):
        if not name.endswith("_fit.json"):
            continue
        with open(os.path.join(directory, name), encoding="utf-8") as f:
            data = json.load(f)
        fit = data.get("fit", {})
        rows.append((
            data.get("experiment", name),
            data.get("kappa", float("nan")),
            data.get("reference_exponent", float("nan")),
            fit.get("slope", data.get("fitted_exponent", float("nan"))),
            fit.get("stderr", float("nan")),
            bool(data.get("passed", False)),
        ))
    rows.sort(key=lambda r: (str(r[0]), float(r[1])))
    lines = [
        "| experiment | kappa | paper exponent | fitted exponent | stderr | pass |",
        "|---|---|---|---|---|---|",
    ]

    def g(v):
        return f"{v:g}" if isinstance(v, (int, float)) and np.isfinite(v) else "-"

    for exp, kappa, ref, fitted, stderr, ok in rows:
        lines.append(f"| {exp} | {g(kappa)} | {g(ref)} | {g(fitted)} | {g(stderr)} | "
                     f"{'pass' if ok else 'FAIL'} |")
    return "\n".join(lines) + "\n"
