"""KITTI-format parsing and this package's own serialization formats.

Covers four text formats:

* KITTI calibration files ("P2:" followed by 12 row-major reals).
* KITTI label files (15 whitespace-separated fields plus an optional score).
* Prediction ensembles as JSONL, one object per line; lines starting with
  '#' are comments (used for config headers) and are skipped on read.
* Evaluation reports and sweep curves as JSON or CSV with deterministic
  6-significant-digit float formatting, so identical inputs produce
  byte-identical files.

Parsing is all-or-nothing: the first malformed line raises with its 1-based
line number instead of silently dropping records.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .camera import CameraIntrinsics
from .errors import MalformedLine, MalformedMatrix, MissingKey, SchemaError
from .metrics import BinnedMae, ComplementarityReport

# ---------------------------------------------------------------------------
# label objects
# ---------------------------------------------------------------------------

#: KITTI label field order after the class name.
_N_LABEL_FIELDS = 15


@dataclass(frozen=True)
class Object3D:
    """One KITTI label row.

    (x, y, z) is the bottom-face center in the camera frame (y down), so the
    top face sits at y - h. theta is the yaw around the camera y-axis.
    """

    class_name: str
    truncation: float
    occlusion: int
    alpha: float
    bbox2d: tuple[float, float, float, float]  # left, top, right, bottom
    h: float
    w: float
    l: float
    x: float
    y: float
    z: float
    theta: float
    score: float | None = None

    @property
    def is_dontcare(self) -> bool:
        return self.class_name == "DontCare"


def parse_calib_matrix(text: str, key: str = "P2") -> np.ndarray:
    """Extract a 3x4 projection matrix from a KITTI calibration file.

    Raises MissingKey when no line starts with '<key>:', MalformedMatrix on
    wrong arity or non-numeric entries.
    """
    prefix = key + ":"
    for raw in text.splitlines():
        line = raw.strip()
        if not line.startswith(prefix):
            continue
        tokens = line[len(prefix):].split()
        if len(tokens) != 12:
            raise MalformedMatrix(f"'{key}' needs 12 entries, got {len(tokens)}")
        try:
            values = [float(t) for t in tokens]
        except ValueError as exc:
            raise MalformedMatrix(f"'{key}' has a non-numeric entry: {exc}") from None
        if not all(math.isfinite(v) for v in values):
            raise MalformedMatrix(f"'{key}' has a non-finite entry")
        return np.array(values).reshape(3, 4)
    raise MissingKey(f"no '{key}:' line in calibration text")


def parse_calib(text: str, key: str = "P2") -> CameraIntrinsics:
    """Intrinsics from a KITTI calibration file.

    Reads f_x, f_y, c_u, c_v from the projection matrix; the translation
    column is validated by parse_calib_matrix but plays no role in the
    ideal-pinhole math here.
    """
    p = parse_calib_matrix(text, key)
    return CameraIntrinsics(f_x=float(p[0, 0]), f_y=float(p[1, 1]),
                            c_u=float(p[0, 2]), c_v=float(p[1, 2]))


def format_calib(k: CameraIntrinsics, key: str = "P2") -> str:
    """Calibration text with the given intrinsics and zero translation."""
    row = [k.f_x, 0.0, k.c_u, 0.0, 0.0, k.f_y, k.c_v, 0.0, 0.0, 0.0, 1.0, 0.0]
    return f"{key}: " + " ".join(str(v) for v in row) + "\n"


def parse_labels(text: str) -> list[Object3D]:
    """Parse a KITTI label file. Empty lines are skipped; 'DontCare' rows are
    kept (flagged via Object3D.is_dontcare) so indices match the file.

    Raises MalformedLine (with the 1-based line number) on wrong token count
    or unparseable numbers; nothing is returned on failure.
    """
    objects: list[Object3D] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) not in (_N_LABEL_FIELDS, _N_LABEL_FIELDS + 1):
            raise MalformedLine(
                line_no,
                f"expected {_N_LABEL_FIELDS} or {_N_LABEL_FIELDS + 1} fields, "
                f"got {len(tokens)}",
            )
        try:
            values = [float(t) for t in tokens[1:]]
        except ValueError as exc:
            raise MalformedLine(line_no, f"non-numeric field: {exc}") from None
        if not all(math.isfinite(v) for v in values):
            raise MalformedLine(line_no, "non-finite field")
        objects.append(Object3D(
            class_name=tokens[0],
            truncation=values[0],
            occlusion=int(values[1]),
            alpha=values[2],
            bbox2d=(values[3], values[4], values[5], values[6]),
            h=values[7], w=values[8], l=values[9],
            x=values[10], y=values[11], z=values[12],
            theta=values[13],
            score=values[14] if len(values) > 14 else None,
        ))
    return objects


def format_labels(objects: Iterable[Object3D]) -> str:
    """Serialize objects as KITTI label lines at full float precision, so
    parse_labels(format_labels(objs)) reproduces the values exactly."""
    lines = []
    for o in objects:
        tokens = [o.class_name, str(o.truncation), str(o.occlusion), str(o.alpha),
                  *(str(v) for v in o.bbox2d),
                  str(o.h), str(o.w), str(o.l),
                  str(o.x), str(o.y), str(o.z), str(o.theta)]
        if o.score is not None:
            tokens.append(str(o.score))
        lines.append(" ".join(tokens))
    return "\n".join(lines) + ("\n" if lines else "")


def filter_objects(objects: Iterable[Object3D], *,
                   include_dontcare: bool = False,
                   classes: Sequence[str] | None = None) -> list[Object3D]:
    """Default evaluation filter: drop DontCare rows, keep everything else."""
    kept = []
    for o in objects:
        if o.is_dontcare and not include_dontcare:
            continue
        if classes is not None and o.class_name not in classes:
            continue
        kept.append(o)
    return kept


# ---------------------------------------------------------------------------
# prediction ensembles (JSONL)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DepthBranch:
    """One depth estimate with its uncertainty."""

    name: str
    z: float
    sigma: float = 1.0

    def __post_init__(self):
        if not self.name:
            raise ValueError("branch name must be non-empty")
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be finite and positive, got {self.sigma}")
        if not math.isfinite(self.z):
            raise ValueError("z must be finite")


@dataclass(frozen=True)
class DepthEnsemble:
    """A set of per-branch depth estimates for one object.

    Identified by (frame, index); index is the 0-based line index into the
    frame's label file. z_star is the ground-truth depth when known.
    """

    frame: str
    index: int
    branches: tuple[DepthBranch, ...]
    z_star: float | None = None

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("index must be non-negative")
        names = [b.name for b in self.branches]
        if len(set(names)) != len(names):
            raise ValueError("branch names must be unique")

    @property
    def branch_names(self) -> tuple[str, ...]:
        return tuple(b.name for b in self.branches)

    def branch(self, name: str) -> DepthBranch:
        for b in self.branches:
            if b.name == name:
                return b
        raise KeyError(name)


def _require(condition: bool, line_no: int, fieldpath: str, message: str):
    if not condition:
        raise SchemaError(line_no, fieldpath, message)


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def read_predictions(source) -> list[DepthEnsemble]:
    """Read prediction ensembles from JSONL text or an iterable of lines.

    Each line is an object like
    {"frame":"000123","index":0,"z_star":20.0,
     "branches":[{"name":"dir","z":19.2,"sigma":0.8}]}.
    sigma defaults to 1.0; z_star is optional. Blank lines and lines starting
    with '#' are skipped. Raises SchemaError with the line number and field
    path on the first violation.
    """
    lines = source.splitlines() if isinstance(source, str) else source
    records: list[DepthEnsemble] = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(line_no, "", f"invalid JSON: {exc}") from None
        _require(isinstance(doc, dict), line_no, "", "record must be a JSON object")
        _require(isinstance(doc.get("frame"), str) and doc["frame"] != "",
                 line_no, "frame", "required non-empty string")
        index = doc.get("index")
        _require(isinstance(index, int) and not isinstance(index, bool) and index >= 0,
                 line_no, "index", "required non-negative integer")
        z_star = doc.get("z_star")
        if z_star is not None:
            _require(_is_number(z_star), line_no, "z_star", "must be a finite number")
        raw_branches = doc.get("branches")
        _require(isinstance(raw_branches, list) and len(raw_branches) > 0,
                 line_no, "branches", "required non-empty list")
        branches = []
        seen = set()
        for j, rb in enumerate(raw_branches):
            path = f"branches[{j}]"
            _require(isinstance(rb, dict), line_no, path, "must be an object")
            name = rb.get("name")
            _require(isinstance(name, str) and name != "",
                     line_no, f"{path}.name", "required non-empty string")
            _require(name not in seen, line_no, f"{path}.name",
                     f"duplicate branch name '{name}'")
            seen.add(name)
            z = rb.get("z")
            _require(_is_number(z), line_no, f"{path}.z", "required finite number")
            sigma = rb.get("sigma", 1.0)
            _require(_is_number(sigma) and sigma > 0, line_no, f"{path}.sigma",
                     "must be a finite positive number")
            branches.append(DepthBranch(name=name, z=float(z), sigma=float(sigma)))
        records.append(DepthEnsemble(
            frame=doc["frame"], index=index, branches=tuple(branches),
            z_star=float(z_star) if z_star is not None else None,
        ))
    return records


def write_predictions(records: Iterable[DepthEnsemble],
                      header: dict | None = None) -> str:
    """Serialize ensembles as JSONL at full float precision, so
    read_predictions(write_predictions(records)) round-trips exactly.

    A header dict becomes a leading '# {...}' comment line.
    """
    out = []
    if header is not None:
        out.append("# " + json.dumps(header, sort_keys=True))
    for r in records:
        doc: dict = {"frame": r.frame, "index": r.index}
        if r.z_star is not None:
            doc["z_star"] = r.z_star
        doc["branches"] = [
            {"name": b.name, "z": b.z, "sigma": b.sigma} for b in r.branches
        ]
        out.append(json.dumps(doc, separators=(",", ":")))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# reports and sweep curves
# ---------------------------------------------------------------------------

def _fmt6(x: float) -> str:
    """Fixed 6-significant-digit text for floats ('inf' for infinities)."""
    return f"{x:.6g}"


def _round6(x: float | None):
    if x is None:
        return None
    return float(f"{x:.6g}")


def _edge_json(e: float):
    if math.isinf(e):
        return "inf" if e > 0 else "-inf"
    return e


def _edge_parse(e) -> float:
    if e == "inf":
        return math.inf
    if e == "-inf":
        return -math.inf
    return float(e)


def _header_lines(header: dict | None) -> list[str]:
    if not header:
        return []
    return [f"# {k}: {header[k]}" for k in sorted(header)]


def write_report(report: ComplementarityReport, format: str = "json",
                 header: dict | None = None) -> str:
    """Serialize an evaluation report as JSON or CSV.

    Floats are written at 6 significant digits and fields in a fixed order,
    so the same report always produces byte-identical text. The optional
    header dict is echoed at the top (a "header" object in JSON, '# key:
    value' comment lines in CSV).
    """
    if format == "json":
        return _report_json(report, header)
    if format == "csv":
        return _report_csv(report, header)
    raise ValueError(f"unknown format '{format}' (expected 'json' or 'csv')")


def _report_json(report: ComplementarityReport, header: dict | None) -> str:
    doc: dict = {}
    if header is not None:
        doc["header"] = {k: header[k] for k in sorted(header)}
    doc["n_objects"] = report.n_objects
    doc["reference"] = report.reference
    doc["branches"] = [
        {
            "name": name,
            "count": report.branch_counts[name],
            "mae": _round6(report.branch_mae.get(name)),
            "cs": _round6(report.branch_cs.get(name)),
        }
        for name in report.branch_names
    ]
    doc["esop"] = [
        {"a": a, "b": b, "value": _round6(v)}
        for (a, b), v in sorted(report.esop.items())
    ]
    doc["fused"] = {"count": report.fused_count, "mae": _round6(report.fused_mae)}
    doc["binned"] = [
        {
            "name": name,
            "edges": [_edge_json(e) for e in table.edges],
            "mae": [_round6(v) for v in table.maes],
            "counts": list(table.counts),
        }
        for name, table in sorted(report.binned.items())
    ]
    doc["flags"] = list(report.flags)
    return json.dumps(doc, indent=2) + "\n"


def _report_csv(report: ComplementarityReport, header: dict | None) -> str:
    buf = io.StringIO()
    for line in _header_lines(header):
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["metric", "branch", "other", "bin_lo", "bin_hi", "value", "count"])

    def row(metric, branch="", other="", bin_lo="", bin_hi="", value="", count=""):
        writer.writerow([metric, branch, other, bin_lo, bin_hi, value, count])

    row("n_objects", count=report.n_objects)
    row("reference", branch=report.reference or "")
    for name in report.branch_names:
        m = report.branch_mae.get(name)
        row("mae", branch=name, value="" if m is None else _fmt6(m),
            count=report.branch_counts[name])
    for name in report.branch_names:
        cs = report.branch_cs.get(name)
        if name == report.reference:
            continue
        row("cs", branch=name, other=report.reference or "",
            value="" if cs is None else _fmt6(cs))
    for (a, b), v in sorted(report.esop.items()):
        row("esop", branch=a, other=b, value=_fmt6(v))
    row("fused_mae", value="" if report.fused_mae is None else _fmt6(report.fused_mae),
        count=report.fused_count)
    for name, table in sorted(report.binned.items()):
        for i in range(len(table.counts)):
            m = table.maes[i]
            row("binned_mae", branch=name,
                bin_lo=_fmt6(table.edges[i]), bin_hi=_fmt6(table.edges[i + 1]),
                value="" if m is None else _fmt6(m), count=table.counts[i])
    for flag in report.flags:
        row("flag", branch=flag)
    return buf.getvalue()


def read_report(text: str) -> ComplementarityReport:
    """Parse a JSON report written by write_report back into a report object."""
    doc = json.loads(text)
    branch_names = tuple(b["name"] for b in doc["branches"])
    return ComplementarityReport(
        n_objects=doc["n_objects"],
        reference=doc["reference"],
        branch_names=branch_names,
        branch_mae={b["name"]: b["mae"] for b in doc["branches"] if b["mae"] is not None},
        branch_counts={b["name"]: b["count"] for b in doc["branches"]},
        esop={(e["a"], e["b"]): e["value"] for e in doc["esop"]},
        branch_cs={b["name"]: b["cs"] for b in doc["branches"]},
        fused_mae=doc["fused"]["mae"],
        fused_count=doc["fused"]["count"],
        binned={
            t["name"]: BinnedMae(
                edges=tuple(_edge_parse(e) for e in t["edges"]),
                maes=tuple(t["mae"]),
                counts=tuple(t["counts"]),
            )
            for t in doc["binned"]
        },
        flags=tuple(doc["flags"]),
    )


def write_curves(curves, header: dict | None = None) -> str:
    """Serialize sweep curves as CSV with columns label,x,mae,count,baseline_mae.

    baseline_mae repeats per row of its curve (blank when the curve has
    none). Floats use 6 significant digits; the optional header dict is
    echoed as '# key: value' comment lines.
    """
    buf = io.StringIO()
    for line in _header_lines(header):
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["label", "x", "mae", "count", "baseline_mae"])
    for curve in curves:
        base = "" if curve.baseline_mae is None else _fmt6(curve.baseline_mae)
        for x, m, c in zip(curve.x, curve.mae, curve.counts):
            writer.writerow([curve.label, _fmt6(x), _fmt6(m), c, base])
    return buf.getvalue()
