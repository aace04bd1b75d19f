"""Canonical file schemas and loaders/writers.

CSV schemas (UTF-8, '.' decimal separator, all listed headers mandatory):

* quality log:    content_id, gop_index, bitrate_kbps, width, height, vqm_score
* scored points:  content_id, resolution, bitrate_kbps, subjective_jod, objective_score
                  (resolution formatted as WxH)
* feature log:    content_id, gop_index, bitrate_kbps, width, height,
                  then free-named feature columns; an optional label_jod
                  column is treated as the training label, never as a
                  feature.

Feature-log ingestion derives log_bitrate_kbps and log_pixels (natural
logs) from the identity columns and prepends them to the schema, so the
default base-model features are available without extra tooling.

Ladder JSON: {"rungs": [{"bitrate_kbps": N, "resolutions": [[w, h], ...]}]}.
Bitrates are stored in kbps; pass units="mbps" to convert on ingestion.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import CsvSchemaError, InputError
from .ladder import LadderSolution, ProbabilityTable, QualityLog
from .rcql import RcqlReport, ScoredPoint
from .vqm import FeatureSchema, GopRecord

__all__ = [
    "QUALITY_LOG_COLUMNS",
    "SCORED_POINT_COLUMNS",
    "FEATURE_LOG_ID_COLUMNS",
    "LABEL_COLUMN",
    "unit_scale",
    "parse_resolution",
    "format_resolution",
    "load_quality_log",
    "write_quality_log",
    "load_scored_points",
    "load_feature_log",
    "write_feature_log",
    "load_ladder",
    "save_ladder",
    "ladder_entries",
    "load_ladder_or_solution",
    "solution_to_dict",
    "solution_from_dict",
    "load_weights",
    "load_bandwidth_samples",
    "manifest_to_dict",
    "save_manifest",
    "load_segment_metadata",
    "write_json",
    "write_probability_csv",
    "write_rcql_csv",
    "trace_to_dict",
    "write_trace_csv",
    "write_histogram_csv",
    "write_cv_rows_csv",
]

QUALITY_LOG_COLUMNS = ("content_id", "gop_index", "bitrate_kbps", "width", "height", "vqm_score")
SCORED_POINT_COLUMNS = ("content_id", "resolution", "bitrate_kbps", "subjective_jod", "objective_score")
FEATURE_LOG_ID_COLUMNS = ("content_id", "gop_index", "bitrate_kbps", "width", "height")
LABEL_COLUMN = "label_jod"
DERIVED_FEATURES = ("log_bitrate_kbps", "log_pixels")


def unit_scale(units: str) -> float:
    if units == "kbps":
        return 1.0
    if units == "mbps":
        return 1000.0
    raise InputError(f"unknown bitrate units {units!r} (expected kbps or mbps)")


def parse_resolution(text: str, row: int | None = None) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise CsvSchemaError(f"resolution {text!r} is not WxH", row)
    try:
        w, h = int(parts[0]), int(parts[1])
    except ValueError:
        raise CsvSchemaError(f"resolution {text!r} is not WxH", row) from None
    if w <= 0 or h <= 0:
        raise CsvSchemaError(f"resolution {text!r} must be positive", row)
    return w, h


def format_resolution(res) -> str:
    return f"{int(res[0])}x{int(res[1])}"


def _float(text: str, column: str, row: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise CsvSchemaError(f"column {column!r}: {text!r} is not a number", row) from None
    if not math.isfinite(v):
        raise CsvSchemaError(f"column {column!r}: {text!r} is not finite", row)
    return v


def _int(text: str, column: str, row: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise CsvSchemaError(f"column {column!r}: {text!r} is not an integer", row) from None


def _read_rows(path, required: tuple[str, ...], exact: bool = True):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header is None:
            raise CsvSchemaError("file is empty (no header row)", 1)
        missing = [c for c in required if c not in header]
        if missing:
            raise CsvSchemaError(f"missing mandatory columns {missing}", 1)
        if exact:
            extra = [c for c in header if c not in required]
            if extra:
                raise CsvSchemaError(f"unexpected columns {extra}", 1)
        rows = []
        for i, row in enumerate(reader, start=2):
            if any(v is None for v in row.values()):
                raise CsvSchemaError("short row", i)
            rows.append((i, row))
        if not rows:
            raise CsvSchemaError("file has a header but no data rows", 2)
        return header, rows


def load_quality_log(path, units: str = "kbps") -> QualityLog:
    scale = unit_scale(units)
    _, rows = _read_rows(path, QUALITY_LOG_COLUMNS)
    records = []
    for i, row in rows:
        records.append(
            (
                row["content_id"],
                _int(row["gop_index"], "gop_index", i),
                scale * _float(row["bitrate_kbps"], "bitrate_kbps", i),
                (_int(row["width"], "width", i), _int(row["height"], "height", i)),
                _float(row["vqm_score"], "vqm_score", i),
            )
        )
    return QualityLog.from_records(records)


def write_quality_log(path, records) -> None:
    """records: iterable of (content_id, gop_index, bitrate_kbps, (w, h), score)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(QUALITY_LOG_COLUMNS)
        for content, gop, bitrate, res, score in records:
            writer.writerow([content, gop, repr(float(bitrate)), int(res[0]), int(res[1]), repr(float(score))])


def load_scored_points(path, units: str = "kbps") -> list[ScoredPoint]:
    scale = unit_scale(units)
    _, rows = _read_rows(path, SCORED_POINT_COLUMNS)
    points = []
    for i, row in rows:
        points.append(
            ScoredPoint(
                content_id=row["content_id"],
                resolution=parse_resolution(row["resolution"], i),
                bitrate_kbps=scale * _float(row["bitrate_kbps"], "bitrate_kbps", i),
                subjective_jod=_float(row["subjective_jod"], "subjective_jod", i),
                objective_score=_float(row["objective_score"], "objective_score", i),
            )
        )
    return points


def load_feature_log(path, units: str = "kbps") -> tuple[list[GopRecord], FeatureSchema]:
    """Read a feature log; returns records plus the derived schema
    (log_bitrate_kbps, log_pixels, then the file's feature columns)."""
    scale = unit_scale(units)
    header, rows = _read_rows(path, FEATURE_LOG_ID_COLUMNS, exact=False)
    feature_cols = [c for c in header if c not in FEATURE_LOG_ID_COLUMNS and c != LABEL_COLUMN]
    for c in feature_cols:
        if c in DERIVED_FEATURES:
            raise CsvSchemaError(f"column {c!r} collides with a derived feature name", 1)
    schema = FeatureSchema(DERIVED_FEATURES + tuple(feature_cols))
    has_label = LABEL_COLUMN in header
    records = []
    for i, row in rows:
        bitrate = scale * _float(row["bitrate_kbps"], "bitrate_kbps", i)
        if bitrate <= 0:
            raise CsvSchemaError(f"bitrate_kbps must be > 0, got {bitrate}", i)
        w = _int(row["width"], "width", i)
        h = _int(row["height"], "height", i)
        if w <= 0 or h <= 0:
            raise CsvSchemaError(f"width/height must be > 0, got {w}x{h}", i)
        feats = [math.log(bitrate), math.log(w * h)]
        feats += [_float(row[c], c, i) for c in feature_cols]
        label = _float(row[LABEL_COLUMN], LABEL_COLUMN, i) if has_label and row[LABEL_COLUMN] != "" else None
        records.append(
            GopRecord(
                content_id=row["content_id"],
                gop_index=_int(row["gop_index"], "gop_index", i),
                bitrate_kbps=bitrate,
                resolution=(w, h),
                features=tuple(feats),
                label_jod=label,
            )
        )
    return records, schema


def write_feature_log(path, content_id: str, rows) -> None:
    """Write bitstream feature rows (GopFeatureRow) to the feature-log CSV."""
    from .avc.features import FEATURE_COLUMNS

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(FEATURE_LOG_ID_COLUMNS) + list(FEATURE_COLUMNS))
        for r in rows:
            writer.writerow(
                [content_id, r.gop_index, repr(float(r.bitrate_kbps)), r.width, r.height]
                + [repr(v) for v in r.feature_values()]
            )


def _parse_rungs(doc: dict, units: str) -> dict[float, list[tuple[int, int]]]:
    scale = unit_scale(units)
    if "rungs" not in doc:
        raise InputError("ladder JSON must contain a 'rungs' list")
    out: dict[float, list[tuple[int, int]]] = {}
    for entry in doc["rungs"]:
        b = scale * float(entry["bitrate_kbps"])
        res = [(int(r[0]), int(r[1])) for r in entry["resolutions"]]
        if b in out:
            raise InputError(f"duplicate rung {b} in ladder")
        if not res:
            raise InputError(f"rung {b} lists no resolutions")
        out[b] = res
    if not out:
        raise InputError("ladder JSON lists no rungs")
    return out


def load_ladder(path, units: str = "kbps") -> dict[float, list[tuple[int, int]]]:
    with open(path, "r", encoding="utf-8") as fh:
        return _parse_rungs(json.load(fh), units)


def save_ladder(path, ladder: dict[float, list[tuple[int, int]]]) -> None:
    doc = {
        "rungs": [
            {"bitrate_kbps": b, "resolutions": [list(r) for r in sorted(res, key=lambda r: r[0] * r[1])]}
            for b, res in sorted(ladder.items())
        ]
    }
    write_json(path, doc)


def ladder_entries(ladder: dict[float, list[tuple[int, int]]]) -> list[tuple[float, tuple[int, int]]]:
    return [(b, r) for b in sorted(ladder) for r in sorted(ladder[b], key=lambda r: r[0] * r[1])]


def solution_to_dict(solution: LadderSolution) -> dict:
    return {
        "selected": [{"bitrate_kbps": b, "resolution": list(r)} for b, r in solution.selected],
        "objective": solution.objective,
        "trace": [
            {
                "bitrate_kbps": s.bitrate_kbps,
                "resolution": list(s.resolution),
                "gain": s.gain,
                "objective": s.objective,
            }
            for s in solution.trace
        ],
    }


def solution_from_dict(doc: dict) -> dict[float, list[tuple[int, int]]]:
    out: dict[float, list[tuple[int, int]]] = {}
    for entry in doc["selected"]:
        out.setdefault(float(entry["bitrate_kbps"]), []).append(tuple(int(v) for v in entry["resolution"]))
    return out


def load_ladder_or_solution(path, units: str = "kbps") -> dict[float, list[tuple[int, int]]]:
    """Accept either a ladder document or an optimizer solution."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if "selected" in doc:
        return solution_from_dict(doc)
    return _parse_rungs(doc, units)


def load_weights(path, units: str = "kbps") -> dict[float, float]:
    scale = unit_scale(units)
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or not doc:
        raise InputError("weights JSON must be a non-empty {bitrate: weight} object")
    return {scale * float(k): float(v) for k, v in doc.items()}


def load_bandwidth_samples(path, units: str = "kbps") -> list[float]:
    scale = unit_scale(units)
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            samples.append(scale * _float(line, "bandwidth", i))
    if not samples:
        raise InputError("bandwidth sample file has no samples")
    return samples


def manifest_to_dict(manifest) -> dict:
    return {
        "segment_index": manifest.segment_index,
        "entries": [
            {
                "bitrate_kbps": e.bitrate_kbps,
                "resolution": list(e.resolution),
                "locator": e.locator,
                "quality_score": e.quality_score,
            }
            for e in manifest.entries
        ],
    }


def save_manifest(path, manifest) -> None:
    write_json(path, manifest_to_dict(manifest))


def load_segment_metadata(path, units: str = "kbps"):
    """Read per-segment representation metadata (the packager's input):
    segment index plus one scored entry per encoded representation.
    Returns ``(segment_index, [ManifestEntry, ...])``."""
    from .drs import ManifestEntry

    scale = unit_scale(units)
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if "entries" not in doc:
        raise InputError("segment metadata JSON must contain an 'entries' list")
    entries = [
        ManifestEntry(
            bitrate_kbps=scale * float(e["bitrate_kbps"]),
            resolution=(int(e["resolution"][0]), int(e["resolution"][1])),
            locator=str(e.get("locator", "")),
            quality_score=float(e["quality_score"]),
        )
        for e in doc["entries"]
    ]
    return int(doc.get("segment_index", 0)), entries


def write_json(path, obj) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_probability_csv(path, table: ProbabilityTable) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bitrate_kbps"] + [format_resolution(r) for r in table.resolutions])
        for j, b in enumerate(table.rungs):
            writer.writerow([repr(float(b))] + [repr(float(v)) for v in table.probabilities[j]])


def write_rcql_csv(rows_path, pairs_path, report: RcqlReport) -> None:
    with open(rows_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "pair",
                "content_id",
                "delta_bitrate_kbps",
                "rcql_s",
                "rcql_avg",
                "acc_percent",
                "ql_jod",
                "subj_status",
                "obj_status",
                "subj_xover_kbps",
                "obj_xover_kbps",
                "range_lo",
                "range_hi",
                "endpoint_fallback",
            ]
        )
        for r in report.rows:
            writer.writerow(
                [
                    r.pair,
                    r.content_id,
                    repr(r.delta_bitrate_kbps),
                    repr(r.rcql_s),
                    repr(r.rcql_avg),
                    "" if r.acc_percent is None else repr(r.acc_percent),
                    "" if r.ql_jod is None else repr(r.ql_jod),
                    r.subj_status,
                    r.obj_status,
                    "" if r.subj_xover_kbps is None else repr(r.subj_xover_kbps),
                    "" if r.obj_xover_kbps is None else repr(r.obj_xover_kbps),
                    repr(r.range_lo),
                    repr(r.range_hi),
                    int(r.endpoint_fallback),
                ]
            )
    with open(pairs_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pair", "metric", "value"])
        writer.writerow(["dataset", "srocc", repr(report.srocc)])
        writer.writerow(["dataset", "plcc", repr(report.plcc)])
        for pair in sorted(report.pair_summary):
            for metric in sorted(report.pair_summary[pair]):
                writer.writerow([pair, metric, repr(report.pair_summary[pair][metric])])


def trace_to_dict(trace) -> dict:
    return {
        "granularity_gops": trace.granularity_gops,
        "rungs": [float(b) for b in trace.rungs],
        "resolutions": [list(r) for r in trace.resolutions],
        "n_gops": len(trace.gop_ids),
        "per_rung_mean_quality": [float(v) for v in trace.per_rung_mean],
        "flips": [int(v) for v in trace.flips],
        "selections": [
            {
                "content_id": trace.gop_ids[i][0],
                "gop_index": trace.gop_ids[i][1],
                "bitrate_kbps": float(trace.rungs[j]),
                "resolution": list(trace.resolutions[int(trace.chosen_res[i, j])]),
                "score": float(trace.chosen_score[i, j]),
            }
            for i in range(len(trace.gop_ids))
            for j in range(len(trace.rungs))
        ],
    }


def write_trace_csv(path, trace) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["content_id", "gop_index", "bitrate_kbps", "width", "height", "score"])
        for i, (content, gop) in enumerate(trace.gop_ids):
            for j, b in enumerate(trace.rungs):
                res = trace.resolutions[int(trace.chosen_res[i, j])]
                writer.writerow([content, gop, repr(float(b)), res[0], res[1], repr(float(trace.chosen_score[i, j]))])


def write_histogram_csv(path, bin_left, bin_right, counts) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_left", "bin_right", "count"])
        for l, r, c in zip(bin_left, bin_right, counts):
            writer.writerow([repr(float(l)), repr(float(r)), int(c)])


def write_cv_rows_csv(path, result) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "fold", "content_id", "n_records", "srocc", "rmse"])
        for r in result.rows:
            srocc = "" if np.isnan(r.srocc) else repr(r.srocc)
            writer.writerow([r.run, r.fold, r.content_id, r.n_records, srocc, repr(r.rmse)])
