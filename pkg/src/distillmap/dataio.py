"""File formats: prediction tables, run artifacts, trace/rejection/confusion CSV.

The run artifact is a single self-contained JSON document the viewer can load
without a backend. Floats are serialized through ``repr`` (via the json
module), so every number round-trips bit-exactly.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import List, Optional

import numpy as np

from .confidence import RejectionCurve
from .contour import ContourSet
from .fidelity import MetricsReport
from .model_core import EmbeddingTable, PredictionTable, StudentParams

ARTIFACT_VERSION = "1"


class ParseError(ValueError):
    """Input file violates the expected schema; message names the line."""


# ---------------------------------------------------------------------------
# prediction tables

def load_predictions(path, fmt: Optional[str] = None) -> PredictionTable:
    """Load teacher predictions from CSV or JSONL (inferred from extension)."""
    fmt = fmt or ("jsonl" if str(path).endswith((".jsonl", ".ndjson")) else "csv")
    if fmt == "csv":
        return _load_csv(path)
    if fmt == "jsonl":
        return _load_jsonl(path)
    raise ValueError(f"unknown predictions format {fmt!r}")


def _gate_row(probs_row, line_no: int) -> None:
    if any(v < 0 for v in probs_row):
        raise ParseError(f"line {line_no}: negative probability")
    total = sum(probs_row)
    # strict gate plus an ulp of slack so a stated 0.999 boundary row passes
    if abs(total - 1.0) - 1e-3 > 1e-12:
        raise ParseError(f"line {line_no}: probabilities sum to {total:.6g}, not 1")


def _load_csv(path) -> PredictionTable:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("line 1: empty file") from None
        cols = {name: i for i, name in enumerate(header)}
        p_cols = []
        k = 0
        while f"p{k}" in cols:
            p_cols.append(cols[f"p{k}"])
            k += 1
        if k < 2:
            raise ParseError("line 1: header must contain columns p0..p{K-1}")
        l_cols = [cols[f"l{i}"] for i in range(k) if f"l{i}" in cols]
        if l_cols and len(l_cols) != k:
            raise ParseError("line 1: logit columns l0..l{K-1} are incomplete")
        id_col = cols.get("id")
        label_col = cols.get("label")

        probs, labels, logits, ids = [], [], [], []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ParseError(
                    f"line {line_no}: expected {len(header)} fields, found {len(row)}"
                )
            try:
                p = [float(row[i]) for i in p_cols]
                lg = [float(row[i]) for i in l_cols] if l_cols else None
                label = int(row[label_col]) if label_col is not None and row[label_col] != "" else None
            except ValueError as exc:
                raise ParseError(f"line {line_no}: {exc}") from None
            _gate_row(p, line_no)
            probs.append(p)
            logits.append(lg)
            labels.append(label)
            ids.append(row[id_col] if id_col is not None else str(line_no - 2))
    return _assemble_table(probs, labels, logits, ids)


def _load_jsonl(path) -> PredictionTable:
    probs, labels, logits, ids = [], [], [], []
    with open(path) as fh:
        k = None
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"line {line_no}: {exc.msg}") from None
            if "probs" not in obj:
                raise ParseError(f"line {line_no}: missing 'probs'")
            p = [float(v) for v in obj["probs"]]
            if k is None:
                k = len(p)
                if k < 2:
                    raise ParseError(f"line {line_no}: need at least two classes")
            elif len(p) != k:
                raise ParseError(
                    f"line {line_no}: expected {k} probabilities, found {len(p)}"
                )
            _gate_row(p, line_no)
            lg = obj.get("logits")
            if lg is not None and len(lg) != k:
                raise ParseError(f"line {line_no}: logits length mismatch")
            probs.append(p)
            logits.append([float(v) for v in lg] if lg is not None else None)
            labels.append(int(obj["label"]) if obj.get("label") is not None else None)
            ids.append(str(obj.get("id", len(ids))))
    return _assemble_table(probs, labels, logits, ids)


def _assemble_table(probs, labels, logits, ids) -> PredictionTable:
    if not probs:
        raise ParseError("line 1: no data rows")
    probs = np.asarray(probs, dtype=float)
    have_labels = [l for l in labels if l is not None]
    label_arr = None
    if len(have_labels) == len(labels):
        label_arr = np.asarray(labels, dtype=np.int64)
    logit_arr = None
    if all(lg is not None for lg in logits):
        logit_arr = np.asarray(logits, dtype=float)
    return PredictionTable.ingest(
        probs, labels=label_arr, logits=logit_arr, row_ids=tuple(ids)
    )


def save_predictions(table: PredictionTable, path, fmt: Optional[str] = None) -> None:
    """Write a table back out, full float precision; re-loadable by load_predictions."""
    fmt = fmt or ("jsonl" if str(path).endswith((".jsonl", ".ndjson")) else "csv")
    if fmt == "csv":
        header = ["id"] + [f"p{i}" for i in range(table.n_classes)]
        if table.labels is not None:
            header.append("label")
        if table.logits is not None:
            header += [f"l{i}" for i in range(table.n_classes)]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i in range(table.n_rows):
                row = [table.row_ids[i]] + [repr(float(v)) for v in table.probs[i]]
                if table.labels is not None:
                    row.append(int(table.labels[i]))
                if table.logits is not None:
                    row += [repr(float(v)) for v in table.logits[i]]
                writer.writerow(row)
    elif fmt == "jsonl":
        with open(path, "w") as fh:
            for i in range(table.n_rows):
                obj = {"id": table.row_ids[i], "probs": [float(v) for v in table.probs[i]]}
                if table.labels is not None:
                    obj["label"] = int(table.labels[i])
                if table.logits is not None:
                    obj["logits"] = [float(v) for v in table.logits[i]]
                fh.write(json.dumps(obj) + "\n")
    else:
        raise ValueError(f"unknown predictions format {fmt!r}")


# ---------------------------------------------------------------------------
# auxiliary CSV formats

def write_trace_csv(trace, path) -> None:
    trace.to_csv(path)


def write_rejection_csv(curve: RejectionCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fraction", "accuracy"])
        for f, a in zip(curve.fractions, curve.accuracies):
            writer.writerow([repr(float(f)), repr(float(a))])


def write_confusion_csv(matrix: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.asarray(matrix, dtype=np.int64):
            writer.writerow([int(v) for v in row])


def read_confusion_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[int(v) for v in row] for row in csv.reader(fh) if row]
    return np.asarray(rows, dtype=np.int64)


# ---------------------------------------------------------------------------
# run artifact

TOP_PROBS = 5


@dataclass
class RunArtifact:
    """Everything the viewer needs, assembled from a finished run."""

    version: str
    seed: int
    config: dict
    classes: List[str]
    points: List[dict]
    student: dict
    metrics: dict
    contours: List[dict] = field(default_factory=list)
    created: Optional[str] = None

    def to_json_dict(self) -> dict:
        return {
            "version": self.version,
            "seed": self.seed,
            "config": self.config,
            "classes": self.classes,
            "points": self.points,
            "student": self.student,
            "metrics": self.metrics,
            "contours": self.contours,
            "created": self.created,
        }

    @property
    def embeddings(self) -> np.ndarray:
        return np.array([[p["x"], p["y"]] for p in self.points])


def build_artifact(
    preds: PredictionTable,
    emb: EmbeddingTable,
    params: StudentParams,
    metrics: Optional[MetricsReport] = None,
    conf_scores: Optional[dict] = None,
    contours: Optional[List[ContourSet]] = None,
    classes: Optional[List[str]] = None,
    seed: int = 0,
    config: Optional[dict] = None,
    deterministic: bool = False,
) -> RunArtifact:
    if preds.n_rows != emb.n_rows:
        raise ValueError("prediction table and embedding are not aligned")
    k = preds.n_classes
    classes = list(classes) if classes else [str(i) for i in range(k)]
    if len(classes) != k:
        raise ValueError("class name list must have K entries")
    conf_scores = conf_scores or {}
    teacher_argmax = np.argmax(preds.probs, axis=1)
    top_idx = np.argsort(-preds.probs, axis=1, kind="stable")[:, :TOP_PROBS]

    points = []
    for i in range(preds.n_rows):
        top = [[int(j), float(preds.probs[i, j])] for j in top_idx[i]]
        other = float(max(0.0, 1.0 - sum(p for _, p in top)))
        points.append(
            {
                "id": preds.row_ids[i],
                "x": float(emb.points[i, 0]),
                "y": float(emb.points[i, 1]),
                "pred": int(teacher_argmax[i]),
                "label": int(preds.labels[i]) if preds.labels is not None else None,
                "top": top,
                "other": other,
                "conf": {name: float(s[i]) for name, s in conf_scores.items()},
            }
        )
    student = {
        "means": params.means.tolist(),
        "scales": params.scales.tolist(),
        "nu": params.dof,
        "prior": params.prior_logits.tolist(),
    }
    contour_dicts = []
    for cs in contours or []:
        if isinstance(cs, ContourSet):
            contour_dicts.append(
                {
                    "level": cs.level,
                    "paths": [
                        [[float(x), float(y)] for x, y in poly] for poly in cs.polylines
                    ],
                }
            )
        else:
            contour_dicts.append(cs)
    if isinstance(metrics, MetricsReport):
        metrics_doc = metrics.to_json_dict()
    else:
        metrics_doc = dict(metrics) if metrics else {}
    created = None if deterministic else datetime.now(timezone.utc).isoformat()
    return RunArtifact(
        version=ARTIFACT_VERSION,
        seed=seed,
        config=config or {},
        classes=classes,
        points=points,
        student=student,
        metrics=metrics_doc,
        contours=contour_dicts,
        created=created,
    )


def export_run(artifact: RunArtifact, path) -> None:
    try:
        with open(path, "w") as fh:
            # allow_nan=False: a non-finite number would serialize as
            # Infinity/NaN, which strict JSON parsers (the viewer) reject
            json.dump(artifact.to_json_dict(), fh, allow_nan=False)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write artifact to {path}: {exc}") from exc


def load_artifact(path) -> RunArtifact:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read artifact from {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}: {exc.msg}") from None
    for key in ("version", "seed", "config", "classes", "points", "student", "metrics"):
        if key not in obj:
            raise ParseError(f"artifact is missing the {key!r} field")
    return RunArtifact(
        version=obj["version"],
        seed=obj["seed"],
        config=obj["config"],
        classes=obj["classes"],
        points=obj["points"],
        student=obj["student"],
        metrics=obj["metrics"],
        contours=obj.get("contours", []),
        created=obj.get("created"),
    )


# ---------------------------------------------------------------------------
# fitted-model state (intermediate between CLI stages)

def save_model(path, emb: EmbeddingTable, params: StudentParams, config: dict) -> None:
    doc = {
        "config": config,
        "embeddings": emb.points.tolist(),
        "means": params.means.tolist(),
        "scales": params.scales.tolist(),
        "nu": params.dof,
        "prior": params.prior_logits.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        doc = json.load(fh)
    emb = EmbeddingTable(points=np.asarray(doc["embeddings"], dtype=float))
    params = StudentParams(
        means=np.asarray(doc["means"], dtype=float),
        scales=np.asarray(doc["scales"], dtype=float),
        dof=float(doc["nu"]),
        prior_logits=np.asarray(doc["prior"], dtype=float),
    )
    return emb, params, doc.get("config", {})
