"""Report serialization: JSON snapshot, CSV tables, text summary.

Every byte written here is a pure function of the in-memory report, which is
itself a pure function of (config, seed); two runs with the same inputs
produce identical files.  Metric values are written with ``repr`` so that
re-parsing a CSV recovers the in-memory floats exactly; the physical tables
(latency, flops) use engineering precision instead.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict

from . import costs, link
from .pipeline import (
    METRICS_CSV_COLUMNS, PAYLOAD_CSV_COLUMNS, PREDICTIONS_CSV_COLUMNS,
    ConditionResult, ConfusionMatrix, ExperimentReport,
)
from .scenario import PostMode

__all__ = [
    "REPORT_JSON", "report_to_dict", "report_from_dict",
    "save_report", "load_report",
    "write_payload_csv", "write_metrics_csv", "write_predictions_csv",
    "write_summary", "write_report_files",
]

REPORT_JSON = "report.json"


# ---------------------------------------------------------------------------
# JSON round-trip
# ---------------------------------------------------------------------------

def _condition_to_dict(c: ConditionResult) -> dict:
    return {
        "post": c.post.value,
        "gap": c.gap,
        "n_train": c.n_train,
        "n_test": c.n_test,
        "cms": {k: asdict(v) for k, v in c.cms.items()},
        "metrics": c.metrics,
        "agreement": c.agreement,
        "predictions": c.predictions,
        "loss_history": c.loss_history,
    }


def _condition_from_dict(d: dict) -> ConditionResult:
    return ConditionResult(
        post=PostMode(d["post"]),
        gap=int(d["gap"]),
        n_train=int(d["n_train"]),
        n_test=int(d["n_test"]),
        cms={k: ConfusionMatrix(**v) for k, v in d["cms"].items()},
        metrics=d["metrics"],
        agreement=d["agreement"],
        predictions=d["predictions"],
        loss_history=d["loss_history"],
    )


def report_to_dict(report: ExperimentReport) -> dict:
    return {
        "config_hash": report.config_hash,
        "seed": report.seed,
        "probe_at_vehicle": report.probe_at_vehicle,
        "config_text": report.config_text,
        "payload_rows": report.payload_rows,
        "latency_rows": report.latency_rows,
        "flops_rows": report.flops_rows,
        "conditions": [_condition_to_dict(c) for c in report.conditions],
        "skipped": report.skipped,
    }


def report_from_dict(d: dict) -> ExperimentReport:
    return ExperimentReport(
        config_text=d["config_text"],
        config_hash=d["config_hash"],
        seed=int(d["seed"]),
        probe_at_vehicle=bool(d["probe_at_vehicle"]),
        payload_rows=d["payload_rows"],
        latency_rows=d["latency_rows"],
        flops_rows=d["flops_rows"],
        conditions=[_condition_from_dict(c) for c in d["conditions"]],
        skipped=d["skipped"],
    )


def save_report(report: ExperimentReport, out_dir) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, REPORT_JSON)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, indent=2)
        fh.write("\n")
    return path


def load_report(path) -> ExperimentReport:
    if os.path.isdir(path):
        path = os.path.join(path, REPORT_JSON)
    with open(path, "r", encoding="utf-8") as fh:
        return report_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# CSV tables
# ---------------------------------------------------------------------------

def write_payload_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PAYLOAD_CSV_COLUMNS)
        for row in rows:
            writer.writerow([
                row["mode"], row["n_frames"], row["format"],
                row["raw_bytes"], row["sem_bytes"],
                f"{row['ratio']:.10g}",
            ])


def write_metrics_csv(report: ExperimentReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_CSV_COLUMNS)
        for c in report.conditions:
            for key in ("fp32", "fp16", "int8"):
                cm = c.cms[key]
                m = c.metrics[key]
                writer.writerow([
                    c.post.value, c.gap, key, c.n_train, c.n_test,
                    cm.tp, cm.fp, cm.tn, cm.fn,
                    repr(m["accuracy"]), repr(m["precision"]),
                    repr(m["recall"]), repr(m["f1"]),
                    repr(c.agreement[key]),
                ])


def write_predictions_csv(report: ExperimentReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PREDICTIONS_CSV_COLUMNS)
        for c in report.conditions:
            for p in c.predictions:
                writer.writerow([
                    c.post.value, c.gap, p["clip_id"], p["label"],
                    p["fp32"], p["fp16"], p["int8"],
                ])


# ---------------------------------------------------------------------------
# Text summary
# ---------------------------------------------------------------------------

def write_summary(report: ExperimentReport, path) -> None:
    lines = []
    lines.append("semantic V2X experiment summary")
    lines.append(f"config sha256: {report.config_hash}")
    lines.append(f"seed: {report.seed}")
    lines.append(
        "probe placement: " +
        ("vehicle (tokens cross the link)" if report.probe_at_vehicle
         else "roadside unit (pooled vector crosses the link)"))
    lines.append("")

    lines.append("payload (pooled vector vs raw video):")
    for row in report.payload_rows:
        if row["mode"] != "pooled":
            continue
        lines.append(
            f"  {row['n_frames']:>3} frames, {row['format']}: "
            f"{row['sem_bytes']} B vs {row['raw_bytes']} B raw "
            f"(ratio {row['ratio']:.10g})")
    lines.append("")

    lines.append("link latency (pooled payload):")
    all_meet = True
    for row in report.latency_rows:
        flag = "pass" if row["meets_deadline"] else "MISS"
        all_meet &= bool(row["meets_deadline"])
        lines.append(
            f"  {row['modulation']} {row['snr_db']:.6g} dB, {row['format']}: "
            f"{row['latency_ms']:.4g} ms [{flag}]")
    lines.append(f"  all within {link.V2X_DEADLINE_S * 1e3:.6g} ms deadline: "
                 + ("yes" if all_meet else "no"))
    lines.append("")

    for row in report.flops_rows:
        share = row["F_enc"] / row["F_total"]
        lines.append(
            f"compute: L={row['L']} D={row['D']} depth={row['L_e']} -> "
            f"total {row['F_total']} FLOPs, encoder share {share:.6f}, "
            f"inference {row['t_infer_ms']:.4g} ms")
    lines.append("")

    lines.append("conditions (held-out metrics, positive class = collision):")
    for c in report.conditions:
        m = c.metrics["fp32"]
        lines.append(
            f"  post={c.post.value:<7} gap={c.gap:<2} "
            f"n={c.n_test}: accuracy {m['accuracy']:.4f} "
            f"precision {m['precision']:.4f} recall {m['recall']:.4f} "
            f"f1 {m['f1']:.4f} | int8 agreement {c.agreement['int8']:.4f}")
    lines.append("")

    if report.skipped:
        lines.append(f"skipped clips ({len(report.skipped)}):")
        for s in report.skipped:
            lines.append(
                f"  {s['clip_id']} [{s['post']}/gap={s['gap']}] "
                f"at {s['stage']}: {s['reason']}")
    else:
        lines.append("skipped clips: none")
    lines.append("")

    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))


def write_report_files(report: ExperimentReport, out_dir) -> list[str]:
    """Render every table; returns the written paths (deterministic order)."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []

    def target(name):
        p = os.path.join(out_dir, name)
        paths.append(p)
        return p

    with open(target("config.ini"), "w", encoding="utf-8") as fh:
        fh.write(report.config_text)
    write_payload_csv(report.payload_rows, target("payload.csv"))
    link.write_latency_csv(report.latency_rows, target("latency.csv"))
    costs.write_flops_csv(report.flops_rows, target("flops.csv"))
    write_metrics_csv(report, target("metrics.csv"))
    write_predictions_csv(report, target("predictions.csv"))
    write_summary(report, target("summary.txt"))
    return paths
