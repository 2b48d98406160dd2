"""Experiment pipeline: metrics, static tables, conditions, reports, CLI."""

import csv
import json
from dataclasses import replace

import numpy as np
import pytest

from semv2x.cli import main
from semv2x.config import (
    LinkSpec, Modulation, ValidationError, default_config, loads_config,
)
from semv2x.pipeline import (
    GAP_SWEEP, METRICS_CSV_COLUMNS, POSITIVE_CLASS, ConfusionMatrix,
    build_config_dataset, compute_metrics, condition_plan, config_digest,
    f1_score, flops_rows, label_class, latency_rows, payload_rows,
    run_condition, run_e2e,
)
from semv2x.probe import TrainSpec
from semv2x.reports import (
    load_report, report_from_dict, report_to_dict, save_report,
    write_metrics_csv, write_report_files,
)
from semv2x.scenario import ClipLabel, PostMode


def tiny_config(**data_over):
    """Desk-scale config: small frames, thin encoder, few clips."""
    cfg = default_config()
    data = dict(n_safe=4, n_collision=3, gap=4, seed=0)
    data.update(data_over)
    return replace(
        cfg,
        clip=replace(cfg.clip, height_px=32, width_px=32),
        encoder=replace(cfg.encoder, embed_dim=16, depth=1),
        data=replace(cfg.data, **data),
        train=TrainSpec(epochs=2, lr=3e-3, batch_size=4, seed=0),
    )


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def test_confusion_matrix_from_pairs():
    cm = ConfusionMatrix.from_pairs([1, 1, 0, 0, 1], [1, 0, 0, 1, 1])
    assert (cm.tp, cm.fn, cm.tn, cm.fp) == (2, 1, 1, 1)
    assert cm.total == 5
    with pytest.raises(ValueError):
        ConfusionMatrix.from_pairs([1, 0], [1])


def test_metrics_on_a_regular_matrix():
    m = compute_metrics(ConfusionMatrix(tp=6, fp=2, tn=10, fn=2))
    assert m["accuracy"] == pytest.approx(16 / 20)
    assert m["precision"] == pytest.approx(6 / 8)
    assert m["recall"] == pytest.approx(6 / 8)
    assert m["f1"] == pytest.approx(0.75)


def test_all_negative_all_correct_is_perfect():
    # no positives anywhere: nothing was missed, nothing was false
    m = compute_metrics(ConfusionMatrix(tn=7))
    assert m == {"accuracy": 1.0, "precision": 1.0, "recall": 1.0, "f1": 1.0}


def test_degenerate_precision_and_recall():
    # predicted nothing positive but missed some: precision collapses to 0
    m = compute_metrics(ConfusionMatrix(tn=5, fn=2))
    assert m["precision"] == 0.0 and m["recall"] == 0.0 and m["f1"] == 0.0
    # no actual positives but some false alarms: recall collapses to 0
    m = compute_metrics(ConfusionMatrix(tn=5, fp=2))
    assert m["recall"] == 0.0
    assert m["precision"] == 0.0
    assert m["accuracy"] == pytest.approx(5 / 7)


def test_metrics_validate_counts():
    with pytest.raises(ValueError):
        compute_metrics(ConfusionMatrix())
    with pytest.raises(ValueError):
        compute_metrics(ConfusionMatrix(tp=-1, tn=2))


def test_f1_hand_values():
    assert f1_score(0.0, 0.0) == 0.0
    assert f1_score(0.5, 0.5) == pytest.approx(0.5)
    assert f1_score(1.0, 0.5) == pytest.approx(2 / 3)


def test_label_class_mapping():
    assert label_class(ClipLabel.COLLISION) == POSITIVE_CLASS == 1
    assert label_class(ClipLabel.SAFE) == 0


# ---------------------------------------------------------------------------
# Static tables
# ---------------------------------------------------------------------------

def test_config_digest_is_stable_sha256():
    cfg = default_config()
    d = config_digest(cfg)
    assert len(d) == 64 and set(d) <= set("0123456789abcdef")
    assert d == config_digest(cfg)
    assert d != config_digest(replace(cfg, data=replace(cfg.data, seed=1)))


def test_payload_rows_cover_both_modes_and_lengths():
    rows = payload_rows(default_config())
    assert len(rows) == 12   # 2 modes x 2 lengths x 3 formats
    pooled = {(r["n_frames"], r["format"]): r for r in rows
              if r["mode"] == "pooled"}
    assert pooled[(64, "FP32")]["raw_bytes"] == 805306368
    assert pooled[(64, "FP32")]["sem_bytes"] == 5120
    assert pooled[(64, "FP32")]["ratio"] == 157286.4
    assert pooled[(33, "INT8")]["raw_bytes"] == 415236096
    assert pooled[(33, "INT8")]["sem_bytes"] == 1280
    tokens = {(r["n_frames"], r["format"]): r for r in rows
              if r["mode"] == "tokens"}
    # 33 frames align down to 32 before tokenization: 16 * 24 * 24 tokens
    assert tokens[(33, "FP32")]["sem_bytes"] == 9216 * 1280 * 4
    assert tokens[(64, "INT8")]["sem_bytes"] == 18432 * 1280 * 1


def test_latency_rows_standard_points_and_custom_link():
    rows = latency_rows(default_config())
    assert len(rows) == 6    # two standard links x three formats
    pairs = {(r["modulation"], r["snr_db"]) for r in rows}
    assert pairs == {("BPSK", 12.0), ("QAM16", 22.0)}
    cfg = replace(default_config(),
                  link=LinkSpec(snr_db=15.0, modulation=Modulation.QAM16))
    rows = latency_rows(cfg)
    assert len(rows) == 9
    assert ("QAM16", 15.0) in {(r["modulation"], r["snr_db"]) for r in rows}


def test_flops_rows_match_csv_schema():
    rows = flops_rows(default_config())
    assert len(rows) == 1
    assert set(rows[0]) == {"L", "D", "L_e", "r", "C", "F_enc", "F_probe",
                            "F_probe_eff", "F_total", "M_enc_elems",
                            "t_infer_ms"}
    assert rows[0]["L"] == 18432
    assert rows[0]["F_enc"] / rows[0]["F_total"] > 0.99


def test_condition_plan_defaults():
    plan = condition_plan(default_config())   # post=mask, gap=8
    assert plan == [
        (PostMode.NONE, 8), (PostMode.HEATMAP, 8),
        (PostMode.MASK, 8), (PostMode.HYBRID, 8),
        (PostMode.MASK, 4), (PostMode.MASK, 12),
    ]
    assert GAP_SWEEP == (4, 8, 12)


def test_condition_plan_deduplicates():
    cfg = tiny_config(gap=4)
    plan = condition_plan(cfg)
    assert len(plan) == 6
    assert len(set(plan)) == 6
    assert (PostMode.MASK, 4) in plan


# ---------------------------------------------------------------------------
# Conditions and the full experiment
# ---------------------------------------------------------------------------

def test_run_condition_on_a_tiny_split():
    cfg = tiny_config()
    split = build_config_dataset(cfg, post=PostMode.NONE, gap=0)
    assert len(split.train) == 3 + 2    # round(0.8 * 4), round(0.8 * 3)
    assert len(split.test) == 1 + 1
    result = run_condition(cfg, split, PostMode.MASK, 4)
    assert result.post is PostMode.MASK and result.gap == 4
    assert result.n_train == 5 and result.n_test == 2
    assert len(result.loss_history) == cfg.train.epochs
    assert set(result.metrics) == {"fp32", "fp16", "int8"}
    assert result.agreement["fp32"] == 1.0
    ids = [p["clip_id"] for p in result.predictions]
    assert ids == sorted(ids)
    for key, cm in result.cms.items():
        assert cm.total == 2
        assert 0.0 <= result.metrics[key]["f1"] <= 1.0


def test_run_condition_probe_at_vehicle_mode():
    cfg = tiny_config()
    split = build_config_dataset(cfg, post=PostMode.NONE, gap=0)
    result = run_condition(cfg, split, PostMode.NONE, 0, probe_at_vehicle=True)
    assert result.n_test == 2
    assert result.agreement["fp32"] == 1.0
    # FP16 token transport is numerically mild; predictions stay comparable
    assert 0.0 <= result.agreement["int8"] <= 1.0


def test_invalid_config_is_rejected_before_running():
    cfg = replace(tiny_config(), data=replace(tiny_config().data, n_safe=0))
    with pytest.raises(ValidationError):
        run_e2e(cfg)


def test_run_e2e_report_structure_and_round_trip(tmp_path):
    cfg = tiny_config()
    lines = []
    report = run_e2e(cfg, log=lines.append)
    assert [(c.post, c.gap) for c in report.conditions] == condition_plan(cfg)
    assert report.config_hash == config_digest(cfg)
    assert report.seed == cfg.data.seed
    assert not report.probe_at_vehicle
    assert len(report.payload_rows) == 12
    assert any("generated" in line for line in lines)
    assert sum("condition" in line for line in lines) == 6

    # dict / JSON round-trips reproduce the report exactly
    d = report_to_dict(report)
    assert report_to_dict(report_from_dict(d)) == d
    assert report_to_dict(report_from_dict(json.loads(json.dumps(d)))) == d

    save_report(report, tmp_path)
    loaded = load_report(tmp_path)
    assert report_to_dict(loaded) == d
    assert load_report(tmp_path / "report.json").config_hash == report.config_hash


def test_report_files_are_deterministic(tmp_path):
    cfg = tiny_config()
    report = run_e2e(cfg)
    dir_a, dir_b = tmp_path / "a", tmp_path / "b"
    paths_a = write_report_files(report, dir_a)
    paths_b = write_report_files(report, dir_b)
    names = [p.split("/")[-1] for p in paths_a]
    assert names == ["config.ini", "payload.csv", "latency.csv", "flops.csv",
                     "metrics.csv", "predictions.csv", "summary.txt"]
    for pa, pb in zip(paths_a, paths_b):
        with open(pa, "rb") as fa, open(pb, "rb") as fb:
            assert fa.read() == fb.read()


def test_metrics_csv_reparses_to_exact_floats(tmp_path):
    cfg = tiny_config()
    report = run_e2e(cfg)
    path = tmp_path / "metrics.csv"
    write_metrics_csv(report, path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0].keys()) == METRICS_CSV_COLUMNS
    assert len(rows) == 6 * 3
    by_key = {(c.post.value, c.gap): c for c in report.conditions}
    for row in rows:
        c = by_key[(row["post"], int(row["gap"]))]
        fmt = row["format"]
        assert float(row["accuracy"]) == c.metrics[fmt]["accuracy"]
        assert float(row["f1"]) == c.metrics[fmt]["f1"]
        assert float(row["agree_with_fp32"]) == c.agreement[fmt]
        assert int(row["tp"]) == c.cms[fmt].tp


def test_config_text_in_report_reloads(tmp_path):
    report = run_e2e(tiny_config())
    cfg = loads_config(report.config_text)
    assert config_digest(cfg) == report.config_hash


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

TINY_INI = """
[clip]
height_px = 32
width_px = 32

[encoder]
embed_dim = 16
depth = 1

[train]
epochs = 2
lr = 0.003
batch_size = 4

[data]
n_safe = 4
n_collision = 3
gap = 4
"""


@pytest.fixture()
def tiny_ini(tmp_path):
    path = tmp_path / "tiny.ini"
    path.write_text(TINY_INI)
    return str(path)


def test_cli_static_tables(tmp_path, capsys):
    out = str(tmp_path / "out")
    assert main(["payload", "--out-dir", out]) == 0
    assert main(["latency", "--out-dir", out]) == 0
    assert main(["flops", "--out-dir", out]) == 0
    for name in ("payload.csv", "latency.csv", "flops.csv"):
        assert (tmp_path / "out" / name).exists()
    text = capsys.readouterr().out
    assert "157286.4" in text
    assert "[pass]" in text


def test_cli_gen_writes_clips_and_splits(tmp_path, tiny_ini, capsys):
    out = tmp_path / "gen"
    code = main(["gen", "--config", tiny_ini, "--out-dir", str(out),
                 "--post", "hybrid", "--gap", "4"])
    assert code == 0
    lines = (out / "splits.txt").read_text().strip().splitlines()
    assert len(lines) == 7
    assert all(line.split()[0] in ("train", "test") for line in lines)
    some_id = lines[0].split()[1]
    assert (out / "clips" / some_id / "manifest.txt").exists()
    assert (out / "clips" / some_id / "frame_0000.pgm").exists()
    assert (out / "config.ini").exists()


def test_cli_train_writes_checkpoint(tmp_path, tiny_ini, capsys):
    out = tmp_path / "train"
    assert main(["train", "--config", tiny_ini, "--out-dir", str(out)]) == 0
    assert (out / "probe.bin").exists()
    log = (out / "train_log.csv").read_text().splitlines()
    assert log[0] == "epoch,mean_loss"
    assert len(log) == 1 + 2


def test_cli_e2e_and_report_render(tmp_path, tiny_ini, capsys):
    out = tmp_path / "e2e"
    assert main(["e2e", "--config", tiny_ini, "--out-dir", str(out),
                 "--seed", "1"]) == 0
    for name in ("report.json", "config.ini", "payload.csv", "latency.csv",
                 "flops.csv", "metrics.csv", "predictions.csv", "summary.txt",
                 "run.log"):
        assert (out / name).exists(), name
    report = load_report(out)
    assert report.seed == 1

    # re-render from the JSON snapshot reproduces every table byte for byte
    before = {name: (out / name).read_bytes()
              for name in ("payload.csv", "metrics.csv", "summary.txt")}
    assert main(["report", "--out-dir", str(out)]) == 0
    for name, blob in before.items():
        assert (out / name).read_bytes() == blob


def test_cli_probe_at_vehicle_flag(tmp_path, tiny_ini, capsys):
    out = tmp_path / "veh"
    assert main(["e2e", "--config", tiny_ini, "--out-dir", str(out),
                 "--probe-at-vehicle"]) == 0
    assert load_report(out).probe_at_vehicle is True
    summary = (out / "summary.txt").read_text()
    assert "vehicle (tokens cross the link)" in summary


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[nonsense]\nkey = 1\n")
    assert main(["payload", "--config", str(bad),
                 "--out-dir", str(tmp_path)]) == 2
    assert main(["payload", "--config", str(tmp_path / "missing.ini"),
                 "--out-dir", str(tmp_path)]) == 2
    assert main(["report", "--out-dir", str(tmp_path / "nowhere")]) == 3
    err = capsys.readouterr().err
    assert "config error" in err
    assert "error:" in err


def test_cli_seed_override_applies_to_both_stages(tmp_path, tiny_ini, capsys):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["train", "--config", tiny_ini, "--out-dir", str(out_a),
                 "--seed", "5"]) == 0
    assert main(["train", "--config", tiny_ini, "--out-dir", str(out_b),
                 "--seed", "5"]) == 0
    assert (out_a / "probe.bin").read_bytes() == (out_b / "probe.bin").read_bytes()
    cfg_text = (out_a / "config.ini").read_text()
    assert "seed = 5" in cfg_text
