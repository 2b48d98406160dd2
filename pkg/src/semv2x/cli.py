"""Command-line front end.

Subcommands map one-to-one onto the library entry points: the static tables
(payload, latency, flops), dataset generation, probe training, the full
experiment, and report re-rendering.  Exit codes: 0 on success, 2 for
configuration problems, 3 for runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from dataclasses import replace

from . import pipeline, reports
from .config import (
    ConfigError, ExperimentConfig, QuantFormat, SchemaError, default_config,
    load_config,
)
from .costs import write_flops_csv
from .encoder import encode_stub
from .link import write_latency_csv
from .probe import init_params, save_params, train_probe
from .scenario import PostMode, align_length, save_clip

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semv2x",
        description="Semantic V2X collision-prediction simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, post_gap=False, quant=False):
        p.add_argument("--config", metavar="PATH",
                       help="INI config file; defaults apply when omitted")
        p.add_argument("--seed", type=int,
                       help="master seed override (dataset and training)")
        p.add_argument("--out-dir", default="out", metavar="DIR",
                       help="output directory (default: ./out)")
        if post_gap:
            p.add_argument("--post",
                           choices=[m.value for m in PostMode],
                           help="post-processing mode override")
            p.add_argument("--gap", type=int, choices=(0, 4, 8, 12),
                           help="frame-gap override")
        if quant:
            p.add_argument("--quant", choices=("fp32", "fp16", "int8"),
                           help="nominal link format override")

    common(sub.add_parser("payload", help="raw vs semantic payload table"))
    common(sub.add_parser("latency", help="link latency table"))
    common(sub.add_parser("flops", help="compute cost table"))
    common(sub.add_parser("gen", help="generate the labeled clip dataset"),
           post_gap=True)
    common(sub.add_parser("train", help="train the attentive probe"),
           post_gap=True)
    e2e = sub.add_parser("e2e", help="full experiment with report")
    common(e2e, post_gap=True, quant=True)
    e2e.add_argument("--probe-at-vehicle", action="store_true",
                     help="transmit all tokens and pool at the vehicle")

    rep = sub.add_parser("report", help="re-render tables from report.json")
    rep.add_argument("--out-dir", default="out", metavar="DIR",
                     help="directory holding report.json")
    return parser


def _load_cfg(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        try:
            cfg = load_config(args.config)
        except OSError as exc:
            raise SchemaError(f"cannot read config {args.config}: {exc}") from exc
    else:
        cfg = default_config()
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg,
                      data=replace(cfg.data, seed=args.seed),
                      train=replace(cfg.train, seed=args.seed))
    if getattr(args, "post", None):
        cfg = replace(cfg, data=replace(cfg.data, post=PostMode(args.post)))
    if getattr(args, "gap", None) is not None:
        cfg = replace(cfg, data=replace(cfg.data, gap=args.gap))
    if getattr(args, "quant", None):
        cfg = replace(cfg, quant=QuantFormat[args.quant.upper()])
    pipeline._require_valid(cfg)
    return cfg


def _ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _cmd_payload(args) -> int:
    cfg = _load_cfg(args)
    rows = pipeline.payload_rows(cfg)
    out = os.path.join(_ensure_dir(args.out_dir), "payload.csv")
    reports.write_payload_csv(rows, out)
    for row in rows:
        print(f"{row['mode']:<7} n={row['n_frames']:<3} {row['format']}: "
              f"{row['sem_bytes']} B, ratio {row['ratio']:.10g}")
    print(f"wrote {out}")
    return 0


def _cmd_latency(args) -> int:
    cfg = _load_cfg(args)
    rows = pipeline.latency_rows(cfg)
    out = os.path.join(_ensure_dir(args.out_dir), "latency.csv")
    write_latency_csv(rows, out)
    for row in rows:
        flag = "pass" if row["meets_deadline"] else "MISS"
        print(f"{row['modulation']} {row['snr_db']:.6g} dB, {row['format']}: "
              f"{row['latency_ms']:.4g} ms [{flag}]")
    print(f"wrote {out}")
    return 0


def _cmd_flops(args) -> int:
    cfg = _load_cfg(args)
    rows = pipeline.flops_rows(cfg)
    out = os.path.join(_ensure_dir(args.out_dir), "flops.csv")
    write_flops_csv(rows, out)
    for row in rows:
        print(f"L={row['L']} D={row['D']}: total {row['F_total']} FLOPs, "
              f"encoder share {row['F_enc'] / row['F_total']:.6f}, "
              f"t_infer {row['t_infer_ms']:.4g} ms")
    print(f"wrote {out}")
    return 0


def _cmd_gen(args) -> int:
    cfg = _load_cfg(args)
    split = pipeline.build_config_dataset(cfg)
    out_dir = _ensure_dir(args.out_dir)
    clips_dir = _ensure_dir(os.path.join(out_dir, "clips"))
    lines = []
    for name, clips in (("train", split.train), ("test", split.test)):
        for clip in clips:
            save_clip(clip, os.path.join(clips_dir, clip.clip_id))
            lines.append(f"{name} {clip.clip_id}")
    with open(os.path.join(out_dir, "splits.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    from .config import save_config
    save_config(cfg, os.path.join(out_dir, "config.ini"))
    print(f"wrote {len(split.train)} train / {len(split.test)} test clips "
          f"to {clips_dir}")
    return 0


def _cmd_train(args) -> int:
    cfg = _load_cfg(args)
    out_dir = _ensure_dir(args.out_dir)
    split = pipeline.build_config_dataset(cfg)

    dataset = []
    for clip in split.train:
        aligned = align_length(clip, cfg.tokenizer.tubelet_frames)
        tokens = encode_stub(aligned, cfg.tokenizer, cfg.encoder.embed_dim,
                             cfg.data.seed)
        dataset.append((tokens, pipeline.label_class(clip.label)))

    params = init_params(cfg.encoder.embed_dim, cfg.probe.n_classes,
                         cfg.probe.hidden_dim, seed=cfg.data.seed)
    params, history = train_probe(params, dataset, cfg.train)

    ckpt = os.path.join(out_dir, "probe.bin")
    save_params(params, ckpt)
    with open(os.path.join(out_dir, "train_log.csv"), "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("epoch", "mean_loss"))
        for i, loss in enumerate(history):
            writer.writerow((i, repr(loss)))
    from .config import save_config
    save_config(cfg, os.path.join(out_dir, "config.ini"))
    print(f"trained on {len(dataset)} clips; "
          f"loss {history[0]:.4f} -> {history[-1]:.4f}; wrote {ckpt}")
    return 0


def _cmd_e2e(args) -> int:
    cfg = _load_cfg(args)
    out_dir = _ensure_dir(args.out_dir)
    log_path = os.path.join(out_dir, "run.log")
    t0 = time.perf_counter()
    with open(log_path, "w", encoding="utf-8") as log_fh:
        def emit(line):
            log_fh.write(line + "\n")
            log_fh.flush()
            print(line)

        report = pipeline.run_e2e(
            cfg, probe_at_vehicle=args.probe_at_vehicle, log=emit)
        reports.save_report(report, out_dir)
        reports.write_report_files(report, out_dir)
        emit(f"report written to {out_dir} "
             f"in {time.perf_counter() - t0:.2f} s total")
    return 0


def _cmd_report(args) -> int:
    report = reports.load_report(args.out_dir)
    paths = reports.write_report_files(report, args.out_dir)
    for p in paths:
        print(f"wrote {p}")
    return 0


_COMMANDS = {
    "payload": _cmd_payload,
    "latency": _cmd_latency,
    "flops": _cmd_flops,
    "gen": _cmd_gen,
    "train": _cmd_train,
    "e2e": _cmd_e2e,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
