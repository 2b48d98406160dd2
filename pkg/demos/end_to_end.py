"""A complete desk-scale experiment, from clip generation to the report.

Runs the full pipeline at a reduced size (64 x 64 frames, 64-dim encoder,
80 clips) so it finishes in well under a minute: generate the dataset once,
then train and evaluate the probe under every post-processing mode and
frame-gap condition, with the pooled vector crossing the simulated link in
all three wire formats.  Writes the same report files the command line
interface produces and prints the summary.

The command-line equivalent at full dataset size is:

    semv2x e2e --config <file> --out-dir out

Run from the repository root:

    python3 demos/end_to_end.py
"""

import os
from dataclasses import replace

from semv2x.config import default_config
from semv2x.pipeline import run_e2e
from semv2x.probe import TrainSpec
from semv2x.reports import save_report, write_report_files

OUT_DIR = os.path.join(os.path.dirname(__file__), "out", "e2e")


def desk_config():
    cfg = default_config()
    return replace(
        cfg,
        clip=replace(cfg.clip, height_px=64, width_px=64),
        encoder=replace(cfg.encoder, embed_dim=64, depth=2),
        data=replace(cfg.data, n_safe=60, n_collision=20),
        train=TrainSpec(epochs=40, lr=3e-3, batch_size=8, seed=0),
    )


def main():
    cfg = desk_config()
    report = run_e2e(cfg, log=print)

    save_report(report, OUT_DIR)
    paths = write_report_files(report, OUT_DIR)
    print()
    for p in paths:
        print(f"wrote {p}")

    print()
    with open(os.path.join(OUT_DIR, "summary.txt"), "r", encoding="utf-8") as fh:
        print(fh.read())


if __name__ == "__main__":
    main()
