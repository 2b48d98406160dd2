"""One clip per road layout and label, saved as viewable image files.

Generates a collision and a safe clip for each of the four layouts, prints
their ground truth (length, impact frame, minimum inter-vehicle distance),
and writes the frames under demos/out/gallery/ as PGM images plus one
strip per post-processing mode so the transforms can be eyeballed.

Run from the repository root:

    python3 demos/scenario_gallery.py
"""

import os

import numpy as np

from semv2x.netpbm import write_pgm
from semv2x.scenario import (
    ClipLabel, Layout, PostMode, WorldSpec, apply_post, generate_scenario,
    save_clip,
)

OUT_DIR = os.path.join(os.path.dirname(__file__), "out", "gallery")
SIDE_PX = 96


def min_distance(clip):
    a, b = clip.trajectories[0], clip.trajectories[1]
    return float(np.hypot(*(a - b).T).min())


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    print(f"writing clips to {OUT_DIR}")
    print(f"{'layout':<12} {'label':<10} {'frames':>6} {'impact':>7} "
          f"{'min dist m':>11}")

    sample = None
    for n, layout in enumerate(Layout):
        world = WorldSpec(layout=layout)
        for kind in (ClipLabel.COLLISION, ClipLabel.SAFE):
            clip = generate_scenario(world, kind, seed=10 + n,
                                     height_px=SIDE_PX, width_px=SIDE_PX)
            name = f"{layout.value}_{kind.value}"
            save_clip(clip, os.path.join(OUT_DIR, name))
            impact = ("-" if clip.collision_frame is None
                      else str(clip.collision_frame))
            print(f"{layout.value:<12} {kind.value:<10} {clip.n_frames:>6} "
                  f"{impact:>7} {min_distance(clip):>11.2f}")
            if sample is None:
                sample = clip

    # the same frame under each post-processing transform
    print()
    print("post-processing the final frame of the first clip:")
    last = sample.n_frames - 1
    for mode in PostMode:
        shown = apply_post(sample, mode)
        frame = shown.frames[last]
        path = os.path.join(OUT_DIR, f"post_{mode.value}.pgm")
        write_pgm(path, frame)
        nz = int((frame > 0).sum())
        print(f"  {mode.value:<8} nonzero px {nz:>5}  "
              f"intensities {sorted(set(np.unique(frame).tolist()))[:6]}")


if __name__ == "__main__":
    main()
