"""Synthetic traffic scenarios with ground-truth labels.

A scenario is two vehicles moving along lane paths in a small square world.
Collision clips are constructed so the vehicles reach a common conflict point
nearly simultaneously, and the clip ends on the frame where their distance
first drops below the collision threshold.  Safe clips keep the vehicles at
least twice the collision threshold apart at every frame.  Everything is a
pure function of (world, kind, seed), so generation is reproducible and
embarrassingly parallel across seeds.

Frames are rasterized on a fixed intensity palette (background 40, road 110,
vehicles 230) with the road mask and tight per-vehicle pixel boxes as ground
truth, replacing an external object detector.  The three post-processing
transforms operate on those ground-truth regions.
"""

from __future__ import annotations

import configparser
import enum
import math
import os
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import netpbm

__all__ = [
    "Layout", "PostMode", "ClipLabel", "WorldSpec", "VehicleState",
    "LanePath", "ScenarioClip", "DatasetSplit",
    "BACKGROUND_INTENSITY", "ROAD_INTENSITY", "VEHICLE_INTENSITY",
    "generate_scenario", "detect_collision", "rasterize",
    "apply_binary_mask", "apply_heatmap", "apply_hybrid", "apply_post",
    "cap_length", "frame_gap_trim", "align_length", "build_dataset",
    "save_clip", "load_clip",
]

BACKGROUND_INTENSITY = 40
ROAD_INTENSITY = 110
VEHICLE_INTENSITY = 230

# Urban speed envelope for generated vehicles (m/s).
SPEED_MIN = 4.5
SPEED_MAX = 9.0

VEHICLE_SIZE_M = (4.4, 1.8)  # length, width

DEFAULT_MAX_FRAMES = 64
GENERATION_ATTEMPTS = 100
_HARD_CAP_FRAMES = 96  # simulation horizon before capping


class Layout(enum.Enum):
    FOUR_WAY = "four_way"
    THREE_WAY = "three_way"
    SIDE_ROAD = "side_road"
    ROUNDABOUT = "roundabout"


class PostMode(enum.Enum):
    NONE = "none"
    HEATMAP = "heatmap"
    MASK = "mask"
    HYBRID = "hybrid"


class ClipLabel(enum.Enum):
    COLLISION = "collision"
    SAFE = "safe"


@dataclass(frozen=True)
class WorldSpec:
    """Square world hosting one road layout."""

    extent_m: float = 48.0
    layout: Layout = Layout.FOUR_WAY
    lane_width_m: float = 4.0
    collision_dist_m: float = 2.0


class LanePath:
    """Piecewise-linear lane with arc-length parameterization.

    Open paths extrapolate along their end segments, so positions are defined
    for any arc length; closed paths (the roundabout ring) wrap around.
    """

    def __init__(self, points, closed: bool = False):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
            raise ValueError(f"need at least two 2-D points, got {pts.shape}")
        seg = np.diff(pts, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(seg_len == 0):
            raise ValueError("degenerate zero-length segment")
        self.points = pts
        self.closed = closed
        self._seg = seg
        self._seg_len = seg_len
        self._cum = np.concatenate([[0.0], np.cumsum(seg_len)])

    @property
    def length(self) -> float:
        return float(self._cum[-1])

    def _locate(self, s):
        s = np.asarray(s, dtype=np.float64)
        if self.closed:
            s = np.mod(s, self.length)
        idx = np.clip(np.searchsorted(self._cum, s, side="right") - 1,
                      0, len(self._seg_len) - 1)
        frac = (s - self._cum[idx]) / self._seg_len[idx]
        return idx, frac

    def position(self, s) -> np.ndarray:
        """World position at arc length ``s`` (scalar or array)."""
        idx, frac = self._locate(s)
        return self.points[idx] + frac[..., None] * self._seg[idx]

    def heading(self, s) -> np.ndarray:
        """Tangent direction (radians) at arc length ``s``."""
        idx, _ = self._locate(s)
        return np.arctan2(self._seg[idx, 1], self._seg[idx, 0])


@dataclass
class VehicleState:
    """Pose of one vehicle at one frame."""

    pos: tuple[float, float]
    vel: tuple[float, float]
    size: tuple[float, float] = VEHICLE_SIZE_M
    heading_rad: float = 0.0
    path: Optional[LanePath] = None


@dataclass
class ScenarioClip:
    """Rendered clip plus every piece of ground truth about it.

    ``frames`` is (N, H, W) uint8 for grayscale or (N, H, W, 3) for RGB.
    ``collision_frame`` indexes into ``frames`` and is only set while the
    collision is actually depicted; trimming the pre-collision window clears
    it and records the removed count in ``gap``.
    """

    frames: np.ndarray
    label: ClipLabel
    collision_frame: Optional[int]
    road_mask: np.ndarray
    boxes_per_frame: list
    fps: int = 20
    seed: int = 0
    post: PostMode = PostMode.NONE
    gap: int = 0
    clip_id: str = ""
    trajectories: Optional[np.ndarray] = None  # (n_vehicles, N, 2) meters

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


@dataclass
class DatasetSplit:
    """Stratified train/test partition of generated clips."""

    train: list
    test: list


# ---------------------------------------------------------------------------
# Layout geometry
# ---------------------------------------------------------------------------

def _layout_geometry(world: WorldSpec):
    """Conflicting lane paths for a layout.

    Junction layouts return (path_a, path_b, s_a, s_b) where the arc lengths
    locate the shared conflict point on each path.  The roundabout returns
    its closed ring; both vehicles circulate on it.
    """
    e = world.extent_m
    c = e / 2.0
    lw = world.lane_width_m
    ext = 0.2 * e  # entry extension beyond the world edge

    if world.layout is Layout.ROUNDABOUT:
        radius = 0.27 * e
        ang = np.linspace(0.0, 2.0 * math.pi, 97)
        ring = LanePath(
            np.stack([c + radius * np.cos(ang), c + radius * np.sin(ang)], axis=1),
            closed=True,
        )
        return ring

    y_a = c - lw / 2.0     # eastbound lane
    if world.layout is Layout.FOUR_WAY:
        x_b = c + lw / 2.0  # northbound lane
        path_a = LanePath([(-ext, y_a), (e + ext, y_a)])
        path_b = LanePath([(x_b, -ext), (x_b, e + ext)])
        s_a = ext + x_b
        s_b = ext + y_a
    elif world.layout is Layout.THREE_WAY:
        x_b = c + lw / 2.0
        turn_y = c + lw / 2.0
        path_a = LanePath([(-ext, y_a), (e + ext, y_a)])
        path_b = LanePath([(x_b, -ext), (x_b, turn_y), (-ext, turn_y)])
        s_a = ext + x_b
        s_b = ext + y_a
    elif world.layout is Layout.SIDE_ROAD:
        x_b = 0.7 * e
        turn_y = c + lw / 2.0
        path_a = LanePath([(-ext, y_a), (e + ext, y_a)])
        path_b = LanePath([(x_b, -ext), (x_b, turn_y), (-ext, turn_y)])
        s_a = ext + x_b
        s_b = ext + y_a
    else:
        raise ValueError(f"unknown layout {world.layout}")
    return path_a, path_b, s_a, s_b


def _road_mask_for(world: WorldSpec, height_px: int, width_px: int) -> np.ndarray:
    e = world.extent_m
    c = e / 2.0
    lw = world.lane_width_m
    xc = (np.arange(width_px) + 0.5) * (e / width_px)
    yc = (np.arange(height_px) + 0.5) * (e / height_px)
    xg, yg = np.meshgrid(xc, yc)

    if world.layout is Layout.FOUR_WAY:
        return (np.abs(yg - c) <= lw) | (np.abs(xg - c) <= lw)
    if world.layout is Layout.THREE_WAY:
        return (np.abs(yg - c) <= lw) | ((np.abs(xg - c) <= lw) & (yg <= c))
    if world.layout is Layout.SIDE_ROAD:
        x_b = 0.7 * e
        return (np.abs(yg - c) <= lw) | ((np.abs(xg - x_b) <= 0.6 * lw) & (yg <= c))
    if world.layout is Layout.ROUNDABOUT:
        radius = 0.27 * e
        r = np.hypot(xg - c, yg - c)
        ring = np.abs(r - radius) <= 0.6 * lw
        spur_h = (np.abs(yg - c) <= 0.5 * lw) & ((xg <= c - radius) | (xg >= c + radius))
        spur_v = (np.abs(xg - c) <= 0.5 * lw) & ((yg <= c - radius) | (yg >= c + radius))
        return ring | spur_h | spur_v
    raise ValueError(f"unknown layout {world.layout}")


# ---------------------------------------------------------------------------
# Kinematics and collision detection
# ---------------------------------------------------------------------------

def detect_collision(trajectories: np.ndarray, threshold_m: float) -> Optional[int]:
    """Earliest frame where any pairwise center distance drops below the
    threshold (strict inequality), or None."""
    traj = np.asarray(trajectories, dtype=np.float64)
    if traj.ndim != 3 or traj.shape[0] < 2:
        raise ValueError("need trajectories shaped (n_vehicles, n_frames, 2)")
    n_veh = traj.shape[0]
    hit = np.zeros(traj.shape[1], dtype=bool)
    for i in range(n_veh):
        for j in range(i + 1, n_veh):
            d = np.hypot(*(traj[i] - traj[j]).T)
            hit |= d < threshold_m
    idx = np.flatnonzero(hit)
    return int(idx[0]) if idx.size else None


def _pairwise_min_distance(traj: np.ndarray) -> float:
    best = math.inf
    for i in range(traj.shape[0]):
        for j in range(i + 1, traj.shape[0]):
            d = np.hypot(*(traj[i] - traj[j]).T)
            best = min(best, float(d.min()))
    return best


def _simulate(paths, offsets, speeds, n_frames: int, fps: int):
    """Constant-speed motion along each path; returns positions and headings."""
    t = np.arange(n_frames) / fps
    traj = np.empty((len(paths), n_frames, 2))
    head = np.empty((len(paths), n_frames))
    for k, (path, s0, v) in enumerate(zip(paths, offsets, speeds)):
        s = s0 + v * t
        traj[k] = path.position(s)
        head[k] = path.heading(s)
    return traj, head


# ---------------------------------------------------------------------------
# Rasterization
# ---------------------------------------------------------------------------

def _draw_vehicle(img: np.ndarray, world: WorldSpec, state: VehicleState):
    """Fill the vehicle's oriented rectangle; returns the tight pixel box
    (x0, y0, x1, y1), half-open, or None when fully outside the frame."""
    height_px, width_px = img.shape
    sx = world.extent_m / width_px
    sy = world.extent_m / height_px
    x, y = state.pos
    half_len = state.size[0] / 2.0
    half_wid = state.size[1] / 2.0
    reach = math.hypot(half_len, half_wid)

    j0 = max(0, math.floor((x - reach) / sx))
    j1 = min(width_px, math.ceil((x + reach) / sx) + 1)
    i0 = max(0, math.floor((y - reach) / sy))
    i1 = min(height_px, math.ceil((y + reach) / sy) + 1)
    if j0 >= j1 or i0 >= i1:
        return None

    jj = np.arange(j0, j1)
    ii = np.arange(i0, i1)
    dx = (jj + 0.5) * sx - x
    dy = (ii + 0.5) * sy - y
    cos_t = math.cos(state.heading_rad)
    sin_t = math.sin(state.heading_rad)
    u = dx[None, :] * cos_t + dy[:, None] * sin_t
    v = -dx[None, :] * sin_t + dy[:, None] * cos_t
    inside = (np.abs(u) <= half_len) & (np.abs(v) <= half_wid)
    if not inside.any():
        return None

    img[i0:i1, j0:j1][inside] = VEHICLE_INTENSITY
    rows = ii[inside.any(axis=1)]
    cols = jj[inside.any(axis=0)]
    return (int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1)


def rasterize(
    world: WorldSpec,
    states_per_frame: Sequence[Sequence[VehicleState]],
    height_px: int,
    width_px: int,
    channels: int = 1,
):
    """Render frames on the fixed palette.

    Returns (frames, road_mask, boxes_per_frame).  Vehicles outside the world
    are clipped to the frame; the road mask is the road geometry itself,
    independent of anything drawn on top of it.
    """
    road_mask = _road_mask_for(world, height_px, width_px)
    template = np.where(road_mask, ROAD_INTENSITY, BACKGROUND_INTENSITY).astype(np.uint8)

    n = len(states_per_frame)
    frames = np.empty((n, height_px, width_px), dtype=np.uint8)
    boxes_per_frame = []
    for f, states in enumerate(states_per_frame):
        img = template.copy()
        boxes = []
        for state in states:
            box = _draw_vehicle(img, world, state)
            if box is not None:
                boxes.append(box)
        frames[f] = img
        boxes_per_frame.append(boxes)

    if channels == 3:
        frames = np.repeat(frames[..., None], 3, axis=3)
    elif channels != 1:
        raise ValueError(f"channels must be 1 or 3, got {channels}")
    return frames, road_mask, boxes_per_frame


# ---------------------------------------------------------------------------
# Post-processing transforms
# ---------------------------------------------------------------------------

def _check_frame_mask(frame: np.ndarray, road_mask: np.ndarray) -> None:
    if frame.shape[:2] != road_mask.shape:
        raise ValueError(
            f"frame {frame.shape} and road mask {road_mask.shape} disagree")


def apply_binary_mask(frame: np.ndarray, road_mask: np.ndarray) -> np.ndarray:
    """Zero every pixel outside the road; on-road pixels pass through."""
    _check_frame_mask(frame, road_mask)
    mask = road_mask if frame.ndim == 2 else road_mask[..., None]
    return np.where(mask, frame, 0).astype(np.uint8)


def _region_map(shape, road_mask, boxes):
    # 0 = background, 1 = road, 2 = vehicle; priority vehicle > road > bg
    region = np.zeros(shape, dtype=np.uint8)
    region[road_mask] = 1
    for (x0, y0, x1, y1) in boxes:
        region[y0:y1, x0:x1] = 2
    return region


def apply_heatmap(
    frame: np.ndarray,
    road_mask: np.ndarray,
    boxes,
    g_vehicle: float = 1.5,
    g_road: float = 1.0,
    g_bg: float = 0.3,
) -> np.ndarray:
    """Rescale intensities per region: vehicles boosted, background damped.

    Pixels map to clamp(round(pixel * gain), 0, 255) with half-up rounding.
    """
    _check_frame_mask(frame, road_mask)
    if min(g_vehicle, g_road, g_bg) < 0:
        raise ValueError("gains must be non-negative")
    region = _region_map(road_mask.shape, road_mask, boxes)
    gain = np.choose(region, [g_bg, g_road, g_vehicle])
    if frame.ndim == 3:
        gain = gain[..., None]
    scaled = np.floor(frame.astype(np.float64) * gain + 0.5)
    return np.clip(scaled, 0, 255).astype(np.uint8)


def apply_hybrid(
    frame: np.ndarray,
    road_mask: np.ndarray,
    boxes,
    g_vehicle: float = 1.5,
) -> np.ndarray:
    """Boost vehicles, keep the road as-is, and zero everything off-road."""
    boosted = apply_heatmap(frame, road_mask, boxes,
                            g_vehicle=g_vehicle, g_road=1.0, g_bg=0.0)
    return apply_binary_mask(boosted, road_mask)


def apply_post(clip: ScenarioClip, mode: PostMode, **gains) -> ScenarioClip:
    """Apply one transform to every frame of a clip; NONE copies through."""
    if mode is PostMode.NONE:
        return replace(clip, post=PostMode.NONE)
    out = np.empty_like(clip.frames)
    for f in range(clip.n_frames):
        if mode is PostMode.MASK:
            out[f] = apply_binary_mask(clip.frames[f], clip.road_mask)
        elif mode is PostMode.HEATMAP:
            out[f] = apply_heatmap(clip.frames[f], clip.road_mask,
                                   clip.boxes_per_frame[f], **gains)
        elif mode is PostMode.HYBRID:
            out[f] = apply_hybrid(clip.frames[f], clip.road_mask,
                                  clip.boxes_per_frame[f], **gains)
        else:
            raise ValueError(f"unknown post mode {mode}")
    return replace(clip, frames=out, post=mode)


# ---------------------------------------------------------------------------
# Length protocols
# ---------------------------------------------------------------------------

def cap_length(clip: ScenarioClip, max_frames: int = DEFAULT_MAX_FRAMES) -> ScenarioClip:
    """Keep only the last ``max_frames`` frames, dropping from the beginning;
    the collision index is shifted accordingly."""
    if max_frames < 1:
        raise ValueError("max_frames must be >= 1")
    drop = clip.n_frames - max_frames
    if drop <= 0:
        return clip
    cf = clip.collision_frame
    if cf is not None:
        cf = cf - drop
        if cf < 0:
            raise ValueError("capping would remove the collision frame")
    traj = clip.trajectories[:, drop:] if clip.trajectories is not None else None
    return replace(
        clip,
        frames=clip.frames[drop:],
        collision_frame=cf,
        boxes_per_frame=clip.boxes_per_frame[drop:],
        trajectories=traj,
    )


def frame_gap_trim(clip: ScenarioClip, gap: int) -> ScenarioClip:
    """Remove the final ``gap`` frames of a collision clip so the collision
    itself is no longer depicted; the label stays COLLISION and the task
    becomes predicting the imminent event."""
    if clip.label is not ClipLabel.COLLISION:
        raise ValueError("frame-gap trimming applies to collision clips only")
    if gap == 0:
        return clip
    if gap < 0 or gap >= clip.n_frames:
        raise ValueError(f"gap {gap} outside [0, {clip.n_frames})")
    keep = clip.n_frames - gap
    traj = clip.trajectories[:, :keep] if clip.trajectories is not None else None
    return replace(
        clip,
        frames=clip.frames[:keep],
        collision_frame=None,  # the event now lies past the end of the clip
        boxes_per_frame=clip.boxes_per_frame[:keep],
        trajectories=traj,
        gap=clip.gap + gap,
    )


def align_length(clip: ScenarioClip, multiple: int) -> ScenarioClip:
    """Drop leading frames until the length divides ``multiple`` (tokenizer
    tubelets need this); a no-op when it already does."""
    if multiple < 1:
        raise ValueError("multiple must be >= 1")
    drop = clip.n_frames % multiple
    if drop == 0:
        return clip
    return cap_length(clip, clip.n_frames - drop)


# ---------------------------------------------------------------------------
# Scenario generation
# ---------------------------------------------------------------------------

class _Infeasible(Exception):
    pass


def _states_from(traj, head, speeds, paths):
    states_per_frame = []
    for f in range(traj.shape[1]):
        states = []
        for k in range(traj.shape[0]):
            theta = float(head[k, f])
            states.append(VehicleState(
                pos=(float(traj[k, f, 0]), float(traj[k, f, 1])),
                vel=(speeds[k] * math.cos(theta), speeds[k] * math.sin(theta)),
                heading_rad=theta,
                path=paths[k],
            ))
        states_per_frame.append(states)
    return states_per_frame


def _generate_once(world, kind, rng, height_px, width_px, channels, fps, max_frames):
    cd = world.collision_dist_m
    geom = _layout_geometry(world)

    if world.layout is Layout.ROUNDABOUT:
        ring = geom
        circ = ring.length
        if kind is ClipLabel.COLLISION:
            # rear-end geometry: the chasing vehicle closes on a slower one
            v_front = rng.uniform(SPEED_MIN, SPEED_MAX - 2.5)
            closing = rng.uniform(2.0, 3.5)
            t_star = rng.uniform(1.6, 2.8)
            gap0 = closing * t_star + 0.5 * cd
            s0 = rng.uniform(0.0, circ)
            paths = (ring, ring)
            offsets = (s0, s0 + gap0)
            speeds = (v_front + closing, v_front)
            n_raw = _HARD_CAP_FRAMES
        else:
            if circ <= 12.0:
                raise _Infeasible("ring too small to hold a safe gap")
            v = rng.uniform(SPEED_MIN, SPEED_MAX)
            gap0 = rng.uniform(6.0, circ - 6.0)
            s0 = rng.uniform(0.0, circ)
            paths = (ring, ring)
            offsets = (s0, s0 + gap0)
            speeds = (v, v)
            n_raw = int(rng.integers(26, 41)) * 2  # even, 52..80
    else:
        path_a, path_b, s_a, s_b = geom
        v_a = rng.uniform(SPEED_MIN, SPEED_MAX)
        v_b = rng.uniform(SPEED_MIN, SPEED_MAX)
        paths = (path_a, path_b)
        speeds = (v_a, v_b)
        if kind is ClipLabel.COLLISION:
            t_star = rng.uniform(1.6, 2.8)
            dt_off = rng.uniform(-0.04, 0.04)
            offsets = (s_a - v_a * t_star, s_b - v_b * (t_star + dt_off))
            n_raw = _HARD_CAP_FRAMES
        else:
            n_raw = int(rng.integers(26, 41)) * 2  # even, 52..80
            duration = n_raw / fps
            t_cross = rng.uniform(0.35, 0.6) * duration
            dt_off = rng.uniform(0.9, 1.9) * (1 if rng.random() < 0.5 else -1)
            offsets = (s_a - v_a * t_cross, s_b - v_b * (t_cross + dt_off))

    if min(offsets) < -0.6 * world.extent_m:
        raise _Infeasible("start offset too far outside the world")

    traj, head = _simulate(paths, offsets, speeds, n_raw, fps)

    if kind is ClipLabel.COLLISION:
        col = detect_collision(traj, cd)
        if col is None or col < 10:
            raise _Infeasible("no usable collision in the horizon")
        traj, head = traj[:, :col + 1], head[:, :col + 1]
        collision_frame = col
    else:
        if _pairwise_min_distance(traj) < 2.25 * cd:
            raise _Infeasible("safe scenario passed too close")
        collision_frame = None

    states = _states_from(traj, head, speeds, paths)
    frames, road_mask, boxes = rasterize(world, states, height_px, width_px, channels)
    clip = ScenarioClip(
        frames=frames,
        label=kind,
        collision_frame=collision_frame,
        road_mask=road_mask,
        boxes_per_frame=boxes,
        fps=fps,
        trajectories=traj,
    )
    return cap_length(clip, max_frames)


def generate_scenario(
    world: WorldSpec,
    kind: ClipLabel,
    seed: int,
    *,
    height_px: int = 64,
    width_px: int = 64,
    channels: int = 1,
    fps: int = 20,
    max_frames: int = DEFAULT_MAX_FRAMES,
) -> ScenarioClip:
    """Generate one labeled clip, deterministically from (world, kind, seed).

    Infeasible draws retry with derived sub-seeds; generation fails only
    after 100 attempts (practically unreachable for sane worlds).
    """
    for attempt in range(GENERATION_ATTEMPTS):
        rng = np.random.default_rng(
            [abs(seed), attempt, int(kind is ClipLabel.COLLISION)])
        try:
            clip = _generate_once(world, kind, rng, height_px, width_px,
                                  channels, fps, max_frames)
        except _Infeasible:
            continue
        return replace(clip, seed=seed)
    raise RuntimeError(
        f"could not realize a {kind.value} scenario for seed {seed} "
        f"after {GENERATION_ATTEMPTS} attempts")


def build_dataset(
    world: WorldSpec,
    n_safe: int,
    n_collision: int,
    post: PostMode,
    gap: int,
    seed: int,
    *,
    height_px: int = 64,
    width_px: int = 64,
    channels: int = 1,
    fps: int = 20,
    max_frames: int = DEFAULT_MAX_FRAMES,
    train_frac: float = 0.8,
) -> DatasetSplit:
    """Generate a labeled clip set and split it 80/20 stratified by label.

    Collision clips are gap-trimmed before post-processing.  The split and
    the train-order shuffle derive from ``seed``; the test list is sorted by
    clip id so downstream reports are reproducible.
    """
    if n_safe < 1 or n_collision < 1:
        raise ValueError("need at least one clip of each label")
    if not 0.0 < train_frac < 1.0:
        raise ValueError("train_frac must be in (0, 1)")

    def make(kind, count, prefix):
        clips = []
        for i in range(count):
            clip = generate_scenario(
                world, kind, seed * 100003 + i,
                height_px=height_px, width_px=width_px, channels=channels,
                fps=fps, max_frames=max_frames)
            if kind is ClipLabel.COLLISION and gap > 0:
                clip = frame_gap_trim(clip, gap)
            clip = apply_post(clip, post)
            clip.clip_id = f"{prefix}_{i:04d}"
            clips.append(clip)
        return clips

    safe = make(ClipLabel.SAFE, n_safe, "safe")
    coll = make(ClipLabel.COLLISION, n_collision, "col")

    rng = np.random.default_rng([abs(seed), 7919])
    train, test = [], []
    for group in (safe, coll):
        order = rng.permutation(len(group))
        n_train = int(round(train_frac * len(group)))
        train.extend(group[i] for i in order[:n_train])
        test.extend(group[i] for i in order[n_train:])
    rng.shuffle(train)
    test.sort(key=lambda c: c.clip_id)
    return DatasetSplit(train=train, test=test)


# ---------------------------------------------------------------------------
# Clip persistence (Netpbm frames + manifest)
# ---------------------------------------------------------------------------

def save_clip(clip: ScenarioClip, directory) -> None:
    """Write one image per frame (PGM or PPM), the road mask as PBM, and a
    small manifest; trajectories and boxes stay in-memory only."""
    os.makedirs(directory, exist_ok=True)
    rgb = clip.frames.ndim == 4
    for f in range(clip.n_frames):
        name = f"frame_{f:04d}." + ("ppm" if rgb else "pgm")
        path = os.path.join(directory, name)
        if rgb:
            netpbm.write_ppm(path, clip.frames[f])
        else:
            netpbm.write_pgm(path, clip.frames[f])
    netpbm.write_pbm(os.path.join(directory, "road_mask.pbm"), clip.road_mask)

    manifest = configparser.ConfigParser(interpolation=None)
    manifest["clip"] = {
        "label": clip.label.value,
        "collision_frame": "none" if clip.collision_frame is None else str(clip.collision_frame),
        "fps": str(clip.fps),
        "post": clip.post.value,
        "seed": str(clip.seed),
        "gap": str(clip.gap),
        "clip_id": clip.clip_id,
        "n_frames": str(clip.n_frames),
    }
    with open(os.path.join(directory, "manifest.txt"), "w", encoding="utf-8") as fh:
        manifest.write(fh)


def load_clip(directory) -> ScenarioClip:
    manifest = configparser.ConfigParser(interpolation=None)
    with open(os.path.join(directory, "manifest.txt"), "r", encoding="utf-8") as fh:
        manifest.read_file(fh)
    section = manifest["clip"]
    n = section.getint("n_frames")
    cf_raw = section.get("collision_frame", "none")

    frames = []
    for f in range(n):
        pgm = os.path.join(directory, f"frame_{f:04d}.pgm")
        ppm = os.path.join(directory, f"frame_{f:04d}.ppm")
        if os.path.exists(pgm):
            frames.append(netpbm.read_pgm(pgm))
        else:
            frames.append(netpbm.read_ppm(ppm))
    road_mask = netpbm.read_pbm(os.path.join(directory, "road_mask.pbm"))

    return ScenarioClip(
        frames=np.stack(frames),
        label=ClipLabel(section.get("label")),
        collision_frame=None if cf_raw == "none" else int(cf_raw),
        road_mask=road_mask,
        boxes_per_frame=[[] for _ in range(n)],
        fps=section.getint("fps"),
        seed=section.getint("seed"),
        post=PostMode(section.get("post")),
        gap=section.getint("gap"),
        clip_id=section.get("clip_id", ""),
    )
