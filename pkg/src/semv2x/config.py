"""Configuration records for the semantic V2X pipeline.

Every tunable quantity of the simulator lives in one of the frozen dataclasses
below; :class:`ExperimentConfig` aggregates them.  Configs are loaded from an
INI-style text file (key/value pairs grouped into sections, schema documented
in the README) and validated as a whole.  Records are immutable after load and
safe to share across threads.
"""

from __future__ import annotations

import configparser
import enum
import io
from dataclasses import dataclass, field, replace

from .probe import TrainSpec
from .scenario import Layout, PostMode, WorldSpec

__all__ = [
    "ClipSpec",
    "TokenizerSpec",
    "EncoderSpec",
    "ProbeSpec",
    "QuantFormat",
    "Modulation",
    "LinkSpec",
    "DeviceSpec",
    "DatasetSpec",
    "ExperimentConfig",
    "ConfigError",
    "SchemaError",
    "ValidationError",
    "default_config",
    "load_config",
    "loads_config",
    "save_config",
    "config_to_text",
    "validate_config",
]


class ConfigError(Exception):
    """Base class for configuration problems."""


class SchemaError(ConfigError):
    """The config file does not match the documented schema."""


class ValidationError(ConfigError):
    """A structurally valid config violates a field invariant."""


class QuantFormat(enum.Enum):
    """Element encoding used on the link; fixes the bytes-per-element."""

    FP32 = 4
    FP16 = 2
    INT8 = 1

    @property
    def bytes_per_element(self) -> int:
        return self.value


class Modulation(enum.Enum):
    BPSK = "bpsk"
    QAM16 = "qam16"


# Default SNR operating point per modulation scheme (dB).
DEFAULT_SNR_DB = {Modulation.BPSK: 12.0, Modulation.QAM16: 22.0}


@dataclass(frozen=True)
class ClipSpec:
    """Geometry of one video clip, before and after preprocessing."""

    n_frames: int = 64        # max clip length in frames
    height_px: int = 384      # preprocessed frame height
    width_px: int = 384       # preprocessed frame width
    channels: int = 1         # 3 for RGB rasterization, 1 for grayscale
    orig_height_px: int = 2048  # camera-native frame height
    orig_width_px: int = 2048   # camera-native frame width
    fps: int = 20             # frames per second


@dataclass(frozen=True)
class TokenizerSpec:
    """Spatiotemporal patching of a clip into tokens."""

    patch_px: int = 16        # square spatial patch edge
    tubelet_frames: int = 2   # temporal stride of one tubelet


@dataclass(frozen=True)
class EncoderSpec:
    """Shape of the frozen transformer encoder (cost model only)."""

    embed_dim: int = 1280     # token embedding width
    depth: int = 32           # number of transformer blocks
    mlp_ratio: float = 4.0    # feed-forward expansion ratio


@dataclass(frozen=True)
class ProbeSpec:
    """Attentive pooling probe and classifier head."""

    n_queries: int = 1        # single learnable query; must stay 1
    n_classes: int = 2        # collision / safe
    hidden_dim: int = 0       # probe MLP width; 0 means "same as embed_dim"


@dataclass(frozen=True)
class LinkSpec:
    """V2X radio link operating point."""

    bandwidth_hz: float = 20e6
    snr_db: float = 12.0
    modulation: Modulation = Modulation.BPSK


@dataclass(frozen=True)
class DeviceSpec:
    """Compute device executing encoder + probe."""

    throughput_flops: float = 1e12  # sustained FLOPs/second
    io_latency_s: float = 0.0       # per-view input/output latency
    n_views: int = 1                # spatiotemporal views per clip


@dataclass(frozen=True)
class DatasetSpec:
    """Synthetic dataset composition and experiment seeding."""

    n_safe: int = 385
    n_collision: int = 115
    train_frac: float = 0.8
    post: PostMode = PostMode.MASK
    gap: int = 8              # frames removed before a collision
    seed: int = 0             # master seed; stage seeds derive from it


@dataclass(frozen=True)
class ExperimentConfig:
    """Aggregate of every spec; the unit of load/save/validate."""

    clip: ClipSpec = field(default_factory=ClipSpec)
    tokenizer: TokenizerSpec = field(default_factory=TokenizerSpec)
    encoder: EncoderSpec = field(default_factory=EncoderSpec)
    probe: ProbeSpec = field(default_factory=ProbeSpec)
    quant: QuantFormat = QuantFormat.FP32
    link: LinkSpec = field(default_factory=LinkSpec)
    device: DeviceSpec = field(default_factory=DeviceSpec)
    world: WorldSpec = field(default_factory=WorldSpec)
    train: TrainSpec = field(default_factory=TrainSpec)
    data: DatasetSpec = field(default_factory=DatasetSpec)


def default_config() -> ExperimentConfig:
    """Config with every field at its default value."""
    return ExperimentConfig()


# ---------------------------------------------------------------------------
# Schema: (section, key) -> (config attribute, sub-field, converter)
# ---------------------------------------------------------------------------

def _enum_parser(enum_cls, aliases=None):
    aliases = aliases or {}

    def parse(text: str):
        key = text.strip().lower().replace("-", "").replace("_", "")
        for member in enum_cls:
            if member.name.lower().replace("_", "") == key:
                return member
        if key in aliases:
            return aliases[key]
        names = ", ".join(m.name.lower() for m in enum_cls)
        raise ValueError(f"expected one of: {names}")

    return parse


_parse_quant = _enum_parser(QuantFormat)
_parse_modulation = _enum_parser(Modulation)
_parse_layout = _enum_parser(Layout)
_parse_post = _enum_parser(PostMode)

_SCHEMA = {
    "clip": {
        "n_frames": int,
        "height_px": int,
        "width_px": int,
        "channels": int,
        "orig_height_px": int,
        "orig_width_px": int,
        "fps": int,
    },
    "tokenizer": {
        "patch_px": int,
        "tubelet_frames": int,
    },
    "encoder": {
        "embed_dim": int,
        "depth": int,
        "mlp_ratio": float,
    },
    "probe": {
        "n_queries": int,
        "n_classes": int,
        "hidden_dim": int,
    },
    "quant": {
        "format": _parse_quant,
    },
    "link": {
        "bandwidth_hz": float,
        "snr_db": float,
        "modulation": _parse_modulation,
    },
    "device": {
        "throughput_flops": float,
        "io_latency_s": float,
        "n_views": int,
    },
    "world": {
        "extent_m": float,
        "layout": _parse_layout,
        "lane_width_m": float,
        "collision_dist_m": float,
    },
    "train": {
        "epochs": int,
        "lr": float,
        "batch_size": int,
        "seed": int,
    },
    "data": {
        "n_safe": int,
        "n_collision": int,
        "train_frac": float,
        "post": _parse_post,
        "gap": int,
        "seed": int,
    },
}

# Config attribute holding each section ("quant" maps to a bare enum field).
_SECTION_ATTR = {
    "clip": "clip",
    "tokenizer": "tokenizer",
    "encoder": "encoder",
    "probe": "probe",
    "quant": "quant",
    "link": "link",
    "device": "device",
    "world": "world",
    "train": "train",
    "data": "data",
}


def loads_config(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parse config text; absent fields keep their defaults.

    Raises :class:`SchemaError` on malformed input or unknown keys and
    :class:`ValidationError` when a field invariant is violated.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise SchemaError(f"cannot parse {source}: {exc}") from exc

    cfg = default_config()
    for section in parser.sections():
        if section not in _SCHEMA:
            raise SchemaError(f"{source}: unknown section [{section}]")
        spec_schema = _SCHEMA[section]
        seen = {}
        for key, raw in parser.items(section):
            if key not in spec_schema:
                raise SchemaError(f"{source}: unknown key '{key}' in [{section}]")
            try:
                seen[key] = spec_schema[key](raw)
            except ValueError as exc:
                raise SchemaError(
                    f"{source}: bad value for {section}.{key} = {raw!r}: {exc}"
                ) from exc
        if section == "quant":
            if "format" in seen:
                cfg = replace(cfg, quant=seen["format"])
            continue
        if section == "link" and "modulation" in seen and "snr_db" not in seen:
            seen["snr_db"] = DEFAULT_SNR_DB[seen["modulation"]]
        attr = _SECTION_ATTR[section]
        cfg = replace(cfg, **{attr: replace(getattr(cfg, attr), **seen)})

    violations = validate_config(cfg)
    if violations:
        raise ValidationError("; ".join(violations))
    return cfg


def load_config(path) -> ExperimentConfig:
    """Load and validate a config file; an empty file yields all defaults."""
    with open(path, "r", encoding="utf-8") as fh:
        return loads_config(fh.read(), source=str(path))


def _fmt_value(value) -> str:
    if isinstance(value, enum.Enum):
        return value.name.lower()
    if isinstance(value, float):
        return repr(value)  # repr round-trips floats exactly
    return str(value)


def config_to_text(cfg: ExperimentConfig) -> str:
    """Canonical serialization: fixed section and key order."""
    out = io.StringIO()
    for section, schema in _SCHEMA.items():
        out.write(f"[{section}]\n")
        if section == "quant":
            out.write(f"format = {_fmt_value(cfg.quant)}\n\n")
            continue
        record = getattr(cfg, _SECTION_ATTR[section])
        for key in schema:
            out.write(f"{key} = {_fmt_value(getattr(record, key))}\n")
        out.write("\n")
    return out.getvalue()


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(config_to_text(cfg))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate_config(cfg: ExperimentConfig) -> list[str]:
    """Return all invariant violations; empty list means the config is valid.

    Violations are data, not faults: nothing is raised here.
    """
    v: list[str] = []
    clip, tok = cfg.clip, cfg.tokenizer

    for name in ("n_frames", "height_px", "width_px", "orig_height_px",
                 "orig_width_px", "fps"):
        if getattr(clip, name) < 1:
            v.append(f"clip.{name}: must be >= 1")
    if clip.channels not in (1, 3):
        v.append("clip.channels: must be 1 (grayscale) or 3 (RGB)")
    if clip.n_frames > 64:
        v.append("clip.n_frames: must be <= 64 (clips are capped to 64 frames)")

    if tok.patch_px < 1:
        v.append("tokenizer.patch_px: must be >= 1")
    if tok.tubelet_frames < 1:
        v.append("tokenizer.tubelet_frames: must be >= 1")
    if tok.patch_px >= 1 and clip.height_px % tok.patch_px != 0:
        v.append("tokenizer.patch_px: patch must divide height")
    if tok.patch_px >= 1 and clip.width_px % tok.patch_px != 0:
        v.append("tokenizer.patch_px: patch must divide width")
    if tok.tubelet_frames >= 1 and clip.n_frames % tok.tubelet_frames != 0:
        v.append("tokenizer.tubelet_frames: tubelet must divide n_frames")

    if cfg.encoder.embed_dim < 1:
        v.append("encoder.embed_dim: must be >= 1")
    if cfg.encoder.depth < 1:
        v.append("encoder.depth: must be >= 1")
    if not cfg.encoder.mlp_ratio > 0:
        v.append("encoder.mlp_ratio: must be > 0")

    if cfg.probe.n_queries != 1:
        v.append("probe.n_queries: Q must equal 1")
    if cfg.probe.n_classes < 2:
        v.append("probe.n_classes: must be >= 2")
    if cfg.probe.hidden_dim < 0:
        v.append("probe.hidden_dim: must be >= 0 (0 selects embed_dim)")

    if not cfg.link.bandwidth_hz > 0:
        v.append("link.bandwidth_hz: must be > 0")

    if not cfg.device.throughput_flops > 0:
        v.append("device.throughput_flops: must be > 0")
    if cfg.device.io_latency_s < 0:
        v.append("device.io_latency_s: must be >= 0")
    if cfg.device.n_views < 1:
        v.append("device.n_views: must be >= 1")

    if not cfg.world.extent_m > 0:
        v.append("world.extent_m: must be > 0")
    if not cfg.world.lane_width_m > 0:
        v.append("world.lane_width_m: must be > 0")
    if not cfg.world.collision_dist_m > 0:
        v.append("world.collision_dist_m: must be > 0")

    if cfg.train.epochs < 1:
        v.append("train.epochs: must be >= 1")
    if cfg.train.lr < 0:
        v.append("train.lr: must be >= 0")
    if cfg.train.batch_size < 1:
        v.append("train.batch_size: must be >= 1")

    if cfg.data.n_safe < 1:
        v.append("data.n_safe: must be >= 1")
    if cfg.data.n_collision < 1:
        v.append("data.n_collision: must be >= 1")
    if not 0.0 < cfg.data.train_frac < 1.0:
        v.append("data.train_frac: must be strictly between 0 and 1")
    if cfg.data.gap < 0:
        v.append("data.gap: must be >= 0")
    if cfg.data.gap >= clip.n_frames:
        v.append("data.gap: must be smaller than clip.n_frames")

    return v
