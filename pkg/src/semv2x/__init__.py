"""Desk-scale simulator for semantic V2X collision prediction.

The package covers the full chain: synthetic traffic scenarios, lightweight
post-processing, a deterministic encoder stub, an attentive probe trained
with hand-written gradients, payload/latency/compute models of the V2X link,
and an experiment runner that emits reproducible reports.
"""

from .config import (
    ClipSpec, ConfigError, DatasetSpec, DeviceSpec, EncoderSpec,
    ExperimentConfig, LinkSpec, Modulation, ProbeSpec, QuantFormat,
    SchemaError, TokenizerSpec, ValidationError, default_config, load_config,
    loads_config, save_config, validate_config,
)
from .costs import (
    CostReport, block_flops, cost_report, encoder_flops, inference_time,
    probe_flops, probe_flops_effective, token_count, total_flops,
)
from .encoder import encode_clips, encode_stub
from .link import (
    V2X_DEADLINE_S, PayloadReport, QuantizedEmbedding, compression_ratio,
    dequantize_embedding, latency_table, link_rate_bps, meets_v2x_deadline,
    quantize_embedding, raw_payload_bytes, semantic_payload_bytes,
    tx_latency_s,
)
from .pipeline import (
    ConditionResult, ConfusionMatrix, ExperimentReport, compute_metrics,
    f1_score, run_condition, run_e2e,
)
from .probe import (
    ProbeOutput, ProbeParams, TrainSpec, batch_loss, classify,
    cross_attention, head_logits, init_params, load_params, probe_backward,
    probe_forward, save_params, train_probe,
)
from .reports import load_report, save_report, write_report_files
from .scenario import (
    ClipLabel, DatasetSplit, Layout, LanePath, PostMode, ScenarioClip,
    VehicleState, WorldSpec, apply_binary_mask, apply_heatmap, apply_hybrid,
    build_dataset, cap_length, detect_collision, frame_gap_trim,
    generate_scenario, load_clip, rasterize, save_clip,
)

__version__ = "0.1.0"
