"""Where the FLOPs go: encoder vs probe, and what that means at the edge.

The analytic cost model counts multiply-accumulates through the frozen
transformer encoder and the attentive probe.  The punchline is the split:
virtually all compute sits in the encoder, so running the probe against
cached token embeddings is nearly free, while re-running the encoder
dominates everything.

Run from the repository root:

    python3 demos/compute_costs.py
"""

from dataclasses import replace

from semv2x.config import DeviceSpec, default_config
from semv2x.costs import cost_report, token_count


def fmt_flops(n):
    if n >= 1e12:
        return f"{n / 1e12:.2f} T"
    if n >= 1e9:
        return f"{n / 1e9:.2f} G"
    return f"{n / 1e6:.2f} M"


def full_scale_breakdown():
    cfg = default_config()
    rep = cost_report(cfg.clip, cfg.tokenizer, cfg.encoder,
                      cfg.probe.n_classes, cfg.device)
    L = token_count(cfg.clip, cfg.tokenizer)
    print(f"full-scale clip: {cfg.clip.n_frames} frames at "
          f"{cfg.clip.height_px}x{cfg.clip.width_px}, "
          f"{L} tokens of width {cfg.encoder.embed_dim}")
    rows = [
        ("one transformer block", rep.flops_block),
        (f"encoder ({cfg.encoder.depth} blocks)", rep.flops_encoder),
        ("probe (from pixels)", rep.flops_probe),
        ("probe (cached tokens)", rep.flops_probe_effective),
        ("total", rep.flops_total),
    ]
    for label, flops in rows:
        print(f"  {label:<22}: {fmt_flops(flops)}FLOPs")
    share = rep.flops_encoder / rep.flops_total
    print(f"  encoder share         : {share:.4%}")
    print(f"  token activations     : {rep.activation_elems:,} elements")
    return rep


def device_sweep(rep_total):
    print()
    print("inference time across device profiles (single view):")
    profiles = [
        ("edge NPU, 5 TFLOP/s", DeviceSpec(throughput_flops=5e12)),
        ("RSU GPU, 30 TFLOP/s", DeviceSpec(throughput_flops=30e12)),
        ("datacenter, 300 TFLOP/s", DeviceSpec(throughput_flops=300e12)),
        ("edge NPU + 3 ms I/O", DeviceSpec(throughput_flops=5e12,
                                           io_latency_s=3e-3)),
    ]
    cfg = default_config()
    for name, dev in profiles:
        rep = cost_report(cfg.clip, cfg.tokenizer, cfg.encoder,
                          cfg.probe.n_classes, dev)
        print(f"  {name:<24} {rep.infer_time_s * 1e3:>9.2f} ms")


def resolution_sweep():
    print()
    print("cost scaling with input resolution (depth 32, width 1280):")
    cfg = default_config()
    print(f"{'frame px':>9} {'tokens':>7} {'total FLOPs':>12}")
    for side in (128, 192, 256, 384):
        clip = replace(cfg.clip, height_px=side, width_px=side)
        rep = cost_report(clip, cfg.tokenizer, cfg.encoder,
                          cfg.probe.n_classes, cfg.device)
        print(f"{side:>9} {rep.tokens:>7} {fmt_flops(rep.flops_total):>11}F")


if __name__ == "__main__":
    rep = full_scale_breakdown()
    device_sweep(rep.flops_total)
    resolution_sweep()
