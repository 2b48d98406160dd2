"""What crossing the link costs: raw video vs one pooled embedding.

The roadside unit could forward the raw clip, or it could forward the single
pooled vector the probe produces.  This script prints the payload of both,
the compression ratio for each wire format, and the transmission time at the
two standard radio operating points, checking everything against the 5 ms
V2X deadline.

Run from the repository root:

    python3 demos/payload_and_latency.py
"""

from semv2x.config import (
    DEFAULT_SNR_DB, ClipSpec, LinkSpec, Modulation, QuantFormat,
)
from semv2x.link import (
    V2X_DEADLINE_S, compression_ratio, raw_payload_bytes,
    semantic_payload_bytes, tx_latency_s, link_rate_bps,
)

EMBED_DIM = 1280


def payload_section():
    clip = ClipSpec()   # 64 frames, camera-native 2048 x 2048 RGB
    raw = raw_payload_bytes(clip)
    print(f"raw clip payload ({clip.n_frames} frames at "
          f"{clip.orig_width_px}x{clip.orig_height_px}x3): {raw:,} bytes")
    print()
    print(f"{'format':<6} {'semantic bytes':>14} {'ratio':>12}")
    for fmt in QuantFormat:
        sem = semantic_payload_bytes(EMBED_DIM, fmt)
        print(f"{fmt.name:<6} {sem:>14,} {compression_ratio(raw, sem):>12,.1f}")
    return raw


def latency_section(raw_bytes):
    print()
    print(f"transmission time of the pooled vector "
          f"(deadline {V2X_DEADLINE_S * 1e3:.0f} ms):")
    print(f"{'link':<12} {'rate Mb/s':>10} {'format':>7} {'ms':>8}  verdict")
    for modulation in Modulation:
        link = LinkSpec(snr_db=DEFAULT_SNR_DB[modulation],
                        modulation=modulation)
        rate = link_rate_bps(link)
        for fmt in QuantFormat:
            sem = semantic_payload_bytes(EMBED_DIM, fmt)
            t = tx_latency_s(sem, link)
            verdict = "pass" if t <= V2X_DEADLINE_S else "MISS"
            name = f"{modulation.name}@{link.snr_db:.0f}dB"
            print(f"{name:<12} {rate / 1e6:>10.1f} {fmt.name:>7} "
                  f"{t * 1e3:>8.4f}  {verdict}")

    # the raw clip, for contrast, at the faster of the two links
    link = LinkSpec(snr_db=DEFAULT_SNR_DB[Modulation.QAM16],
                    modulation=Modulation.QAM16)
    t_raw = tx_latency_s(raw_bytes, link)
    print()
    print(f"the raw clip over the QAM16 link would take {t_raw:.1f} s, "
          f"{t_raw / V2X_DEADLINE_S:,.0f}x the deadline")


if __name__ == "__main__":
    raw = payload_section()
    latency_section(raw)
