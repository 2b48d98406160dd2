"""Independent reference implementations used to cross-check the library.

Everything in here is written the dumb, obvious way (plain loops, big ints,
no shared code with the package) so that agreement between the two routes is
meaningful.
"""

import math

import numpy as np

from semv2x.probe import PARAM_FIELDS, sample_loss


def fd_max_rel_error(params, tokens, label, grads, h=1e-5):
    """Max relative error between analytic grads and central differences."""
    worst = 0.0
    for name in PARAM_FIELDS:
        arr = getattr(params, name)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = arr[idx]
            arr[idx] = old + h
            lp = sample_loss(params, tokens, label)
            arr[idx] = old - h
            lm = sample_loss(params, tokens, label)
            arr[idx] = old
            fd = (lp - lm) / (2.0 * h)
            a = grads[name][idx]
            rel = abs(a - fd) / max(abs(a), abs(fd), 1e-8)
            worst = max(worst, rel)
    return worst


def probe_forward_reference(params, tokens):
    """Straight-line scalar-loop forward pass; returns (logits, weights)."""
    z = np.asarray(tokens, dtype=np.float64)
    n_tok, d = z.shape
    dh = params.b_mlp1.shape[0]
    c = params.b_cls.shape[0]

    keys = [[sum(z[i][a] * params.w_key[a][j] for a in range(d))
             for j in range(d)] for i in range(n_tok)]
    values = [[sum(z[i][a] * params.w_value[a][j] for a in range(d))
               for j in range(d)] for i in range(n_tok)]
    scores = [sum(keys[i][j] * params.query[j] for j in range(d)) / math.sqrt(d)
              for i in range(n_tok)]
    mx = max(scores)
    exps = [math.exp(s - mx) for s in scores]
    total = sum(exps)
    weights = [e / total for e in exps]
    pooled = [sum(weights[i] * values[i][j] for i in range(n_tok))
              for j in range(d)]
    hidden = [max(0.0, sum(pooled[a] * params.w_mlp1[a][j] for a in range(d))
                  + params.b_mlp1[j]) for j in range(dh)]
    feats = [sum(hidden[a] * params.w_mlp2[a][j] for a in range(dh))
             + params.b_mlp2[j] for j in range(d)]
    logits = [sum(feats[a] * params.w_cls[a][k] for a in range(d))
              + params.b_cls[k] for k in range(c)]
    return np.array(logits), np.array(weights)


def min_pair_distance_bruteforce(traj):
    """Smallest distance between any two vehicles over all frames."""
    n_veh, n_frames, _ = traj.shape
    best = float("inf")
    for f in range(n_frames):
        for i in range(n_veh):
            for j in range(i + 1, n_veh):
                dx = traj[i][f][0] - traj[j][f][0]
                dy = traj[i][f][1] - traj[j][f][1]
                best = min(best, math.hypot(dx, dy))
    return best


def first_breach_frame_bruteforce(traj, threshold):
    """Earliest frame with any pair distance strictly below the threshold."""
    n_veh, n_frames, _ = traj.shape
    for f in range(n_frames):
        for i in range(n_veh):
            for j in range(i + 1, n_veh):
                dx = traj[i][f][0] - traj[j][f][0]
                dy = traj[i][f][1] - traj[j][f][1]
                if math.hypot(dx, dy) < threshold:
                    return f
    return None
