"""The attentive probe on a toy problem it must solve perfectly.

Builds two classes of synthetic token sets: class 1 hides a few "signal"
tokens shifted along a fixed direction among distractor tokens, class 0 is
distractors only.  A mean-pool cannot separate the classes reliably once
distractors dominate; the learned query can, because it attends to the
signal tokens.  The script trains the probe, prints the loss curve, and
shows where the attention mass lands.

Run from the repository root:

    python3 demos/train_probe_toy.py
"""

import numpy as np

from semv2x.probe import (
    TrainSpec, classify, init_params, probe_forward, train_probe,
)

EMBED_DIM = 16
N_TOKENS = 24
N_SIGNAL = 3          # tokens actually carrying class evidence
N_PER_CLASS = 40
SEED = 7


def make_dataset(rng):
    direction = np.zeros(EMBED_DIM)
    direction[0] = 1.0
    data = []
    for i in range(2 * N_PER_CLASS):
        y = i % 2
        z = rng.normal(size=(N_TOKENS, EMBED_DIM))
        if y == 1:
            idx = rng.choice(N_TOKENS, size=N_SIGNAL, replace=False)
            z[idx] += 4.0 * direction
        data.append((z, y))
    return data


def main():
    rng = np.random.default_rng(SEED)
    data = make_dataset(rng)
    split = int(0.8 * len(data))
    train, test = data[:split], data[split:]

    params = init_params(EMBED_DIM, 2, seed=SEED)
    spec = TrainSpec(epochs=40, lr=3e-3, batch_size=8, seed=SEED)
    params, history = train_probe(params, train, spec)

    print(f"training on {len(train)} token sets "
          f"({N_SIGNAL}/{N_TOKENS} signal tokens in class 1)")
    for e in range(0, len(history), 8):
        bar = "#" * int(40 * history[e] / history[0])
        print(f"  epoch {e:>3}  loss {history[e]:.4f}  {bar}")
    print(f"  epoch {len(history) - 1:>3}  loss {history[-1]:.4f}")

    correct = sum(classify(params, z) == y for z, y in test)
    print(f"held-out accuracy: {correct}/{len(test)}")

    # attention should concentrate on the injected signal tokens
    z = rng.normal(size=(N_TOKENS, EMBED_DIM))
    idx = rng.choice(N_TOKENS, size=N_SIGNAL, replace=False)
    z[idx, 0] += 4.0
    w = probe_forward(params, z).attn_weights
    on_signal = float(w[idx].sum())
    print(f"attention mass on the {N_SIGNAL} signal tokens of a fresh "
          f"class-1 sample: {on_signal:.2f} "
          f"(uniform would give {N_SIGNAL / N_TOKENS:.2f})")


if __name__ == "__main__":
    main()
