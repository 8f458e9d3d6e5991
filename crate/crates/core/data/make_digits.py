"""Builds the bundled class-balanced MNIST subset in IDX format.

Source: the `mnist` npm package (MIT), which ships 10,000 MNIST digits as
JSON grayscale arrays in [0, 1], grouped by class. Usage:

    npm pack mnist && tar xzf mnist-*.tgz
    python3 make_digits.py package/src/digits
"""
import json
import struct
import sys
from pathlib import Path

TRAIN, TEST = 1024, 256


def per_class(total):
    base, extra = divmod(total, 10)
    return [base + (1 if c < extra else 0) for c in range(10)]


def main(src):
    digits = []
    for c in range(10):
        raw = json.loads((Path(src) / f"{c}.json").read_text())["data"]
        digits.append([raw[i:i + 784] for i in range(0, len(raw), 784)])
    train_n, test_n = per_class(TRAIN), per_class(TEST)
    sets = {"train": [], "test": []}
    for c in range(10):
        pool = digits[c]
        sets["train"] += [(c, pool[i]) for i in range(train_n[c])]
        sets["test"] += [(c, pool[train_n[c] + i]) for i in range(test_n[c])]
    for name, items in sets.items():
        # interleave classes: stable order by (rank within class, class)
        ranks, seen = [], [0] * 10
        for c, px in items:
            ranks.append((seen[c], c, px))
            seen[c] += 1
        ranks.sort(key=lambda t: (t[0], t[1]))
        n = len(ranks)
        with open(f"{name}-images-idx3-ubyte", "wb") as f:
            f.write(struct.pack(">IIII", 0x803, n, 28, 28))
            for _, _, px in ranks:
                f.write(bytes(min(255, max(0, round(v * 255))) for v in px))
        with open(f"{name}-labels-idx1-ubyte", "wb") as f:
            f.write(struct.pack(">II", 0x801, n))
            f.write(bytes(c for _, c, _ in ranks))


if __name__ == "__main__":
    main(sys.argv[1])
