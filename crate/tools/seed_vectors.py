"""Replicate seed vectors from an independent SplitMix64.

Row i holds the seed of replicate i for run seed 42 and the first three
64-bit outputs and first uniform of that replicate's stream.
"""

import csv
import sys
from pathlib import Path

MASK = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15


def mix(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def stream(state):
    while True:
        state = (state + GAMMA) & MASK
        yield mix(state)


def replicate_seed(seed, index):
    return next(stream((seed + index * GAMMA) & MASK))


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parents[1] / "crates/core/tests/fixtures/seed_vectors.csv")
    with out.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["replicate", "seed", "u0", "u1", "u2", "uniform0"])
        for i in list(range(10)) + [9999, 2**32]:
            s = replicate_seed(42, i)
            g = stream(s)
            u = [next(g) for _ in range(3)]
            w.writerow([i, s, *u, repr((u[0] >> 11) * 2.0**-53)])


if __name__ == "__main__":
    main()
