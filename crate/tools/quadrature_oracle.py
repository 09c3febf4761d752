"""Reference values for the fair-win probability at small counts.

Evaluates P(Y > Z) = integral of (1 - Phi_Y) dPhi_Z at 50 significant digits,
with Y ~ N(p, p(1-p)/v) and Z ~ N(q, q(1-q)/v), p = v_h/v, q = v_n/v.
Writes tests/fixtures/fair_win_quadrature.csv under the core crate.
"""

import csv
import random
import sys
from pathlib import Path

import mpmath as mp

mp.mp.dps = 50


def fair_win(v_h, v_n):
    v = mp.mpf(v_h + v_n)
    p, q = v_h / v, v_n / v
    sd_y = mp.sqrt(p * (1 - p) / v)
    sd_z = mp.sqrt(q * (1 - q) / v)

    def ln_integrand(z):
        upper = mp.erfc((z - p) / (sd_y * mp.sqrt(2))) / 2
        return mp.log(upper) + mp.log(mp.npdf(z, q, sd_z))

    # centre the rule on the mode of the log-integrand; in the far tail it
    # sits well away from both means
    mode = mp.findroot(lambda z: mp.diff(ln_integrand, z), (p + q) / 2 if p < q else q)
    width = 1 / mp.sqrt(-mp.diff(ln_integrand, mode, 2))
    peak = ln_integrand(mode)
    nodes = [mode + k * width for k in range(-40, 41)]
    return mp.exp(peak) * mp.quad(lambda z: mp.exp(ln_integrand(z) - peak), nodes)


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parents[1] / "crates/core/tests/fixtures/fair_win_quadrature.csv")
    rng = random.Random(1770)
    rows = []
    while len(rows) < 100:
        v = rng.randint(2, 1000)
        v_h = rng.randint(1, v - 1)
        rows.append((v_h, v - v_h))
    with out.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["v_h", "v_n", "log10_p"])
        for v_h, v_n in rows:
            w.writerow([v_h, v_n, mp.nstr(mp.log10(fair_win(v_h, v_n)), 25)])


if __name__ == "__main__":
    main()
