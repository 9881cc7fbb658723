"""Langmuir-wave stability survey: constant and white-noise maps, k = 0 growth and c*(k)."""
import argparse
import csv
from pathlib import Path

import numpy as np

from momentstab import langmuir as lg


def write(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(f"# {lg.UNITS_NOTE}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows([[f"{v:.17g}" if isinstance(v, float) else v for v in r] for r in rows])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mass", type=float, default=1.0)
    ap.add_argument("--out", default="langmuir_out")
    ap.add_argument("--points", type=int, default=1024)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    m = args.mass

    ks = np.linspace(0.0, 3.0, 31)
    s2 = np.linspace(0.0, 20.0, 41)
    white = lg.stability_map(m, ks, s2, "white")
    write(out / "white_noise_map.csv", ["k", "sigma2", "max_real_lambda", "verdict"], white)
    const = lg.stability_map(m, ks, np.geomspace(1e-4, 1.0, 13), "constant")
    write(out / "constant_map.csv", ["k", "sigma2", "max_real_lambda", "verdict"], const)
    print(f"white-noise map: {sum(r[3] == 'unstable' for r in white)} / {len(white)} unstable")
    print(f"constant-correlation map: {sum(r[3] == 'unstable' for r in const)} / {len(const)} unstable")

    rows = []
    for c in (0.25, 0.5, 1.0, 2.0, 4.0):
        prob = lg.LangmuirProblem(m, 0.0, lg.CorrelationProfile("gaussian", c, 1.0))
        gr = lg.find_growth_rate_k0(prob)
        rows.append([c, gr.lam, gr.energy, gr.residual])
        print(f"gaussian c={c:<5g} k=0: lambda* = {gr.lam:.6f}")
    write(out / "growth_k0.csv", ["amplitude", "lambda", "E_lambda", "matching_residual"], rows)

    prob = lg.LangmuirProblem(m, 0.0, lg.CorrelationProfile("gaussian", 1.0, 1.0))
    rows = []
    for k in (0.05, 0.1, 0.25, 0.5, 1.0, 2.0):
        r = lg.stability_threshold_k(prob, k, points=args.points)
        rows.append([k, r.critical_amplitude, r.grid_points])
        print(f"k={k:<5g} c* = {r.critical_amplitude:.5f}")
    write(out / "threshold_k.csv", ["k", "c_star", "grid_points"], rows)


if __name__ == "__main__":
    main()
