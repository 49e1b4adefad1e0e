#!/usr/bin/env python3
"""Regenerates the bundled toy spectra deterministically.

Two diet groups share one clustered-loading truth (K = 2 factors, 3 loading-row
clusters); the second group's loadings are slightly perturbed. Columns inside
the default exclusion bands carry extra noise, mimicking the detector regions
the ingestion step drops. Responses are linear in the latent factors.
"""

import math
import random

BANDS = [(1592.0, 1720.0), (2996.0, 3698.0), (3818.0, 5010.0)]
N_PER_GROUP = 80
SEED = 20260814

# every 27th point of the 1060-point instrument grid, integer wavenumbers
GRID = [round(925.0 + i * (5010.0 - 925.0) / 1059.0) for i in range(1060)]
WAVENUMBERS = [GRID[i] for i in range(0, 1060, 27)]


def in_band(wn):
    return any(lo <= wn <= hi for lo, hi in BANDS)


def main():
    rng = random.Random(SEED)
    kept = [wn for wn in WAVENUMBERS if not in_band(wn)]

    # loading rows (3 clusters x 2 factors), assigned round-robin to kept columns
    base_rows = [(2.0, 0.0), (0.0, 2.0), (1.4, -1.4)]
    cluster = {wn: i % 3 for i, wn in enumerate(kept)}
    pert_rows = [(a + 0.12 * rng.gauss(0, 1), b + 0.12 * rng.gauss(0, 1)) for a, b in base_rows]
    psi = {wn: 0.3 + 0.3 * rng.random() for wn in WAVENUMBERS}
    baseline = {wn: 0.5 + 0.4 * math.sin(wn / 600.0) for wn in WAVENUMBERS}

    spectra = [["diet"] + [str(wn) for wn in WAVENUMBERS]]
    responses = [["Fat", "Protein", "Lactose"]]
    for diet, rows in (("Pasture", base_rows), ("TMR", pert_rows)):
        for _ in range(N_PER_GROUP):
            u1, u2 = rng.gauss(0, 1), rng.gauss(0, 1)
            rec = [diet]
            for wn in WAVENUMBERS:
                if in_band(wn):
                    v = baseline[wn] + 1.5 * rng.gauss(0, 1)  # noisy region
                else:
                    a, b = rows[cluster[wn]]
                    v = baseline[wn] + a * u1 + b * u2 + math.sqrt(psi[wn]) * rng.gauss(0, 1)
                rec.append("%.6f" % v)
            spectra.append(rec)
            responses.append(["%.6f" % (3.0 + 1.2 * u1 + 0.15 * rng.gauss(0, 1)),
                              "%.6f" % (3.4 + 0.8 * u2 + 0.10 * rng.gauss(0, 1)),
                              "%.6f" % (4.8 + 0.3 * (u1 - u2) + 0.10 * rng.gauss(0, 1))])

    with open("spectra.csv", "w") as f:
        f.write("\n".join(",".join(r) for r in spectra) + "\n")
    with open("responses.csv", "w") as f:
        f.write("\n".join(",".join(r) for r in responses) + "\n")
    print(f"{len(WAVENUMBERS)} columns, {len(kept)} outside bands, "
          f"{2 * N_PER_GROUP} samples")


if __name__ == "__main__":
    main()
