"""Independent reference for the image model: a plain triple loop over the lattice.

Shares no code with the package; used to build the committed golden file and
as a cross-check in the tests.
"""

import math

import numpy as np


def brute_force_response(dims, source, receiver, reflection, c, fs, n_samples):
    x = np.zeros(n_samples)
    reach = c * n_samples / fs
    bounds = [int(math.ceil(reach / L)) + 1 for L in dims]
    for l in range(-bounds[0], bounds[0] + 1):
        for m in range(-bounds[1], bounds[1] + 1):
            for n in range(-bounds[2], bounds[2] + 1):
                image = [
                    idx * L + (-1) ** idx * s
                    for idx, L, s in zip((l, m, n), dims, source)
                ]
                d = math.dist(image, receiver)
                k = math.floor(d * fs / c + 0.5)
                if k < n_samples:
                    x[k] += reflection ** (abs(l) + abs(m) + abs(n)) / d
    return x


if __name__ == "__main__":
    import pathlib

    dims = (1.84, 1.79, 1.83)
    pistol2 = (-0.26, -0.30, -0.15)
    mic1 = (-0.57, 0.58, 0.31)
    r = math.sqrt(1 - 0.0407)
    fs, c = 44100, 346.58
    n = int(round(0.020 * fs))
    golden = brute_force_response(dims, pistol2, mic1, r, c, fs, n)
    out = pathlib.Path(__file__).parent / "data" / "golden_pistol2_mic1_20ms.txt"
    np.savetxt(out, golden, fmt="%.17g", header=f"image model, pistol 2 -> mic 1, first {n} samples, fs={fs}, c={c}, abar=0.0407")
    print(out, np.count_nonzero(golden), "nonzero samples")
