"""Independent reference computations shared by the tests."""
import numpy as np


def exact_product(a, b):
    """Exact convolution of two coefficient arrays on the full integer lattice."""
    n = a.shape[0]
    k = np.fft.fftfreq(n, 1.0 / n).astype(int)
    out = {}
    for i1, p1 in enumerate(k):
        for j1, q1 in enumerate(k):
            if a[i1, j1] == 0:
                continue
            for i2, p2 in enumerate(k):
                for j2, q2 in enumerate(k):
                    if b[i2, j2] != 0:
                        key = (p1 + p2, q1 + q2)
                        out[key] = out.get(key, 0) + a[i1, j1] * b[i2, j2]
    return out
