"""Pure-Python reference kernels.

These are the fallback implementations selected by `wixup._backend` when the
compiled extension is unavailable. They intentionally use plain Python loops
(stdlib `math`, no vectorization) so the O(W) scan cost is the dominant term;
the compiled kernels in `_kernels.pyx` mirror this module operation for
operation and must stay numerically interchangeable with it.
"""

import math

import numpy as np

NAME = "python"

# Per-component Gaussians are cut off at this many sigmas from the mean; the
# tail beyond it is below exp(-40.5) ~ 2.6e-18, far under any height epsilon.
TRUNCATION_SIGMAS = 9.0


def profile_accumulate(mus, window_size, sigma):
    """Superpose one unit-height Gaussian per mean over integer bins 0..W-1."""
    values = [0.0] * window_size
    reach = TRUNCATION_SIGMAS * sigma
    mus = mus.tolist() if isinstance(mus, np.ndarray) else list(mus)
    for mu in mus:
        lo = max(0, int(math.ceil(mu - reach)))
        hi = min(window_size - 1, int(math.floor(mu + reach)))
        for k in range(lo, hi + 1):
            t = (k - mu) / sigma
            values[k] += math.exp(-0.5 * t * t)
    return np.asarray(values, dtype=np.float64)


def _quad_log(values, m, x):
    """Quadratic interpolation of log(values) on the stencil m-1, m, m+1.

    Returns None when any stencil value is non-positive (log undefined).
    Exact for a single Gaussian component, whose log is a true quadratic.
    """
    f0, f1, f2 = values[m - 1], values[m], values[m + 1]
    if f0 <= 0.0 or f1 <= 0.0 or f2 <= 0.0:
        return None
    l0, l1, l2 = math.log(f0), math.log(f1), math.log(f2)
    t = x - m
    return l1 + 0.5 * t * (l2 - l0) + 0.5 * t * t * (l2 - 2.0 * l1 + l0)


def _height_at(a, b, x, i0, i1, n):
    # Pick the 3-point stencil centered nearest to x that stays in range.
    if x - i0 <= 0.5:
        m = i0 if i0 - 1 >= 0 else i1
    else:
        m = i1 if i1 + 1 <= n - 1 else i0
    if m - 1 < 0 or m + 1 > n - 1:
        m = -1
    la = _quad_log(a, m, x) if m >= 0 else None
    lb = _quad_log(b, m, x) if m >= 0 else None
    if la is not None and lb is not None:
        return math.exp(0.5 * (la + lb))
    w = x - i0
    ha = a[i0] + w * (a[i1] - a[i0])
    hb = b[i0] + w * (b[i1] - b[i0])
    return 0.5 * (ha + hb)


def _locate(a, b, i0, i1, n):
    a0, a1, b0, b1 = a[i0], a[i1], b[i0], b[i1]
    if a0 > 0.0 and a1 > 0.0 and b0 > 0.0 and b1 > 0.0:
        s0 = math.log(a0) - math.log(b0)
        s1 = math.log(a1) - math.log(b1)
        x = i0 + s0 / (s0 - s1)
    else:
        d0 = a0 - b0
        d1 = a1 - b1
        x = i0 + d0 / (d0 - d1)
    return x, _height_at(a, b, x, i0, i1, n)


def _run_height(a, x):
    # Inside a zero run a == b bitwise, so interpolating a alone is symmetric.
    j0 = int(math.floor(x))
    if x == j0:
        return a[j0]
    if a[j0] > 0.0 and a[j0 + 1] > 0.0:
        return math.exp(0.5 * (math.log(a[j0]) + math.log(a[j0 + 1])))
    return 0.5 * (a[j0] + a[j0 + 1])


def intersection_scan(a, b, eps):
    """Locate sign changes of a - b in one pass.

    A crossing exists between consecutive nonzero differences of opposite
    sign. A run of exact zeros bounded by opposite signs is a tangential
    crossing at the run midpoint (the strict product test alone would miss
    it). Crossings with interpolated height <= eps are dropped.

    Returns (bins, heights) as float64 arrays.
    """
    n = len(a)
    if n != len(b):
        raise ValueError("profile length mismatch: %d vs %d" % (n, len(b)))
    a = a.tolist() if isinstance(a, np.ndarray) else list(a)
    b = b.tolist() if isinstance(b, np.ndarray) else list(b)
    out_bins = []
    out_heights = []
    last_sign = 0
    last_idx = -1
    for i in range(n):
        d = a[i] - b[i]
        if d > 0.0:
            s = 1
        elif d < 0.0:
            s = -1
        else:
            continue
        if last_sign != 0 and s != last_sign:
            if i == last_idx + 1:
                x, h = _locate(a, b, last_idx, i, n)
            else:
                x = 0.5 * (last_idx + i)
                h = _run_height(a, x)
            if h > eps:
                out_bins.append(x)
                out_heights.append(h)
        last_sign = s
        last_idx = i
    return (
        np.asarray(out_bins, dtype=np.float64),
        np.asarray(out_heights, dtype=np.float64),
    )


def gaussian_weighted_average(queries, mus, columns, sigma):
    """Average each row of `columns` with Gaussian kernel weights per query.

    queries: (m,) fractional bins; mus: (p,) candidate bins; columns: (p, c)
    values attached to the candidates. Weights exp(-(q-mu)^2 / (2 sigma^2))
    are normalized to sum 1 per query; if every weight underflows to zero the
    nearest candidate (lowest index on ties) is used verbatim.
    """
    mus = mus.tolist() if isinstance(mus, np.ndarray) else list(mus)
    columns = np.asarray(columns, dtype=np.float64).tolist()
    p = len(mus)
    if p == 0:
        return np.zeros((len(queries), 0))
    c = len(columns[0])
    out = []
    inv2s2 = 1.0 / (2.0 * sigma * sigma)
    for q in queries:
        weights = [math.exp(-((q - mus[j]) ** 2) * inv2s2) for j in range(p)]
        total = 0.0
        for w in weights:
            total += w
        row = [0.0] * c
        if total == 0.0:
            best = 0
            for j in range(1, p):
                if abs(q - mus[j]) < abs(q - mus[best]):
                    best = j
            for col in range(c):
                row[col] = columns[best][col]
        else:
            for j in range(p):
                w = weights[j] / total
                for col in range(c):
                    row[col] += w * columns[j][col]
        out.append(row)
    return np.asarray(out, dtype=np.float64).reshape(len(queries), c)
