import numpy as np
import pytest

from wixup.frames import ClassProbs, Frame, Keypoints
from wixup.profile import ProfileConfig


def kp_label(joints=1):
    return Keypoints(np.zeros((joints, 3)))


def boresight_frame(ranges, seq="a", t=0.0, label=None):
    """Frame with points straight ahead (+y) at the given ranges in meters."""
    ranges = np.atleast_1d(np.asarray(ranges, dtype=np.float64))
    pts = np.column_stack([np.zeros_like(ranges), ranges, np.zeros_like(ranges)])
    return Frame(seq_id=seq, t=t, points=pts, label=label or kp_label())


def frame_at_bins(bins, cfg=None, seq="a", t=0.0, label=None):
    cfg = cfg or ProfileConfig()
    bins = np.atleast_1d(np.asarray(bins, dtype=np.float64))
    return boresight_frame(bins * cfg.range_resolution, seq=seq, t=t, label=label)


def continuous_mixture(mus, sigma=1.0):
    """Closed-form unit-height Gaussian mixture, evaluated anywhere."""
    mus = np.asarray(mus, dtype=np.float64)

    def f(x):
        x = np.asarray(x, dtype=np.float64)
        return np.exp(-0.5 * ((x[..., None] - mus) / sigma) ** 2).sum(axis=-1)

    return f


def brute_force_crossings(mus_a, mus_b, window, sigma=1.0, oversample=100):
    """Independent oracle: root-find f_a - f_b on a fine grid with bisection.

    Evaluates the continuous mixtures (no binning, no interpolation) on an
    `oversample`-times-finer grid and bisects each sign change, so it shares
    no code path with the scan under test.
    """
    fa = continuous_mixture(mus_a, sigma)
    fb = continuous_mixture(mus_b, sigma)

    def g(x):
        return fa(x) - fb(x)

    grid = np.linspace(0.0, window - 1, (window - 1) * oversample + 1)
    values = g(grid)
    roots = []
    sign = np.sign(values)
    idx = np.flatnonzero(sign[:-1] * sign[1:] < 0)
    for i in idx:
        lo, hi = grid[i], grid[i + 1]
        glo = g(np.array([lo]))[0]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            gm = g(np.array([mid]))[0]
            if gm == 0.0:
                lo = hi = mid
                break
            if (gm > 0) == (glo > 0):
                lo, glo = mid, gm
            else:
                hi = mid
        root = 0.5 * (lo + hi)
        roots.append((root, fa(np.array([root]))[0]))
    return roots


@pytest.fixture
def profile_cfg():
    return ProfileConfig()


def one_hot_label(cls, num):
    probs = np.zeros(num)
    probs[cls] = 1.0
    return ClassProbs(probs)
