"""Array-level bindings for the wixup core.

Training pipelines hold point clouds and labels as numpy arrays; these two
functions marshal arrays to the core's frame types, call the core, and
marshal the results back. No algorithm logic lives here: outputs are
numerically identical to the core's for the same inputs and seed.

A frame is `(points, label)` or, dataset-level, `(seq_id, t, points, label)`:
points is an N x 3 or N x 5 float array, label is a J x 3 keypoint matrix or
a length-C class-probability vector.
"""

from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np

from wixup import (
    AugmentConfig,
    ClassProbs,
    Frame,
    Keypoints,
    MixConfig,
    ProfileConfig,
    augment,
    make_dataset,
    mix_frames,
)

__version__ = "0.1.0"

__all__ = ["bind_mix", "bind_augment", "__version__"]

_MIX_KEYS = frozenset(
    {"window_size", "range_resolution", "sigma", "n_out", "jitter_sigma", "epsilon_height"}
)
_AUGMENT_KEYS = _MIX_KEYS | {
    "method",
    "scale",
    "seed",
    "cga_low",
    "cga_high",
    "stack_k",
    "stack_target_count",
    "cross_sequence",
}


def _as_label(label):
    arr = np.asarray(label, dtype=np.float64)
    if arr.ndim == 2 and arr.shape[1] == 3:
        return Keypoints(arr)
    if arr.ndim == 1:
        return ClassProbs(arr)
    raise ValueError(
        f"label must be a J x 3 keypoint matrix or a flat probability vector, "
        f"got shape {arr.shape}"
    )


def _as_points(points):
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] not in (3, 5):
        raise ValueError(f"points must be N x 3 or N x 5, got shape {arr.shape}")
    return arr


def _from_label(label):
    return label.joints if isinstance(label, Keypoints) else label.probs


def _check_keys(config, allowed):
    unknown = set(config) - allowed
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")


def _mix_config(config: Optional[Mapping]) -> MixConfig:
    config = dict(config or {})
    _check_keys(config, _MIX_KEYS)
    profile = ProfileConfig(
        window_size=config.pop("window_size", 512),
        range_resolution=config.pop("range_resolution", 0.0375),
        sigma=config.pop("sigma", 1.0),
    )
    return MixConfig(profile=profile, **config)


def bind_mix(
    points0, label0, points1, label1, config: Optional[Mapping] = None, seed: int = 0
) -> Tuple[np.ndarray, np.ndarray]:
    """Mix two array frames; returns (points, label) arrays."""
    f0 = Frame("bind", 0.0, _as_points(points0), _as_label(label0))
    f1 = Frame("bind", 1.0, _as_points(points1), _as_label(label1))
    out = mix_frames(f0, f1, _mix_config(config), np.random.default_rng(seed))
    return out.points, _from_label(out.label)


def bind_augment(
    frames: Sequence[Tuple[str, float, np.ndarray, np.ndarray]],
    config: Optional[Mapping] = None,
) -> List[Tuple[str, float, np.ndarray, np.ndarray]]:
    """Augment a dataset given as (seq_id, t, points, label) tuples."""
    config = dict(config or {})
    _check_keys(config, _AUGMENT_KEYS)
    mix = _mix_config({k: v for k, v in config.items() if k in _MIX_KEYS})
    cga_range = (config.get("cga_low", 0.8), config.get("cga_high", 1.2))
    acfg = AugmentConfig(
        method=config.get("method", "wixup"),
        scale=config.get("scale", 1),
        mix=mix,
        cga_range=cga_range,
        stack_k=config.get("stack_k", 5),
        stack_target_count=config.get("stack_target_count", 8),
        seed=config.get("seed", 0),
        cross_sequence=config.get("cross_sequence", False),
    )
    core_frames = [
        Frame(seq, float(t), _as_points(pts), _as_label(label))
        for seq, t, pts, label in frames
    ]
    out = augment(make_dataset(core_frames), acfg)
    return [(f.seq_id, f.t, f.points, _from_label(f.label)) for f in out.frames]
