"""Dataset-level augmentation: pair planning, mixing, and the baselines.

Mixing pairs frames with their within-sequence neighbors at distances
d = 1..s, so the augmented data scales roughly s times the original (each
distance contributes L - d pairs per sequence of length L). Baselines:

* cga: per-frame random uniform scaling of coordinates (and keypoint labels)
  in [0.8, 1.2]; class labels untouched.
* stack: zero-pad each frame to a fixed point count, then emit k independent
  random resamples per frame.

Execution is deterministic regardless of worker count: every planned item
derives its own rng seed from a stable hash of (seed, sequence, index,
distance), and results merge in plan order.
"""

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from .frames import ClassProbs, Dataset, Frame, Keypoints, make_dataset
from .mixer import MixConfig, mix_frames

METHODS = ("wixup", "cga", "stack", "wixup+")

CROSS_SEQ_SCOPE = "*"


@dataclass(frozen=True)
class AugmentConfig:
    method: str = "wixup"
    scale: int = 1
    mix: MixConfig = field(default_factory=MixConfig)
    cga_range: Tuple[float, float] = (0.8, 1.2)
    stack_k: int = 5
    stack_target_count: int = 8
    seed: int = 0
    cross_sequence: bool = False  # allow mixing across sequence boundaries

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.scale < 1:
            raise ValueError("scale must be >= 1")
        low, high = self.cga_range
        if not 0 < low <= high:
            raise ValueError("cga_range must satisfy 0 < low <= high")
        if self.stack_k < 1 or self.stack_target_count < 1:
            raise ValueError("stack_k and stack_target_count must be >= 1")


@dataclass(frozen=True)
class PairPlan:
    """Planned mixing pairs: (scope, i, d) pairs frame i with frame i+d.

    `scope` is the sequence id, or `*` when pairing runs over the whole
    dataset in order (cross-sequence mode).
    """

    pairs: List[Tuple[str, int, int]]

    def __len__(self):
        return len(self.pairs)


def stable_seed(*parts) -> int:
    """64-bit seed from a stable hash; independent of interpreter hashing."""
    digest = hashlib.blake2b(repr(parts).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def enumerate_pairs(dataset: Dataset, s: int, cross_sequence: bool = False) -> PairPlan:
    """All within-scope (i, i+d) pairs for d = 1..s, in (scope, d, i) order.

    Pairs with an empty-point-cloud member are excluded; indices still refer
    to positions in the full per-scope frame list.
    """
    if s < 1:
        raise ValueError("scale must be >= 1")
    if cross_sequence:
        scopes = {CROSS_SEQ_SCOPE: dataset.frames} if dataset.frames else {}
    else:
        scopes = dataset.sequences()
    pairs = []
    for scope in sorted(scopes):
        frames = scopes[scope]
        length = len(frames)
        for d in range(1, s + 1):
            for i in range(length - d):
                if frames[i].is_empty or frames[i + d].is_empty:
                    continue
                pairs.append((scope, i, d))
    return PairPlan(pairs)


def cga_frame(frame: Frame, rng, cfg: AugmentConfig) -> Frame:
    """Scale one frame by a uniform random factor from cfg.cga_range.

    Spatial coordinates and keypoint labels share the factor; doppler and
    intensity columns and class-probability labels are untouched.
    """
    low, high = cfg.cga_range
    u = rng.uniform(low, high)
    points = frame.points.copy()
    if points.shape[0]:
        points[:, :3] *= u
    if isinstance(frame.label, Keypoints):
        label = Keypoints(frame.label.joints * u)
    else:
        label = ClassProbs(frame.label.probs.copy())
    return replace(frame, points=points, label=label)


def stack_frame(frame: Frame, k: int, target_count: int, rng) -> List[Frame]:
    """Zero-pad to target_count points, then emit k random resamples."""
    if target_count < 1:
        raise ValueError("target_count must be >= 1")
    n, dims = frame.points.shape
    if n < target_count:
        pool = np.vstack([frame.points, np.zeros((target_count - n, dims))])
    else:
        pool = frame.points
    out = []
    for _ in range(k):
        idx = rng.integers(0, pool.shape[0], size=target_count)
        out.append(replace(frame, points=pool[idx].copy()))
    return out


def _map_plan(worker, items, threads):
    if threads and threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(worker, items))
    return [worker(item) for item in items]


def _mix_worker(dataset, cfg, apply_cga):
    scopes = (
        {CROSS_SEQ_SCOPE: dataset.frames}
        if cfg.cross_sequence
        else dataset.sequences()
    )

    def worker(pair):
        scope, i, d = pair
        frames = scopes[scope]
        f0, f1 = frames[i], frames[i + d]
        rng = np.random.default_rng(stable_seed(cfg.seed, scope, i, d))
        mixed = mix_frames(f0, f1, cfg.mix, rng)
        if apply_cga:
            mixed = cga_frame(mixed, rng, cfg)
        if scope == CROSS_SEQ_SCOPE:
            # Boundary pairs break per-sequence time ordering; give each mixed
            # frame its own sequence.
            return replace(mixed, seq_id=f"{f0.seq_id}#aug-x{i}-d{d}")
        return replace(mixed, seq_id=f"{f0.seq_id}#aug-d{d}")

    return worker


def augment(dataset: Dataset, cfg: AugmentConfig, threads: Optional[int] = None) -> Dataset:
    """Return the original frames plus the method's synthetic frames.

    Deterministic for a fixed cfg.seed, independent of `threads`.
    """
    if not dataset.frames:
        return Dataset(meta=None, frames=[])

    new_frames: List[Frame] = []
    if cfg.method in ("wixup", "wixup+"):
        plan = enumerate_pairs(dataset, cfg.scale, cfg.cross_sequence)
        worker = _mix_worker(dataset, cfg, apply_cga=cfg.method == "wixup+")
        new_frames = _map_plan(worker, plan.pairs, threads)
    elif cfg.method == "cga":
        items = [
            (seq, i, c)
            for seq, frames in sorted(dataset.sequences().items())
            for c in range(1, cfg.scale + 1)
            for i in range(len(frames))
        ]
        scopes = dataset.sequences()

        def worker(item):
            seq, i, c = item
            rng = np.random.default_rng(stable_seed(cfg.seed, seq, i, c))
            out = cga_frame(scopes[seq][i], rng, cfg)
            return replace(out, seq_id=f"{seq}#cga{c}")

        new_frames = _map_plan(worker, items, threads)
    elif cfg.method == "stack":
        items = [
            (seq, i)
            for seq, frames in sorted(dataset.sequences().items())
            for i in range(len(frames))
        ]
        scopes = dataset.sequences()

        def worker(item):
            seq, i = item
            rng = np.random.default_rng(stable_seed(cfg.seed, seq, i))
            copies = stack_frame(scopes[seq][i], cfg.stack_k, cfg.stack_target_count, rng)
            return [
                replace(fr, seq_id=f"{seq}#stack{j + 1}")
                for j, fr in enumerate(copies)
            ]

        new_frames = [fr for group in _map_plan(worker, items, threads) for fr in group]

    return make_dataset(list(dataset.frames) + new_frames, dataset.meta)


def wixup_output_size(dataset: Dataset, s: int, cross_sequence: bool = False) -> int:
    """Exact output frame count for the mixing method."""
    return len(dataset.frames) + len(enumerate_pairs(dataset, s, cross_sequence))
