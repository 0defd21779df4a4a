"""Dataset model, JSONL serialization and synthetic data generation.

A dataset is a list of time-stamped frames grouped into sequences. Each frame
carries a point cloud, either 3D (x, y, z) or 5D (x, y, z, doppler,
intensity), and a label that is either a J x 3 keypoint matrix or a length-C
class-probability vector. Class labels arrive one-hot (`{"class": k,
"num_classes": C}`) and are expanded to probability vectors at ingestion so
that label mixing needs no special case.

The on-disk format is JSONL: an optional header line
`{"meta": {"label": "keypoints", "J": 19, "dims": 3}}` followed by one frame
per line with keys seq, t, points, label. Writing is byte-deterministic
(fixed key order, shortest round-trip float formatting); a dataset with zero
frames is written as an empty file.
"""

import json
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Union

import numpy as np

from .errors import DataError

KEYPOINTS = "keypoints"
CLASS = "class"


@dataclass(frozen=True)
class DatasetMeta:
    label_kind: str  # "keypoints" | "class"
    label_size: int  # J joints or C classes
    dims: int  # 3 or 5

    def __post_init__(self):
        if self.label_kind not in (KEYPOINTS, CLASS):
            raise DataError(f"unknown label kind {self.label_kind!r}")
        if self.label_size < 1:
            raise DataError("label size must be >= 1")
        if self.dims not in (3, 5):
            raise DataError(f"point dimensionality must be 3 or 5, got {self.dims}")


@dataclass(eq=False, frozen=True)
class Keypoints:
    """J x 3 keypoint matrix in meters."""

    joints: np.ndarray

    def __eq__(self, other):
        return isinstance(other, Keypoints) and np.array_equal(self.joints, other.joints)


@dataclass(eq=False, frozen=True)
class ClassProbs:
    """Length-C probability vector; one-hot for real (unmixed) data."""

    probs: np.ndarray

    def __eq__(self, other):
        return isinstance(other, ClassProbs) and np.array_equal(self.probs, other.probs)


Label = Union[Keypoints, ClassProbs]


def one_hot(cls: int, num_classes: int) -> ClassProbs:
    if not 0 <= cls < num_classes:
        raise DataError(f"class {cls} out of range for {num_classes} classes")
    probs = np.zeros(num_classes)
    probs[cls] = 1.0
    return ClassProbs(probs)


@dataclass(eq=False)
class Frame:
    seq_id: str
    t: float
    points: np.ndarray  # (N, 3) or (N, 5); N may be 0
    label: Label

    def __eq__(self, other):
        return (
            isinstance(other, Frame)
            and self.seq_id == other.seq_id
            and self.t == other.t
            and np.array_equal(self.points, other.points)
            and self.label == other.label
        )

    @property
    def is_empty(self) -> bool:
        return self.points.shape[0] == 0


@dataclass(eq=False)
class Dataset:
    """Validated, immutable-by-convention collection of frames.

    Frames are ordered by sequence id, and within each sequence by strictly
    increasing timestamp. `meta` is None only for the empty dataset.
    """

    meta: Optional[DatasetMeta]
    frames: List[Frame] = field(default_factory=list)

    def __post_init__(self):
        _validate(self)

    def __len__(self):
        return len(self.frames)

    def __eq__(self, other):
        return (
            isinstance(other, Dataset)
            and self.meta == other.meta
            and self.frames == other.frames
        )

    def sequences(self) -> Dict[str, List[Frame]]:
        by_seq: Dict[str, List[Frame]] = {}
        for f in self.frames:
            by_seq.setdefault(f.seq_id, []).append(f)
        return by_seq


def _label_meta(label: Label):
    if isinstance(label, Keypoints):
        return KEYPOINTS, label.joints.shape[0]
    return CLASS, label.probs.shape[0]


def _check_label(label: Label, meta: DatasetMeta, where: str):
    kind, size = _label_meta(label)
    if kind != meta.label_kind or size != meta.label_size:
        raise DataError(
            f"{where}: label is {kind}[{size}], dataset expects "
            f"{meta.label_kind}[{meta.label_size}]"
        )
    if isinstance(label, Keypoints):
        if label.joints.shape != (meta.label_size, 3):
            raise DataError(f"{where}: keypoints must be ({meta.label_size}, 3)")
        if not np.all(np.isfinite(label.joints)):
            raise DataError(f"{where}: non-finite keypoint coordinate")
    else:
        probs = label.probs
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise DataError(f"{where}: class probabilities must be finite and >= 0")
        if abs(float(probs.sum()) - 1.0) > 1e-9:
            raise DataError(f"{where}: class probabilities sum to {probs.sum()!r}, not 1")


def _check_points(points: np.ndarray, meta: DatasetMeta, where: str):
    if points.ndim != 2 or points.shape[1] != meta.dims:
        raise DataError(
            f"{where}: points shape {points.shape} does not match {meta.dims}D dataset"
        )
    if not np.all(np.isfinite(points)):
        raise DataError(f"{where}: non-finite point coordinate")


def _validate(dataset: Dataset):
    if not dataset.frames:
        if dataset.meta is not None:
            raise DataError("empty dataset must have meta=None")
        return
    if dataset.meta is None:
        raise DataError("non-empty dataset requires meta")
    meta = dataset.meta
    last_t: Dict[str, float] = {}
    seen_order: List[str] = []
    for k, f in enumerate(dataset.frames):
        where = f"frame {k} (seq {f.seq_id!r})"
        if not f.seq_id:
            raise DataError(f"{where}: empty sequence id")
        if not math.isfinite(f.t):
            raise DataError(f"{where}: non-finite timestamp")
        _check_points(f.points, meta, where)
        _check_label(f.label, meta, where)
        if f.seq_id in last_t:
            if f.t <= last_t[f.seq_id]:
                raise DataError(
                    f"{where}: timestamp {f.t!r} not greater than previous "
                    f"{last_t[f.seq_id]!r} in the same sequence"
                )
        else:
            seen_order.append(f.seq_id)
        last_t[f.seq_id] = f.t
    # Grouping must be a partition: all frames of one sequence contiguous,
    # sequences in sorted order.
    if seen_order != sorted(seen_order):
        raise DataError("sequences must appear in sorted order")
    prev = None
    closed = set()
    for f in dataset.frames:
        if f.seq_id != prev:
            if f.seq_id in closed:
                raise DataError(f"sequence {f.seq_id!r} is not contiguous")
            if prev is not None:
                closed.add(prev)
            prev = f.seq_id


def make_dataset(frames: List[Frame], meta: Optional[DatasetMeta] = None) -> Dataset:
    """Build a dataset from frames in arbitrary order.

    Frames are grouped by sequence id (sorted) keeping per-sequence input
    order; meta is inferred from the first frame when not given.
    """
    if not frames:
        return Dataset(meta=None, frames=[])
    if meta is None:
        kind, size = _label_meta(frames[0].label)
        pts = frames[0].points
        dims = pts.shape[1] if pts.ndim == 2 and pts.shape[0] > 0 else 3
        meta = DatasetMeta(kind, size, dims)
    order: Dict[str, List[Frame]] = {}
    for f in frames:
        order.setdefault(f.seq_id, []).append(f)
    grouped = [f for seq in sorted(order) for f in order[seq]]
    return Dataset(meta=meta, frames=grouped)


# ---------------------------------------------------------------------------
# JSONL serialization
# ---------------------------------------------------------------------------


def _reject_constant(value):
    raise DataError(f"non-finite JSON value {value!r}")


def _parse_label(obj, line_no: int) -> Label:
    if not isinstance(obj, dict):
        raise DataError(f"line {line_no}: label must be an object")
    if "keypoints" in obj:
        try:
            joints = np.asarray(obj["keypoints"], dtype=np.float64)
        except (TypeError, ValueError):
            raise DataError(f"line {line_no}: non-numeric keypoint") from None
        if joints.ndim != 2 or joints.shape[1] != 3:
            raise DataError(f"line {line_no}: keypoints must be a J x 3 matrix")
        return Keypoints(joints)
    if "class" in obj:
        if "num_classes" not in obj:
            raise DataError(f"line {line_no}: class label needs num_classes")
        try:
            return one_hot(int(obj["class"]), int(obj["num_classes"]))
        except DataError as e:
            raise DataError(f"line {line_no}: {e}") from None
    if "probs" in obj:
        try:
            probs = np.asarray(obj["probs"], dtype=np.float64)
        except (TypeError, ValueError):
            raise DataError(f"line {line_no}: non-numeric probability") from None
        if probs.ndim != 1:
            raise DataError(f"line {line_no}: probs must be a flat vector")
        return ClassProbs(probs)
    raise DataError(f"line {line_no}: label must have keypoints, class or probs")


def _parse_frame(obj, line_no: int, dims_hint: Optional[int]) -> Frame:
    for key in ("seq", "t", "points", "label"):
        if key not in obj:
            raise DataError(f"line {line_no}: missing key {key!r}")
    seq = obj["seq"]
    if not isinstance(seq, str) or not seq:
        raise DataError(f"line {line_no}: seq must be a non-empty string")
    try:
        t = float(obj["t"])
    except (TypeError, ValueError):
        raise DataError(f"line {line_no}: t must be a number") from None
    raw_points = obj["points"]
    if not isinstance(raw_points, list) or not all(
        isinstance(p, list) for p in raw_points
    ):
        raise DataError(f"line {line_no}: points must be a list of coordinate lists")
    if raw_points:
        widths = {len(p) for p in raw_points}
        if len(widths) != 1:
            raise DataError(f"line {line_no}: ragged point rows {sorted(widths)}")
        (width,) = widths
        if width not in (3, 5):
            raise DataError(f"line {line_no}: points must be 3D or 5D, got {width}D")
        try:
            points = np.asarray(raw_points, dtype=np.float64)
        except (TypeError, ValueError):
            raise DataError(f"line {line_no}: non-numeric point coordinate") from None
    else:
        points = np.empty((0, dims_hint or 3))
    return Frame(seq_id=seq, t=t, points=points, label=_parse_label(obj["label"], line_no))


def _parse_meta(obj, line_no: int) -> DatasetMeta:
    m = obj["meta"]
    if not isinstance(m, dict) or "label" not in m or "dims" not in m:
        raise DataError(f"line {line_no}: meta needs label and dims")
    kind = m["label"]
    if kind == KEYPOINTS:
        size = m.get("J")
    elif kind == CLASS:
        size = m.get("C")
    else:
        raise DataError(f"line {line_no}: unknown label kind {kind!r}")
    if not isinstance(size, int):
        raise DataError(f"line {line_no}: meta needs integer J or C")
    try:
        return DatasetMeta(kind, size, int(m["dims"]))
    except DataError as e:
        raise DataError(f"line {line_no}: {e}") from None


def read_dataset(path) -> Dataset:
    """Read and validate a JSONL dataset.

    Raises DataError with the offending line number for malformed lines,
    mixed label variants, dimensionality mismatches, non-finite values and
    non-monotone timestamps.
    """
    meta: Optional[DatasetMeta] = None
    frames: List[Frame] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line, parse_constant=_reject_constant)
            except json.JSONDecodeError as e:
                raise DataError(f"line {line_no}: malformed JSON ({e.msg})") from None
            if not isinstance(obj, dict):
                raise DataError(f"line {line_no}: expected a JSON object")
            if "meta" in obj:
                if line_no != 1 or meta is not None:
                    raise DataError(f"line {line_no}: meta allowed only on line 1")
                meta = _parse_meta(obj, line_no)
                continue
            frame = _parse_frame(obj, line_no, meta.dims if meta else None)
            if meta is None:
                kind, size = _label_meta(frame.label)
                dims = frame.points.shape[1] if not frame.is_empty else 3
                meta = DatasetMeta(kind, size, dims)
            where = f"line {line_no}"
            if not frame.is_empty and frame.points.shape[1] != meta.dims:
                raise DataError(
                    f"{where}: {frame.points.shape[1]}D points in a {meta.dims}D dataset"
                )
            if frame.is_empty and frame.points.shape[1] != meta.dims:
                frame = replace(frame, points=np.empty((0, meta.dims)))
            _check_points(frame.points, meta, where)
            _check_label(frame.label, meta, where)
            frames.append(frame)
    if not frames:
        return Dataset(meta=None, frames=[])
    # Group by sequence preserving in-file order, then validate via Dataset.
    order: Dict[str, List[Frame]] = {}
    for f in frames:
        order.setdefault(f.seq_id, []).append(f)
    grouped = [f for seq in sorted(order) for f in order[seq]]
    return Dataset(meta=meta, frames=grouped)


def _format_label(label: Label):
    if isinstance(label, Keypoints):
        return {"keypoints": label.joints.tolist()}
    probs = label.probs
    hot = np.flatnonzero(probs == 1.0)
    if hot.size == 1 and probs.sum() == 1.0 and np.count_nonzero(probs) == 1:
        return {"class": int(hot[0]), "num_classes": int(probs.shape[0])}
    return {"probs": probs.tolist()}


def write_dataset(dataset: Dataset, path) -> None:
    """Write a dataset as canonical JSONL (byte-deterministic)."""
    with open(path, "w", encoding="utf-8") as fh:
        if not dataset.frames:
            return
        meta = dataset.meta
        size_key = "J" if meta.label_kind == KEYPOINTS else "C"
        header = {"meta": {"label": meta.label_kind, size_key: meta.label_size, "dims": meta.dims}}
        fh.write(json.dumps(header, separators=(",", ":"), allow_nan=False) + "\n")
        for f in dataset.frames:
            obj = {
                "seq": f.seq_id,
                "t": f.t,
                "points": f.points.tolist(),
                "label": _format_label(f.label),
            }
            fh.write(json.dumps(obj, separators=(",", ":"), allow_nan=False) + "\n")


# ---------------------------------------------------------------------------
# Synthetic datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SynthConfig:
    """Desk-scale synthetic dataset: smooth keypoint trajectories plus noise.

    Per sequence, a canonical skeleton rides a smoothly wandering center;
    each joint additionally wobbles with its own small sinusoid. Frame points
    are the keypoints with Gaussian position noise and random dropout
    (simulating detection sparsity). `shift` displaces the whole scene,
    emulating a domain gap between otherwise identical datasets.
    """

    sequences: int = 2
    frames_per_seq: int = 50
    frame_rate: float = 10.0
    label_kind: str = KEYPOINTS
    joints: int = 19
    classes: int = 4
    dims: int = 3
    noise: float = 0.02
    dropout: float = 0.1
    shift: tuple = (0.0, 0.0, 0.0)
    wander: float = 0.1  # amplitude scale of the center trajectory, meters
    wobble: float = 0.04  # amplitude scale of per-joint motion, meters
    crouch: float = 0.15  # amplitude of the slow vertical contraction cycle
    lean: float = 0.15  # amplitude of the slow upper-body lean cycle, meters
    crouch_dropout: float = 0.0  # extra dropout when fully crouched
    echoes: int = 1  # independent reflections per joint

    def __post_init__(self):
        if self.sequences < 1 or self.frames_per_seq < 1:
            raise DataError("zero frames requested")
        if self.label_kind not in (KEYPOINTS, CLASS):
            raise DataError(f"unknown label kind {self.label_kind!r}")
        if self.dims not in (3, 5):
            raise DataError("dims must be 3 or 5")
        if not 0.0 <= self.dropout < 1.0:
            raise DataError("dropout must be in [0, 1)")


def _canonical_skeleton(joints: int) -> np.ndarray:
    """Fixed humanish joint layout, deterministic and seed-independent."""
    gen = np.random.default_rng(1234567)
    skel = np.empty((joints, 3))
    skel[:, 0] = gen.uniform(-0.3, 0.3, joints)
    skel[:, 1] = gen.uniform(-0.15, 0.15, joints)
    skel[:, 2] = np.linspace(-0.85, 0.85, joints) + gen.uniform(-0.05, 0.05, joints)
    return skel


def generate_synthetic(config: SynthConfig, seed: int) -> Dataset:
    """Generate a dataset; a pure function of (config, seed)."""
    rng = np.random.default_rng(seed)
    skel = _canonical_skeleton(config.joints)
    shift = np.asarray(config.shift, dtype=np.float64)
    dt = 1.0 / config.frame_rate
    frames: List[Frame] = []
    width = max(2, len(str(config.sequences - 1)))
    for s in range(config.sequences):
        seq_id = f"s{s:0{width}d}"
        seq_class = s % config.classes
        # Center trajectory: base position plus slow sinusoidal wander.
        base = np.array(
            [rng.uniform(-0.05, 0.05), rng.uniform(2.49, 2.51), rng.uniform(0.99, 1.01)]
        )
        amp = config.wander * np.array(
            [rng.uniform(0.6, 1.4), rng.uniform(0.05, 0.15), rng.uniform(0.03, 0.1)]
        )
        freq = rng.uniform(0.08, 0.3, 3)
        phase = rng.uniform(0.0, 2.0 * np.pi, 3)
        if config.label_kind == CLASS:
            # Make the class recoverable from geometry: distance and wander
            # speed depend on it.
            base[1] = 1.8 + 0.35 * seq_class + rng.uniform(0.0, 0.1)
            freq = freq * (1.0 + 0.5 * seq_class)
        # Two posture cycles make the pose recoverable from per-frame
        # statistics: a crouch contracts the skeleton vertically (and can
        # occlude points), a lean displaces the upper body against the lower.
        pose_freq = rng.uniform(0.1, 0.35, 2)
        pose_phase = rng.uniform(0.0, 2.0 * np.pi, 2)
        upper = (skel[:, 2] > np.median(skel[:, 2])).astype(np.float64)
        # Push-pull lean: the upper body moves against the lower, so the
        # joint displacement is large while the centroid trace stays subtle.
        lean_dir = (upper - 0.6 * (1.0 - upper))[:, None] * np.array([0.0, 1.0, 0.0])
        # Per-joint wobble.
        wamp = config.wobble * rng.uniform(0.5, 1.5, (config.joints, 3))
        wfreq = rng.uniform(0.2, 0.8, (config.joints, 3))
        wphase = rng.uniform(0.0, 2.0 * np.pi, (config.joints, 3))
        for k in range(config.frames_per_seq):
            t = k * dt
            center = base + amp * np.sin(2.0 * np.pi * freq * t + phase)
            crouch = np.sin(2.0 * np.pi * pose_freq[0] * t + pose_phase[0])
            lean = np.sin(2.0 * np.pi * pose_freq[1] * t + pose_phase[1])
            posed = skel * (
                1.0 + config.crouch * crouch * np.array([0.5, 0.5, 1.0])
            )
            # The body center rides the contraction (a crouch lowers it), so
            # the posture is visible in the cloud statistics, not just shape.
            posed = posed + np.array([0.0, 0.0, 0.15 * config.crouch * crouch])
            posed = posed + (config.lean * lean) * lean_dir
            keypoints = (
                center
                + posed
                + wamp * np.sin(2.0 * np.pi * wfreq * t + wphase)
                + shift
            )
            p_drop = config.dropout + config.crouch_dropout * 0.5 * (1.0 - crouch)
            reflectors = np.repeat(keypoints, config.echoes, axis=0)
            kept = rng.random(reflectors.shape[0]) >= p_drop
            pts = reflectors[kept] + config.noise * rng.standard_normal((int(kept.sum()), 3))
            if config.dims == 5:
                ph = np.repeat(wphase, config.echoes, axis=0)[kept]
                doppler = 0.3 * np.sin(2.0 * np.pi * freq[1] * t + ph[:, 1])
                intensity = 1.0 + 0.5 * np.abs(np.sin(ph[:, 0]))
                pts = np.column_stack([pts, doppler, intensity])
            if config.label_kind == KEYPOINTS:
                label: Label = Keypoints(keypoints)
            else:
                label = one_hot(seq_class, config.classes)
            frames.append(Frame(seq_id=seq_id, t=t, points=pts, label=label))
    meta = DatasetMeta(
        config.label_kind,
        config.joints if config.label_kind == KEYPOINTS else config.classes,
        config.dims,
    )
    return Dataset(meta=meta, frames=frames)
