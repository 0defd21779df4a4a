"""Self-training loop for unsupervised domain adaptation, plus metrics.

The loop: (1) fit a predictor on labeled source data; (2) split the target
domain into an unlabeled training part and a held-out test part; (3) predict
pseudo-labels for the target-train frames; (4) pair every target-train frame
with a source frame and mix each pair, averaging the source's real label with
the target's pseudo-label; (5) refit on source plus mixed data. The report
compares target-test error before and after.

Target labels never reach the predictor: frames passed to predict() carry
placeholder labels, and the test ground truth is consumed only by the metric.
"""

import json
from dataclasses import dataclass, field, replace
from typing import List, Protocol, Sequence

import numpy as np

from .errors import DataError
from .frames import CLASS, ClassProbs, Dataset, Frame, KEYPOINTS, Keypoints, Label
from .mixer import MixConfig, mix_frames
from .pipeline import stable_seed


class Predictor(Protocol):
    def fit(self, frames: Sequence[Frame]) -> None: ...

    def predict(self, frames: Sequence[Frame]) -> List[Label]: ...


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def mle(pred: Keypoints, gt: Keypoints) -> float:
    """Mean Euclidean distance across joints, in centimeters."""
    if pred.joints.shape != gt.joints.shape:
        raise DataError(
            f"keypoint shape mismatch: {pred.joints.shape} vs {gt.joints.shape}"
        )
    return float(np.linalg.norm(pred.joints - gt.joints, axis=1).mean() * 100.0)


def accuracy(preds: Sequence[ClassProbs], gts: Sequence[ClassProbs]) -> float:
    """Fraction of argmax matches; ties break toward the lowest class index."""
    if len(preds) != len(gts):
        raise DataError(f"length mismatch: {len(preds)} predictions, {len(gts)} labels")
    correct = 0
    for p, g in zip(preds, gts):
        if int(np.argmax(p.probs)) == int(np.argmax(g.probs)):
            correct += 1
    return correct / len(preds) if preds else 0.0


# ---------------------------------------------------------------------------
# Built-in desk-scale predictor
# ---------------------------------------------------------------------------


def _descriptor(frame: Frame) -> np.ndarray:
    """Summary vector: centroid, per-axis std, point count (count unscaled)."""
    pts = frame.points[:, :3]
    if pts.shape[0] == 0:
        return np.zeros(7)
    return np.concatenate([pts.mean(axis=0), pts.std(axis=0), [pts.shape[0]]])


class KnnPredictor:
    """k-nearest-neighbors over per-frame summary descriptors.

    Keypoint labels are stored shape-normalized (joints minus their own
    centroid); a prediction is the mean shape of the k nearest neighbors,
    placed at the query cloud's centroid plus one global cloud-to-label
    offset calibrated over the whole training set. Placing the skeleton at
    the observed cloud keeps the predictor translation-equivariant (a raw
    label average could never reach outside the convex hull of the training
    labels), and the global offset avoids leaning on any single frame's
    noisy cloud centroid. Class predictions are the renormalized sum of the
    neighbors' probability vectors. Distance ties resolve by training order.
    """

    def __init__(self, k: int = 3, seed: int = 0):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self.seed = seed  # reserved; fit/predict are deterministic
        self._descriptors = None
        self._shapes: List[np.ndarray] = []
        self._labels: List[Label] = []
        self._offset = np.zeros(3)
        self._count_scale = 1.0
        self._mean = np.zeros(7)
        self._scale = np.ones(7)

    def fit(self, frames: Sequence[Frame]) -> None:
        if not frames:
            raise DataError("fit called with empty data")
        raw = np.stack([_descriptor(f) for f in frames])
        self._count_scale = max(1.0, raw[:, 6].max())
        centroids = raw[:, :3].copy()
        raw[:, 6] /= self._count_scale
        # Standardize features over the training set; constant dimensions
        # carry no information and drop out of the distance.
        self._mean = raw.mean(axis=0)
        scale = raw.std(axis=0)
        self._scale = np.where(scale > 1e-12, scale, np.inf)
        self._descriptors = (raw - self._mean) / self._scale
        self._labels = [f.label for f in frames]
        if isinstance(frames[0].label, Keypoints):
            anchors = np.stack([f.label.joints.mean(axis=0) for f in frames])
            self._shapes = [
                f.label.joints - anchors[i] for i, f in enumerate(frames)
            ]
            self._offset = (anchors - centroids).mean(axis=0)
        else:
            self._shapes = []
            self._offset = np.zeros(3)

    def predict(self, frames: Sequence[Frame]) -> List[Label]:
        if self._descriptors is None:
            raise DataError("predict called before fit")
        k = min(self.k, len(self._labels))
        out: List[Label] = []
        for f in frames:
            raw = _descriptor(f)
            raw[6] /= self._count_scale
            q = (raw - self._mean) / self._scale
            dist = np.einsum("ij,ij->i", self._descriptors - q, self._descriptors - q)
            nearest = np.argsort(dist, kind="stable")[:k]
            if self._shapes:
                shape = np.mean([self._shapes[i] for i in nearest], axis=0)
                out.append(Keypoints(shape + raw[:3] + self._offset))
            else:
                total = np.sum([self._labels[i].probs for i in nearest], axis=0)
                out.append(ClassProbs(total / total.sum()))
        return out


def knn_predictor(k: int, seed: int = 0) -> KnnPredictor:
    return KnnPredictor(k=k, seed=seed)


# ---------------------------------------------------------------------------
# The UDA loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UdaConfig:
    target_train_fraction: float = 0.5
    pairing: str = "random"  # "random" | "cyclic"
    mix: MixConfig = field(default_factory=MixConfig)
    seed: int = 0
    fine_tune_rounds: int = 1

    def __post_init__(self):
        if not 0.0 < self.target_train_fraction < 1.0:
            raise ValueError("target_train_fraction must be in (0, 1)")
        if self.pairing not in ("random", "cyclic"):
            raise ValueError("pairing must be 'random' or 'cyclic'")
        if self.fine_tune_rounds < 0:
            raise ValueError("fine_tune_rounds must be >= 0")


@dataclass(frozen=True)
class UdaReport:
    task: str
    metric: str
    error_before: float
    error_after: float
    improvement: float  # relative; positive means the loop helped
    counts: dict

    def to_json(self) -> str:
        obj = {
            "task": self.task,
            "metric": self.metric,
            "error_before": self.error_before,
            "error_after": self.error_after,
            "improvement": self.improvement,
            "counts": {
                "source": self.counts["source"],
                "target_train": self.counts["target_train"],
                "target_test": self.counts["target_test"],
                "mixed": self.counts["mixed"],
            },
        }
        return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def _placeholder_label(meta) -> Label:
    if meta.label_kind == KEYPOINTS:
        return Keypoints(np.zeros((meta.label_size, 3)))
    return ClassProbs(np.full(meta.label_size, 1.0 / meta.label_size))


def _strip_labels(frames: Sequence[Frame], meta) -> List[Frame]:
    blank = _placeholder_label(meta)
    return [replace(f, label=blank) for f in frames]


def _evaluate(predictor, frames: List[Frame], gts: List[Label], meta) -> float:
    preds = predictor.predict(_strip_labels(frames, meta))
    if meta.label_kind == KEYPOINTS:
        return float(np.mean([mle(p, g) for p, g in zip(preds, gts)]))
    return accuracy(preds, gts)


def _pair_source_indices(n_pairs: int, n_source: int, pairing: str, rng) -> List[int]:
    if pairing == "cyclic":
        return [i % n_source for i in range(n_pairs)]
    idx: List[int] = []
    while len(idx) < n_pairs:
        idx.extend(rng.permutation(n_source).tolist())
    return idx[:n_pairs]


def run_uda(source: Dataset, target: Dataset, predictor, cfg: UdaConfig) -> UdaReport:
    """Run the five-step self-training loop and report before/after error."""
    if source.meta is None or target.meta is None:
        raise DataError("source and target datasets must be non-empty")
    if source.meta != target.meta:
        raise DataError(f"dataset meta mismatch: {source.meta} vs {target.meta}")
    meta = source.meta

    # Step 1: supervised fit on the source domain.
    predictor.fit(source.frames)

    # Step 2: split target into unlabeled train and held-out test.
    n = len(target.frames)
    n_train = int(round(cfg.target_train_fraction * n))
    if n_train < 1 or n - n_train < 1:
        raise DataError(f"split of {n} target frames leaves an empty part")
    perm = np.random.default_rng(stable_seed(cfg.seed, "uda-split")).permutation(n)
    train = [target.frames[i] for i in perm[:n_train]]
    test = [target.frames[i] for i in perm[n_train:]]
    test_gts = [f.label for f in test]

    error_before = _evaluate(predictor, test, test_gts, meta)

    train_unlabeled = _strip_labels(train, meta)
    source_pool = [f for f in source.frames if not f.is_empty]
    if not source_pool:
        raise DataError("source domain has no non-empty frames to mix")
    mixed_count = 0
    for round_no in range(cfg.fine_tune_rounds):
        # Step 3: pseudo-labels from the current model.
        pseudo = predictor.predict(train_unlabeled)
        # Step 4: pair and mix; labels blend (source real, target pseudo).
        pair_rng = np.random.default_rng(stable_seed(cfg.seed, "uda-pairs", round_no))
        src_idx = _pair_source_indices(len(train), len(source_pool), cfg.pairing, pair_rng)
        mixed: List[Frame] = []
        for j, (frame, label) in enumerate(zip(train, pseudo)):
            if frame.is_empty:
                continue
            rng = np.random.default_rng(stable_seed(cfg.seed, "uda-mix", round_no, j))
            mixed.append(
                mix_frames(
                    source_pool[src_idx[j]],
                    replace(frame, label=label),
                    cfg.mix,
                    rng,
                )
            )
        mixed_count = len(mixed)
        # Step 5: fine-tune on source plus the semi-labeled mixed data.
        predictor.fit(list(source.frames) + mixed)

    error_after = _evaluate(predictor, test, test_gts, meta)

    if meta.label_kind == KEYPOINTS:
        improvement = (error_before - error_after) / error_before if error_before else 0.0
        metric = "mle_cm"
    else:
        improvement = (error_after - error_before) / error_before if error_before else 0.0
        metric = "accuracy"
    return UdaReport(
        task=meta.label_kind,
        metric=metric,
        error_before=error_before,
        error_after=error_after,
        improvement=improvement,
        counts={
            "source": len(source.frames),
            "target_train": len(train),
            "target_test": len(test),
            "mixed": mixed_count,
        },
    )
