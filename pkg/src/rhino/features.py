"""Leader-intention features and the nearest-centroid reference classifier.

The per-tick observation is encoded into a fixed 77-dimensional vector:

  [ 0:36)  body: 6D rotation (first two rotation-matrix columns, column
           major) for six leader joints, in order wrist/elbow/shoulder of
           the left arm then wrist/elbow/shoulder of the right arm
  [36:48)  hand pose: six joint angles per hand, left hand first
  [48:58)  hand occupancy: 5 slots per follower gripper (left first);
           slot k is 1 when the gripper holds the scenario's k-th object,
           all zeros when empty
  [58:77)  hand details: left hand x,y; right hand x,y; head height; then
           per hand a 7-value nearest-object block (5-slot one-hot of the
           object's kind, distance to it, overlap score in [0,1])

Missing pieces (no objects, no observed hand) are zero-filled.  The
classifier is deliberately simple: per-class mean and standard deviation,
classification by smallest variance-scaled Euclidean distance, ties
broken toward the lowest intention id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .occupancy import HandOccupancy

FEATURE_DIM = 77
BODY = slice(0, 36)
HAND_POSE = slice(36, 48)
OCCUPANCY = slice(48, 58)
DETAILS = slice(58, 77)

N_BODY_JOINTS = 6  # wrist/elbow/shoulder x both arms
N_HAND_JOINTS = 6
OCC_SLOTS = 5


@dataclass
class ObservationBundle:
    """Everything the encoder needs about one tick, follower-frame metric
    coordinates throughout."""

    body_rot6d: np.ndarray  # (6, 6) rows follow the BODY joint order
    hand_joints: np.ndarray  # (2, 6) joint angles, left hand first
    occupancy: HandOccupancy  # follower gripper contents
    left_hand: np.ndarray | None  # (3,) leader left-hand position
    right_hand: np.ndarray | None  # (3,)
    head_z: float
    # (object id, position (3,), radius) for every object with a known pose
    objects: list[tuple[int, np.ndarray, float]] = field(default_factory=list)
    hand_radius: float = 0.05


def rot6d(matrix: np.ndarray) -> np.ndarray:
    """First two columns of a rotation matrix, column major (6 values)."""
    return matrix[:, :2].T.reshape(6)


def _occupancy_slots(held: int | None, index: dict[int, int]) -> np.ndarray:
    out = np.zeros(OCC_SLOTS)
    if held is not None and held in index:
        out[index[held]] = 1.0
    return out


def _nearest_object_block(
    hand: np.ndarray | None,
    objects: list[tuple[int, np.ndarray, float]],
    index: dict[int, int],
    hand_radius: float,
) -> np.ndarray:
    out = np.zeros(7)
    if hand is None or not objects:
        return out
    best = None
    best_d = None
    for oid, pos, radius in objects:
        d = float(np.linalg.norm(hand - pos))
        if best_d is None or d < best_d:
            best, best_d = (oid, radius), d
    oid, radius = best
    if oid in index:
        out[index[oid]] = 1.0
    out[5] = best_d
    out[6] = max(0.0, 1.0 - best_d / (hand_radius + radius))
    return out


def encode_features(bundle: ObservationBundle, object_order: list[int]) -> np.ndarray:
    """Encode one observation into the 77-dim layout described above.

    object_order fixes which occupancy/one-hot slot each object id owns.
    """
    index = {oid: i for i, oid in enumerate(object_order[:OCC_SLOTS])}
    x = np.zeros(FEATURE_DIM)
    x[BODY] = np.asarray(bundle.body_rot6d, dtype=float).reshape(36)
    x[HAND_POSE] = np.asarray(bundle.hand_joints, dtype=float).reshape(12)
    x[48:53] = _occupancy_slots(bundle.occupancy.left, index)
    x[53:58] = _occupancy_slots(bundle.occupancy.right, index)
    details = np.zeros(19)
    if bundle.left_hand is not None:
        details[0:2] = bundle.left_hand[:2]
    if bundle.right_hand is not None:
        details[2:4] = bundle.right_hand[:2]
    details[4] = bundle.head_z
    details[5:12] = _nearest_object_block(
        bundle.left_hand, bundle.objects, index, bundle.hand_radius
    )
    details[12:19] = _nearest_object_block(
        bundle.right_hand, bundle.objects, index, bundle.hand_radius
    )
    x[DETAILS] = details
    return x


STD_FLOOR = 1e-6


@dataclass
class CentroidModel:
    """Per-class mean/std table; classification by scaled Euclidean distance."""

    classes: np.ndarray  # (C,) intention ids, strictly ascending
    means: np.ndarray  # (C, FEATURE_DIM)
    stds: np.ndarray  # (C, FEATURE_DIM), floored at STD_FLOOR

    def classify(self, x: np.ndarray) -> int:
        z = (x[None, :] - self.means) / self.stds
        d2 = np.einsum("ij,ij->i", z, z)
        return int(self.classes[int(np.argmin(d2))])  # argmin: lowest id on ties

    def distances(self, x: np.ndarray) -> dict[int, float]:
        z = (x[None, :] - self.means) / self.stds
        d2 = np.einsum("ij,ij->i", z, z)
        return {int(c): float(np.sqrt(v)) for c, v in zip(self.classes, d2)}


def fit_centroids(samples: np.ndarray, labels: np.ndarray) -> CentroidModel:
    """Per-class mean and std from labeled feature rows."""
    samples = np.asarray(samples, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if samples.ndim != 2 or samples.shape[1] != FEATURE_DIM:
        raise ValueError(f"samples must be (N, {FEATURE_DIM})")
    if len(labels) != len(samples) or len(samples) == 0:
        raise ValueError("need one label per sample and at least one sample")
    classes = np.unique(labels)
    means = np.empty((len(classes), FEATURE_DIM))
    stds = np.empty((len(classes), FEATURE_DIM))
    for i, c in enumerate(classes):
        rows = samples[labels == c]
        means[i] = rows.mean(axis=0)
        stds[i] = np.maximum(rows.std(axis=0), STD_FLOOR)
    return CentroidModel(classes=classes, means=means, stds=stds)


def save_model(model: CentroidModel, path: str | Path):
    doc = {
        "feature_dim": FEATURE_DIM,
        "classes": [
            {
                "intention": int(c),
                "mean": [float(v) for v in model.means[i]],
                "std": [float(v) for v in model.stds[i]],
            }
            for i, c in enumerate(model.classes)
        ],
    }
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(json.dumps(doc))
    tmp.replace(path)


def load_model(path: str | Path) -> CentroidModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("feature_dim") != FEATURE_DIM:
        raise ValueError(f"model feature_dim must be {FEATURE_DIM}")
    entries = sorted(doc["classes"], key=lambda e: e["intention"])
    if not entries:
        raise ValueError("model has no classes")
    return CentroidModel(
        classes=np.array([e["intention"] for e in entries], dtype=int),
        means=np.array([e["mean"] for e in entries], dtype=float),
        stds=np.maximum(np.array([e["std"] for e in entries], dtype=float), STD_FLOOR),
    )


def read_samples(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Labeled feature rows from a JSONL file of {"label": id, "features": [...]}."""
    feats = []
    labels = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        feats.append(row["features"])
        labels.append(row["label"])
    if not feats:
        raise ValueError(f"no samples in {path}")
    return np.array(feats, dtype=float), np.array(labels, dtype=int)
