"""Keypoint-distance safety supervision.

Every tick the follower's guarded arm points (7 per arm, see
kinematics.Chain.keypoints) are checked against the leader's hand points
(5 per hand: center plus four offsets).  If any pair comes closer than the
threshold the verdict flips to unsafe and execution must hold; it flips
back only once the minimum distance clears threshold + hysteresis, so a
hand hovering at the boundary cannot chatter the robot.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import Chain

# offsets around each hand center, scaled by the hand radius
_HAND_OFFSETS = np.array(
    [
        [0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
    ]
)


@dataclass(frozen=True)
class SafetyStatus:
    safe: bool
    min_distance: float
    robot_point: int  # index into the 14 guarded points (left arm first)
    hand_point: int  # index into the 10 hand points (left hand first)


def robot_keypoints(left: Chain, right: Chain, q_left: np.ndarray, q_right: np.ndarray) -> np.ndarray:
    """The 14 guarded points: left-arm 7 then right-arm 7."""
    return np.vstack([left.keypoints(q_left), right.keypoints(q_right)])


def hand_points(
    left_center: np.ndarray | None,
    right_center: np.ndarray | None,
    radius: float,
) -> np.ndarray:
    """The leader hand points: 5 per observed hand, left first."""
    parts = []
    for center in (left_center, right_center):
        if center is not None:
            parts.append(np.asarray(center) + radius * _HAND_OFFSETS)
    if not parts:
        return np.zeros((0, 3))
    return np.vstack(parts)


def check_safety(
    robot_points: np.ndarray,
    leader_points: np.ndarray,
    threshold: float,
    hysteresis: float,
    prev_safe: bool,
) -> SafetyStatus:
    """Hysteretic verdict: safe->unsafe when the minimum pair distance drops
    strictly below threshold; unsafe->safe only once it reaches
    threshold + hysteresis.  No observed hands means safe.
    """
    if leader_points.shape[0] == 0:
        return SafetyStatus(safe=True, min_distance=float("inf"), robot_point=-1, hand_point=-1)
    diff = robot_points[:, None, :] - leader_points[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    flat = int(np.argmin(d2))
    ri, hi = divmod(flat, leader_points.shape[0])
    dmin = float(np.sqrt(d2[ri, hi]))
    if prev_safe:
        safe = not (dmin < threshold)
    else:
        safe = dmin >= threshold + hysteresis
    return SafetyStatus(safe=safe, min_distance=dmin, robot_point=ri, hand_point=hi)
