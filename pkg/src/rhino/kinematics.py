"""Forward kinematics for the follower's serial arm chains.

Each arm is a fixed chain of revolute joints.  A joint contributes a
translation (its offset from the parent frame) followed by a rotation about
a fixed local axis.  Composing those gives every joint origin in world
coordinates; the guarded keypoints and the reach targets both come from
these origins.

Also provides a small damped-least-squares position IK used by motion
skill executors to track the leader's hand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class JointSpec:
    """One revolute joint: translation from parent, then rotation about axis."""

    name: str
    offset: tuple[float, float, float]
    axis: tuple[float, float, float]


@dataclass(frozen=True)
class ChainSpec:
    """A serial arm: ordered joints plus the semantic frame names the
    safety keypoints are built from."""

    joints: tuple[JointSpec, ...]
    frames: dict[str, str]  # semantic name -> joint name

    def joint_index(self, name: str) -> int:
        for i, j in enumerate(self.joints):
            if j.name == name:
                return i
        raise KeyError(name)


def rotation_about(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rotation matrix about a unit axis (Rodrigues form)."""
    x, y, z = axis
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


class Chain:
    """Compiled form of a ChainSpec with precomputed numpy constants."""

    def __init__(self, spec: ChainSpec):
        self.spec = spec
        self.n = len(spec.joints)
        self.offsets = np.array([j.offset for j in spec.joints], dtype=float)
        axes = np.array([j.axis for j in spec.joints], dtype=float)
        norms = np.linalg.norm(axes, axis=1, keepdims=True)
        self.axes = axes / norms
        self._frame_idx = {sem: spec.joint_index(jn) for sem, jn in spec.frames.items()}

    def fk(self, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Joint origins (n,3) and world rotations (n,3,3) for angles q."""
        origins = np.empty((self.n, 3))
        rotations = np.empty((self.n, 3, 3))
        r = np.eye(3)
        p = np.zeros(3)
        for i in range(self.n):
            p = p + r @ self.offsets[i]
            origins[i] = p
            r = r @ rotation_about(self.axes[i], q[i])
            rotations[i] = r
        return origins, rotations

    def joint_origins(self, q: np.ndarray) -> np.ndarray:
        return self.fk(q)[0]

    def frame_origin(self, q: np.ndarray, semantic: str) -> np.ndarray:
        return self.joint_origins(q)[self._frame_idx[semantic]]

    def keypoints(self, q: np.ndarray) -> np.ndarray:
        """The 7 guarded points of this arm, in a fixed order:

        0 shoulder-pitch origin, 1 shoulder-yaw origin, 2 elbow origin,
        3 wrist origin, 4 midpoint shoulder-yaw..elbow, 5 midpoint
        elbow..wrist, 6 the point one third beyond the elbow toward the
        wrist (elbow + (wrist - elbow) / 3).
        """
        origins = self.joint_origins(q)
        sp = origins[self._frame_idx["shoulder_pitch"]]
        sy = origins[self._frame_idx["shoulder_yaw"]]
        el = origins[self._frame_idx["elbow"]]
        wr = origins[self._frame_idx["wrist"]]
        return np.array(
            [
                sp,
                sy,
                el,
                wr,
                (sy + el) / 2.0,
                (el + wr) / 2.0,
                el + (wr - el) / 3.0,
            ]
        )

    def wrist(self, q: np.ndarray) -> np.ndarray:
        return self.frame_origin(q, "wrist")

    def ik_position(
        self,
        q0: np.ndarray,
        target: np.ndarray,
        iters: int = 40,
        tol: float = 1e-4,
        damping: float = 0.1,
        step_limit: float = 0.4,
    ) -> np.ndarray:
        """Damped least-squares IK driving the wrist origin to target.

        Deterministic: fixed iteration budget, no randomness.  Returns the
        best angles found; caller decides whether residual error matters.
        """
        q = q0.astype(float).copy()
        wrist_idx = self._frame_idx["wrist"]
        lam2 = damping * damping
        for _ in range(iters):
            origins, rotations = self.fk(q)
            pe = origins[wrist_idx]
            err = target - pe
            if np.dot(err, err) < tol * tol:
                break
            jac = np.zeros((3, self.n))
            for i in range(wrist_idx):
                axis_w = self.axes[i] if i == 0 else rotations[i - 1] @ self.axes[i]
                jac[:, i] = np.cross(axis_w, pe - origins[i])
            jjt = jac @ jac.T + lam2 * np.eye(3)
            dq = jac.T @ np.linalg.solve(jjt, err)
            norm = np.linalg.norm(dq)
            if norm > step_limit:
                dq *= step_limit / norm
            q += dq
        return q


def parse_chain(data: dict) -> ChainSpec:
    joints = tuple(
        JointSpec(
            name=j["name"],
            offset=tuple(float(v) for v in j["offset"]),
            axis=tuple(float(v) for v in j["axis"]),
        )
        for j in data["joints"]
    )
    frames = {str(k): str(v) for k, v in data["frames"].items()}
    return ChainSpec(joints=joints, frames=frames)


def chain_to_jsonable(spec: ChainSpec) -> dict:
    return {
        "joints": [
            {"name": j.name, "offset": list(j.offset), "axis": list(j.axis)}
            for j in spec.joints
        ],
        "frames": dict(spec.frames),
    }
