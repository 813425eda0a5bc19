"""Skeleton layouts: joint naming, hip indices for facing, body/hand split."""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class SkeletonSpec:
    name: str
    joint_names: tuple
    left_hip: int = 1
    right_hip: int = 2
    hand_joints: tuple = ()

    @property
    def joints(self) -> int:
        return len(self.joint_names)

    def body_joints(self) -> tuple:
        hands = set(self.hand_joints)
        return tuple(j for j in range(self.joints) if j not in hands)


# 8-joint desk skeleton, root at 0 by convention.
DESK_SKELETON = SkeletonSpec(
    name="desk8",
    joint_names=(
        "root", "left_hip", "right_hip", "spine",
        "head", "left_hand", "right_hand", "foot",
    ),
    left_hip=1,
    right_hip=2,
    hand_joints=(5, 6),
)

# 52-joint preset (156-dim flattened): 22 body joints + 30 hand joints.
FULL_SKELETON = SkeletonSpec(
    name="full52",
    joint_names=tuple(
        [f"body_{i}" for i in range(22)] + [f"hand_{i}" for i in range(30)]
    ),
    left_hip=1,
    right_hip=2,
    hand_joints=tuple(range(22, 52)),
)

SKELETONS = {s.name: s for s in (DESK_SKELETON, FULL_SKELETON)}
