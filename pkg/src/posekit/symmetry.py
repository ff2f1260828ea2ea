from dataclasses import dataclass
import math

import numpy as np

from .errors import InvalidArgumentError
from .geometry import axis_angle_matrix

NONE = "none"
CONTINUOUS = "continuous_axis"
DISCRETE = "discrete_axis"
KINDS = (NONE, CONTINUOUS, DISCRETE)

DEFAULT_CONTINUOUS_STEPS = 64


@dataclass(frozen=True)
class SymmetryClass:
    """Object-frame rotational symmetry.

    ``continuous_axis`` objects (bottles, cans) are invariant under any
    rotation about ``axis``; ``discrete_axis`` objects under multiples of
    360/order degrees.
    """

    kind: str = NONE
    axis: tuple = (0.0, 1.0, 0.0)
    order: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown symmetry kind {self.kind!r}")
        a = np.asarray(self.axis, dtype=np.float64).reshape(-1)
        if a.shape != (3,) or abs(np.linalg.norm(a) - 1.0) > 1e-9:
            raise InvalidArgumentError("symmetry axis must be a unit 3-vector")
        object.__setattr__(self, "axis", tuple(float(x) for x in a))
        if self.kind == DISCRETE and int(self.order) < 2:
            raise InvalidArgumentError("discrete symmetry needs order >= 2")

    @classmethod
    def none(cls):
        return cls(NONE)

    @classmethod
    def continuous(cls, axis=(0.0, 1.0, 0.0)):
        return cls(CONTINUOUS, tuple(axis))

    @classmethod
    def discrete(cls, axis, order):
        return cls(DISCRETE, tuple(axis), int(order))

    def group_size(self, steps):
        if self.kind == NONE:
            return 1
        if self.kind == DISCRETE:
            return int(self.order)
        if steps < 1:
            raise InvalidArgumentError("steps must be >= 1")
        return int(steps)

    def rotations(self, steps=DEFAULT_CONTINUOUS_STEPS):
        """Sampled group elements; index 0 is always the identity."""
        n = self.group_size(steps)
        if n == 1:
            return [np.eye(3)]
        return [axis_angle_matrix(self.axis, 2.0 * math.pi * k / n) for k in range(n)]

    def to_dict(self):
        d = {"kind": self.kind, "axis": list(self.axis)}
        if self.kind == DISCRETE:
            d["order"] = self.order
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d.get("kind", NONE), tuple(d.get("axis", (0.0, 1.0, 0.0))), int(d.get("order", 1)))
