"""mobkit: part mobility extraction from single static 3D point clouds."""

__version__ = "0.1.0"

from mobkit.core import (
    Line,
    Mobility,
    MotionAxis,
    MotionFlow,
    MotionType,
    MoveAmounts,
    PointCloud,
)

__all__ = [
    "Line",
    "Mobility",
    "MotionAxis",
    "MotionFlow",
    "MotionType",
    "MoveAmounts",
    "PointCloud",
    "__version__",
]
