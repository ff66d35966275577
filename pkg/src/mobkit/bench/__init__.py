"""Synthetic benchmark: shape generation with analytic ground truth,
motion-variation augmentation, evaluation metrics, and the annotation codec."""
from mobkit.bench.codec import (
    AnnotationFormatError,
    read_annotation,
    write_annotation,
)
from mobkit.bench.generate import (
    ARCHETYPES,
    AnnotatedPart,
    Annotation,
    AugmentLimits,
    augment_motion,
    generate,
    jitter,
)
from mobkit.bench.metrics import EvalReport, evaluate, proposal_recall

__all__ = [
    "ARCHETYPES",
    "AnnotatedPart",
    "Annotation",
    "AnnotationFormatError",
    "AugmentLimits",
    "EvalReport",
    "augment_motion",
    "evaluate",
    "generate",
    "jitter",
    "proposal_recall",
    "read_annotation",
    "write_annotation",
]
