# SPDX-License-Identifier: Apache-2.0
# Copyright 2026 The cbtail Authors
"""Long-tailed classification toolkit: stain normalization, class-balanced losses, sampling and metrics."""

from cbtail._core import (
    DegenerateStains,
    Error,
    InvalidArgument,
    MissingFile,
    Model,
    ParseError,
    TooFewPixels,
    angle_degrees,
    class_balanced_plan,
    compute_metrics,
    effective_number_weights,
    ensemble_predict,
    estimate_stain_matrix,
    hybrid_loss,
    hybrid_loss_grad,
    instance_balanced_plan,
    load_model,
    long_tail_benchmark,
    normalize_image,
    rgb_to_od,
    softmax,
    standard_reference,
    synth_stained_image,
    tta_views,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
