"""Dermoscopic lesion analysis (LIN + LICU, LFN, SLIC, ISIC metrics)."""

from ._core import (
    FEATURE_CLASSES,
    LESION_CLASSES,
    DivergenceError,
    FormatError,
    NoLesionFound,
    average_precision,
    blob_sample,
    build_dm,
    build_dr,
    classify_lesion,
    classify_patches,
    distance_map,
    extract_patches,
    infer_multiscale,
    lesion_index,
    network_text,
    normalize_possibilities,
    roc_auc,
    seg_metrics,
    segment,
    slic,
    texture_patch,
)

__all__ = [name for name in dir() if not name.startswith("_")]
