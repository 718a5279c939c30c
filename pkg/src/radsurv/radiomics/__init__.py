"""Radiomics feature extraction: 107 features from an intensity volume + ROI.

The vector concatenates 14 shape, 18 first-order, 24 GLCM, 16 GLRLM,
16 GLSZM, 14 GLDM and 5 NGTDM features in the fixed manifest order. Texture
families run on a discretized ROI; the binning rule, ROI kind and intensity
channel are configuration, carried along as provenance in every vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..volumeio import LabelMask, VoxelVolume, derive_roi
from .discretize import Binning, DiscretizedRoi, discretize
from .firstorder import FIRSTORDER_FEATURE_NAMES, first_order_features
from .shape import SHAPE_FEATURE_NAMES, ShapeDescriptors, shape_features
from .texture import (GLCM_FEATURE_NAMES, GLRLM_FEATURE_NAMES,
                      GLSZM_FEATURE_NAMES, GLDM_FEATURE_NAMES,
                      NGTDM_FEATURE_NAMES, TextureError,
                      glcm_features, glrlm_features, glszm_features,
                      gldm_features, ngtdm_features)
from .manifest import MANIFEST_VERSION, RADIOMICS_FEATURE_NAMES, manifest_text

__all__ = [
    "Binning", "DiscretizedRoi", "RadiomicsConfig", "RadiomicsVector",
    "ShapeDescriptors", "discretize", "extract_radiomics",
    "first_order_features", "shape_features",
    "glcm_features", "glrlm_features", "glszm_features", "gldm_features",
    "ngtdm_features", "RADIOMICS_FEATURE_NAMES", "MANIFEST_VERSION",
    "manifest_text",
]

DEFAULT_BINNING = Binning("fixed_bin_count", 32)


@dataclass(frozen=True)
class RadiomicsConfig:
    """Extraction configuration; defaults are choices, not claims."""

    roi_kind: str = "WT"
    binning: Binning = DEFAULT_BINNING
    channel: str = "unspecified"
    gldm_alpha: float = 0.0


@dataclass
class RadiomicsVector:
    """The 107 named feature values plus extraction provenance."""

    names: tuple[str, ...]
    values: np.ndarray
    roi_kind: str
    channel: str
    binning: str
    aggregation: str = "per-direction features, arithmetic mean over 13 directions"

    def __post_init__(self):
        if len(self.names) != 107 or self.values.shape != (107,):
            raise ValueError("radiomics vector must hold exactly 107 features")
        if len(set(self.names)) != len(self.names):
            raise ValueError("radiomics feature names must be unique")

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values.tolist()))


def extract_radiomics(vol: VoxelVolume, mask: LabelMask,
                      config: RadiomicsConfig = RadiomicsConfig()) -> RadiomicsVector:
    """Compute the full 107-feature vector for one subject and ROI."""
    if vol.dims != mask.dims:
        raise ValueError(f"volume dims {vol.dims} != mask dims {mask.dims}")
    roi = derive_roi(mask, config.roi_kind)
    if roi.voxel_count == 0:
        raise TextureError(f"ROI {config.roi_kind} is empty")
    disc = discretize(vol, roi, config.binning)

    values: dict[str, float] = {}
    stages = (
        ("shape", lambda: dict(zip(SHAPE_FEATURE_NAMES,
                                   shape_features(roi).as_vector().tolist()))),
        ("firstorder", lambda: first_order_features(vol, roi, disc)),
        ("glcm", lambda: glcm_features(disc)),
        ("glrlm", lambda: glrlm_features(disc)),
        ("glszm", lambda: glszm_features(disc)),
        ("gldm", lambda: gldm_features(disc, config.gldm_alpha)),
        ("ngtdm", lambda: ngtdm_features(disc)),
    )
    for family, compute in stages:
        try:
            values.update(compute())
        except Exception as exc:
            raise type(exc)(f"{family}: {exc}") from exc

    vector = np.array([values[name] for name in RADIOMICS_FEATURE_NAMES])
    return RadiomicsVector(
        names=RADIOMICS_FEATURE_NAMES,
        values=vector,
        roi_kind=config.roi_kind,
        channel=config.channel,
        binning=config.binning.describe(),
    )
