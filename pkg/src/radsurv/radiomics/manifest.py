"""Canonical radiomics feature-name manifest.

The 107 names, ordered family by family (14 shape, 18 first-order, 24 GLCM,
16 GLRLM, 16 GLSZM, 14 GLDM, 5 NGTDM), are the stable identifiers used in
CSV headers and model files. The same list ships as a versioned text file
(one name per line after a version header) so non-Python consumers can read
the column order.
"""

from __future__ import annotations

import importlib.resources

from .shape import SHAPE_FEATURE_NAMES
from .firstorder import FIRSTORDER_FEATURE_NAMES
from .texture import (GLCM_FEATURE_NAMES, GLRLM_FEATURE_NAMES,
                      GLSZM_FEATURE_NAMES, GLDM_FEATURE_NAMES,
                      NGTDM_FEATURE_NAMES)

MANIFEST_VERSION = 1

RADIOMICS_FEATURE_NAMES: tuple[str, ...] = (
    SHAPE_FEATURE_NAMES
    + FIRSTORDER_FEATURE_NAMES
    + GLCM_FEATURE_NAMES
    + GLRLM_FEATURE_NAMES
    + GLSZM_FEATURE_NAMES
    + GLDM_FEATURE_NAMES
    + NGTDM_FEATURE_NAMES
)

assert len(RADIOMICS_FEATURE_NAMES) == 107
assert len(set(RADIOMICS_FEATURE_NAMES)) == 107


def manifest_text() -> str:
    lines = [f"# radsurv radiomics manifest v{MANIFEST_VERSION}"]
    lines += list(RADIOMICS_FEATURE_NAMES)
    return "\n".join(lines) + "\n"


def packaged_manifest_text() -> str:
    """The manifest text file shipped inside the package."""
    ref = importlib.resources.files("radsurv.radiomics")
    return (ref / f"radiomics_manifest_v{MANIFEST_VERSION}.txt").read_text("utf-8")
