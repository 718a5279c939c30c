"""Gray-level discretization of ROI intensities.

Two binning rules are supported:

* ``fixed_bin_width(w)``: level = floor((x - min) / w) + 1, anchored at the
  ROI minimum.
* ``fixed_bin_count(k)``: k equal-width bins over [min, max] with the
  maximum mapped to level k. A constant ROI degenerates to a single level
  (Ng = 1) regardless of k.

Levels are stored as a full 3D map (0 outside the ROI, 1..Ng inside), which
is the natural shape for the texture-matrix builders.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..volumeio import RoiMask, VoxelVolume


class DiscretizationError(ValueError):
    pass


@dataclass(frozen=True)
class Binning:
    """Discretization rule: mode is 'fixed_bin_width' or 'fixed_bin_count'."""

    mode: str
    value: float

    def __post_init__(self):
        if self.mode not in ("fixed_bin_width", "fixed_bin_count"):
            raise DiscretizationError(f"unknown binning mode {self.mode!r}")
        if self.mode == "fixed_bin_width" and not self.value > 0:
            raise DiscretizationError(f"bin width must be > 0, got {self.value}")
        if self.mode == "fixed_bin_count" and (int(self.value) != self.value
                                               or self.value < 2):
            raise DiscretizationError(
                f"bin count must be an integer >= 2, got {self.value}")

    def describe(self) -> str:
        if self.mode == "fixed_bin_width":
            return f"fixed_bin_width({self.value:g})"
        return f"fixed_bin_count({int(self.value)})"


@dataclass
class DiscretizedRoi:
    """Gray levels per ROI voxel plus the provenance of the binning."""

    level_map: np.ndarray    # int32 3D map, 0 outside ROI, 1..n_levels inside
    roi: RoiMask
    n_levels: int
    binning: Binning
    value_range: tuple[float, float]

    @property
    def levels(self) -> np.ndarray:
        """Flat 1..Ng level array over ROI voxels (argwhere order)."""
        return self.level_map[self.roi.membership]


def discretize(vol: VoxelVolume, roi: RoiMask, binning: Binning) -> DiscretizedRoi:
    """Discretize ROI intensities to integer gray levels 1..Ng."""
    member = roi.membership
    values = vol.data[member]
    if values.size == 0:
        raise DiscretizationError("empty ROI")
    vmin = float(values.min())
    vmax = float(values.max())

    if binning.mode == "fixed_bin_width":
        levels = np.floor((values - vmin) / binning.value).astype(np.int64) + 1
    else:
        k = int(binning.value)
        if vmax == vmin:
            levels = np.ones(values.shape, dtype=np.int64)
        else:
            width = (vmax - vmin) / k
            levels = np.minimum(
                np.floor((values - vmin) / width).astype(np.int64) + 1, k)

    level_map = np.zeros(vol.dims, dtype=np.int32)
    level_map[member] = levels
    return DiscretizedRoi(
        level_map=level_map,
        roi=roi,
        n_levels=int(levels.max()),
        binning=binning,
        value_range=(vmin, vmax),
    )
