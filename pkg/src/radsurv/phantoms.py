"""Analytic phantoms and synthetic cohorts with known ground truth.

Masks are digitized with the voxel-center inclusion rule: a voxel belongs
to the shape iff its center (``origin + index * spacing``) lies inside the
analytic solid, boundaries inclusive. This is the simplest rule with a
measurable digitization bias (a radius-10 sphere at 1 mm spacing holds 4169
voxels against the analytic 4188.79 mm^3). Ellipsoid parameters are
semi-axes; cuboid parameters are full edge lengths.

Cohorts pair per-subject tumor phantoms (three nested ellipsoids carrying
labels 2 / 1 / 4 inside a fixed brain ellipsoid) with the full extracted
feature catalog: the seven image features, the mask summary, the 107
radiomics features and optional pure-noise distractor columns. Survival is
a linear link over named features plus Gaussian noise, floored at one day.
When a class mix is requested, the link output is affinely recalibrated so
its empirical quantiles hit the survival-class thresholds (the result is
still a linear link with rescaled coefficients; the scale and offset are
reported back in the generation report). Everything is a pure function of
the spec, including its seed: per-subject streams are derived as
(seed, subject_index), so parallel generation cannot reorder results.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .rng import make_rng
from .volumeio import LabelMask, SubjectRecord, VoxelVolume
from .imagefeat import (IMAGE_FEATURE_NAMES, MASK_SUMMARY_NAMES,
                        extract_image_features, mask_summary)
from .cohort import Cohort

PHANTOM_SHAPES = ("sphere", "ellipsoid", "cuboid", "single_voxel")

DEFAULT_RESECTION_MIX = (0.504, 0.042, 0.454)  # GTR, STR, NA


class PhantomError(ValueError):
    pass


@dataclass(frozen=True)
class PhantomSpec:
    """One analytic shape on a regular grid."""

    shape: str                      # sphere | ellipsoid | cuboid | single_voxel
    params: tuple[float, ...]       # sphere: (r,); ellipsoid/cuboid: (a, b, c)
    center: tuple[float, float, float]
    label_fill: int = 1
    dims: tuple[int, int, int] = (32, 32, 32)
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def half_extents(self) -> tuple[float, float, float]:
        if self.shape == "sphere":
            r = float(self.params[0])
            return (r, r, r)
        if self.shape == "ellipsoid":
            return tuple(float(p) for p in self.params)
        if self.shape == "cuboid":
            return tuple(float(p) / 2.0 for p in self.params)
        return (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class CohortSpec:
    """Synthetic cohort recipe; deterministic for a fixed seed."""

    n_subjects: int
    seed: int
    link: dict[str, float] = field(default_factory=dict)
    intercept: float = 0.0
    noise_std: float = 0.0
    class_mix: Optional[tuple[float, float, float]] = None
    n_distractors: int = 0
    resection_mix: tuple[float, float, float] = DEFAULT_RESECTION_MIX
    thresholds: tuple[float, float] = (304.375, 456.5625)


def _inside(shape: str, params, center, points: np.ndarray) -> np.ndarray:
    d = points - np.asarray(center, dtype=np.float64)
    if shape == "sphere":
        return np.sum(d ** 2, axis=-1) <= float(params[0]) ** 2
    if shape == "ellipsoid":
        axes = np.asarray(params, dtype=np.float64)
        return np.sum((d / axes) ** 2, axis=-1) <= 1.0
    if shape == "cuboid":
        half = np.asarray(params, dtype=np.float64) / 2.0
        return np.all(np.abs(d) <= half, axis=-1)
    raise PhantomError(f"unknown shape {shape!r}")


def _voxel_centers(dims, spacing, origin) -> np.ndarray:
    grids = np.indices(dims).astype(np.float64)
    for a in range(3):
        grids[a] = grids[a] * spacing[a] + origin[a]
    return np.stack(grids, axis=-1)


def gen_mask(spec: PhantomSpec) -> LabelMask:
    """Digitize an analytic phantom into a LabelMask."""
    if spec.shape not in PHANTOM_SHAPES:
        raise PhantomError(f"unknown shape {spec.shape!r}")
    if spec.label_fill not in (1, 2, 4):
        raise PhantomError(f"label_fill must be a tumor label, got {spec.label_fill}")

    lo_corner = tuple(spec.origin[a] - 0.5 * spec.spacing[a] for a in range(3))
    hi_corner = tuple(spec.origin[a] + (spec.dims[a] - 0.5) * spec.spacing[a]
                      for a in range(3))
    half = spec.half_extents()
    for a in range(3):
        if spec.center[a] - half[a] < lo_corner[a] or \
           spec.center[a] + half[a] > hi_corner[a]:
            raise PhantomError(
                f"shape exceeds grid along axis {a}: "
                f"[{spec.center[a] - half[a]}, {spec.center[a] + half[a]}] "
                f"outside [{lo_corner[a]}, {hi_corner[a]}]")

    labels = np.zeros(spec.dims, dtype=np.int16)
    if spec.shape == "single_voxel":
        idx = tuple(
            int(round((spec.center[a] - spec.origin[a]) / spec.spacing[a]))
            for a in range(3))
        labels[idx] = spec.label_fill
    else:
        centers = _voxel_centers(spec.dims, spec.spacing, spec.origin)
        labels[_inside(spec.shape, spec.params, spec.center, centers)] = \
            spec.label_fill
    return LabelMask(dims=spec.dims, spacing=spec.spacing, origin=spec.origin,
                     labels=labels)


# ---------------------------------------------------------------------------
# Synthetic cohorts

_COHORT_DIMS = (40, 40, 40)
_BRAIN_AXES = (18.0, 17.0, 16.0)
_TUMOR_SCALES = {"TC": 0.7, "ET": 0.45}


def _synth_subject(seed: int, index: int):
    """One subject's mask, intensity volume, age and resection draw."""
    rng = make_rng(seed, index)
    dims = _COHORT_DIMS
    grid_center = tuple((d - 1) / 2.0 for d in dims)

    axes = rng.uniform(4.0, 10.0, size=3)
    center = np.asarray(grid_center) + rng.uniform(-2.0, 2.0, size=3)
    centers = _voxel_centers(dims, (1, 1, 1), (0, 0, 0))

    wt = _inside("ellipsoid", axes, center, centers)
    tc = _inside("ellipsoid", axes * _TUMOR_SCALES["TC"], center, centers)
    et = _inside("ellipsoid", axes * _TUMOR_SCALES["ET"], center, centers)
    labels = np.zeros(dims, dtype=np.int16)
    labels[wt] = 2
    labels[tc] = 1
    labels[et] = 4
    mask = LabelMask(dims=dims, spacing=(1, 1, 1), origin=(0, 0, 0),
                     labels=labels)

    brain = _inside("ellipsoid", _BRAIN_AXES, grid_center, centers)
    ramp = centers[..., 0] / dims[0]
    data = 0.3 + 0.4 * ramp + 0.1 * (labels == 2) + 0.2 * (labels == 1) \
        + 0.3 * (labels == 4) + 0.05 * rng.standard_normal(dims)
    data = np.where(brain, np.clip(data, 0.01, None), 0.0)
    vol = VoxelVolume(dims=dims, spacing=(1, 1, 1), origin=(0, 0, 0), data=data)

    age = float(rng.uniform(35.0, 80.0))
    resection_u = float(rng.uniform())
    noise_z = float(rng.standard_normal())
    return mask, vol, age, resection_u, noise_z, rng


def gen_cohort(spec: CohortSpec):
    """Generate a synthetic cohort; returns (Cohort, report dict).

    The report records the effective survival link (scale and offset applied
    on top of the raw link when a class mix was requested) so downstream
    consumers can reproduce the survival construction.
    """
    if spec.n_subjects < 1:
        raise PhantomError("n_subjects must be >= 1")
    if spec.class_mix is not None:
        mix = tuple(float(p) for p in spec.class_mix)
        if len(mix) != 3 or any(p < 0 for p in mix) or \
                abs(sum(mix) - 1.0) > 1e-9:
            raise PhantomError(f"class_mix must be 3 proportions summing to 1, got {mix}")
    if abs(sum(spec.resection_mix) - 1.0) > 1e-9:
        raise PhantomError("resection_mix must sum to 1")

    from .radiomics import (RADIOMICS_FEATURE_NAMES, RadiomicsConfig,
                            extract_radiomics)

    config = RadiomicsConfig(roi_kind="WT", channel="synthetic")
    noise_names = [f"noise.{k:03d}" for k in range(spec.n_distractors)]
    feature_names = (list(IMAGE_FEATURE_NAMES) + list(MASK_SUMMARY_NAMES)
                     + list(RADIOMICS_FEATURE_NAMES) + noise_names)

    rows = []
    ages = []
    resection_u = []
    noise_z = []
    for i in range(spec.n_subjects):
        mask, vol, age, res_u, nz, rng = _synth_subject(spec.seed, i)
        subject = SubjectRecord(subject_id=f"SYN-{i:04d}", age=age)
        img = extract_image_features(mask, subject).as_vector()
        summ = mask_summary(mask).as_vector()
        rad = extract_radiomics(vol, mask, config).values
        noise = rng.standard_normal(spec.n_distractors)
        rows.append(np.concatenate([img, summ, rad, noise]))
        ages.append(age)
        resection_u.append(res_u)
        noise_z.append(nz)

    X = np.vstack(rows)
    for name in spec.link:
        if name not in feature_names:
            raise PhantomError(f"link references unknown feature {name!r}")

    raw = np.full(spec.n_subjects, spec.intercept, dtype=np.float64)
    for name, coef in spec.link.items():
        col = X[:, feature_names.index(name)]
        if np.isnan(col).any():
            raise PhantomError(f"link feature {name!r} has missing values")
        raw = raw + coef * col

    scale, offset = 1.0, 0.0
    if spec.class_mix is not None:
        t_lo, t_hi = spec.thresholds
        p_short, p_mid, _ = mix
        q1 = float(np.quantile(raw, p_short))
        q2 = float(np.quantile(raw, p_short + p_mid))
        if q2 <= q1:
            raise PhantomError(
                "unsatisfiable class_mix: link output quantiles are degenerate")
        scale = (t_hi - t_lo) / (q2 - q1)
        offset = t_lo - scale * q1

    survival = scale * raw + offset \
        + spec.noise_std * np.asarray(noise_z, dtype=np.float64)
    survival = np.maximum(survival, 1.0)

    statuses = []
    gtr, stri, _ = spec.resection_mix
    for u in resection_u:
        statuses.append("GTR" if u < gtr else "STR" if u < gtr + stri else "NA")

    records = [SubjectRecord(subject_id=f"SYN-{i:04d}", age=ages[i],
                             survival_days=float(survival[i]),
                             resection_status=statuses[i])
               for i in range(spec.n_subjects)]
    cohort = Cohort(
        subject_ids=[r.subject_id for r in records],
        feature_names=feature_names,
        X=X,
        survival_days=survival.copy(),
        records=records,
    )
    report = {
        "seed": spec.seed,
        "n_subjects": spec.n_subjects,
        "link": dict(spec.link),
        "intercept": spec.intercept,
        "noise_std": spec.noise_std,
        "class_mix": list(spec.class_mix) if spec.class_mix else None,
        "calibration_scale": scale,
        "calibration_offset": offset,
        "thresholds": list(spec.thresholds),
    }
    return cohort, report
