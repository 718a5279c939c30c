"""Gray-level texture matrices and their feature families.

Conventions, fixed across the package and mirrored by the test oracles:

* Neighborhoods are infinity-norm distance 1: the 26-neighborhood for
  GLSZM zones, GLDM dependence counts and NGTDM neighborhood means, and
  the 13 unique axial+diagonal direction pairs (antipodal offsets merged)
  for GLCM and GLRLM.
* Directional families compute features per direction and then take the
  arithmetic mean over directions, in the fixed direction order below.
  A GLCM direction with no co-occurring pair is excluded from the mean;
  if every direction is empty the family raises ("no co-occurrences").
  GLRLM directions are never empty for a non-empty ROI.
* Matrices are accumulated as exact integer counts (stored in float64) so
  the conservation identities (run mass, zone mass and dependence mass
  equal the ROI voxel count) hold exactly; normalization happens inside
  the feature formulas.
* Matrix rows span levels 1..Ng where Ng is the maximum assigned level;
  absent intermediate levels are zero rows and contribute nothing.
* GLDM feature formulas use dependence size d = (neighbor count) + 1 so
  small-dependence emphasis stays finite for isolated voxels.
* Division-by-zero conventions on degenerate inputs (never NaN):
  GLCM correlation -> 1 and MCC -> 1 on a single-level direction, IMC1 -> 0
  when both marginal entropies vanish, IMC2 clamped at 0; NGTDM coarseness
  -> 1e6 sentinel when its denominator vanishes, busyness/strength -> 0,
  contrast -> 0 for a single present level.
"""

from __future__ import annotations

import numpy as np

from .discretize import DiscretizedRoi

COARSENESS_SENTINEL = 1e6

# The 13 canonical direction offsets: the lexicographically positive half
# of the 26-neighborhood (first nonzero component positive).
DIRECTIONS_13 = (
    (1, 0, 0), (0, 1, 0), (0, 0, 1),
    (1, 1, 0), (1, -1, 0), (1, 0, 1), (1, 0, -1),
    (0, 1, 1), (0, 1, -1),
    (1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1),
)

OFFSETS_26 = tuple(
    (dx, dy, dz)
    for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)
    if (dx, dy, dz) != (0, 0, 0))

GLCM_FEATURE_NAMES = (
    "glcm.autocorrelation", "glcm.joint_average", "glcm.cluster_prominence",
    "glcm.cluster_shade", "glcm.cluster_tendency", "glcm.contrast",
    "glcm.correlation", "glcm.difference_average", "glcm.difference_entropy",
    "glcm.difference_variance", "glcm.joint_energy", "glcm.joint_entropy",
    "glcm.imc1", "glcm.imc2", "glcm.idm", "glcm.idmn", "glcm.id", "glcm.idn",
    "glcm.inverse_variance", "glcm.maximum_probability", "glcm.sum_average",
    "glcm.sum_entropy", "glcm.sum_squares", "glcm.mcc",
)

GLRLM_FEATURE_NAMES = (
    "glrlm.short_run_emphasis", "glrlm.long_run_emphasis",
    "glrlm.gray_level_non_uniformity",
    "glrlm.gray_level_non_uniformity_normalized",
    "glrlm.run_length_non_uniformity",
    "glrlm.run_length_non_uniformity_normalized",
    "glrlm.run_percentage", "glrlm.gray_level_variance", "glrlm.run_variance",
    "glrlm.run_entropy", "glrlm.low_gray_level_run_emphasis",
    "glrlm.high_gray_level_run_emphasis",
    "glrlm.short_run_low_gray_level_emphasis",
    "glrlm.short_run_high_gray_level_emphasis",
    "glrlm.long_run_low_gray_level_emphasis",
    "glrlm.long_run_high_gray_level_emphasis",
)

GLSZM_FEATURE_NAMES = (
    "glszm.small_area_emphasis", "glszm.large_area_emphasis",
    "glszm.gray_level_non_uniformity",
    "glszm.gray_level_non_uniformity_normalized",
    "glszm.size_zone_non_uniformity",
    "glszm.size_zone_non_uniformity_normalized",
    "glszm.zone_percentage", "glszm.gray_level_variance", "glszm.zone_variance",
    "glszm.zone_entropy", "glszm.low_gray_level_zone_emphasis",
    "glszm.high_gray_level_zone_emphasis",
    "glszm.small_area_low_gray_level_emphasis",
    "glszm.small_area_high_gray_level_emphasis",
    "glszm.large_area_low_gray_level_emphasis",
    "glszm.large_area_high_gray_level_emphasis",
)

GLDM_FEATURE_NAMES = (
    "gldm.small_dependence_emphasis", "gldm.large_dependence_emphasis",
    "gldm.gray_level_non_uniformity", "gldm.dependence_non_uniformity",
    "gldm.dependence_non_uniformity_normalized", "gldm.gray_level_variance",
    "gldm.dependence_variance", "gldm.dependence_entropy",
    "gldm.low_gray_level_emphasis", "gldm.high_gray_level_emphasis",
    "gldm.small_dependence_low_gray_level_emphasis",
    "gldm.small_dependence_high_gray_level_emphasis",
    "gldm.large_dependence_low_gray_level_emphasis",
    "gldm.large_dependence_high_gray_level_emphasis",
)

NGTDM_FEATURE_NAMES = (
    "ngtdm.coarseness", "ngtdm.contrast", "ngtdm.busyness",
    "ngtdm.complexity", "ngtdm.strength",
)


class TextureError(ValueError):
    pass


def _cropped_levels(disc: DiscretizedRoi) -> np.ndarray:
    """Level map cropped to the ROI bounding box and padded by one voxel."""
    idx = np.nonzero(disc.roi.membership)
    if idx[0].size == 0:
        raise TextureError("empty ROI")
    sl = tuple(slice(int(c.min()), int(c.max()) + 1) for c in idx)
    return np.pad(disc.level_map[sl], 1)


def _shift(padded: np.ndarray, d) -> np.ndarray:
    """View of the padded array shifted by offset d, core-sized."""
    nx, ny, nz = (s - 2 for s in padded.shape)
    return padded[1 + d[0]:1 + d[0] + nx,
                  1 + d[1]:1 + d[1] + ny,
                  1 + d[2]:1 + d[2] + nz]


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


# ---------------------------------------------------------------------------
# GLCM

def glcm_matrices(disc: DiscretizedRoi) -> list[np.ndarray]:
    """Symmetrized co-occurrence count matrices, one per direction."""
    lp = _cropped_levels(disc)
    core = _shift(lp, (0, 0, 0))
    ng = disc.n_levels
    out = []
    for d in DIRECTIONS_13:
        b = _shift(lp, d)
        valid = (core > 0) & (b > 0)
        p = np.zeros((ng, ng), dtype=np.float64)
        if valid.any():
            np.add.at(p, (core[valid] - 1, b[valid] - 1), 1.0)
            p = p + p.T
        out.append(p)
    return out


def glcm_features_single(counts: np.ndarray, ng: int) -> dict[str, float]:
    """The 24 GLCM features of one direction's count (or probability) matrix."""
    total = counts.sum()
    if total <= 0:
        raise TextureError("no co-occurrences")
    p = counts / total
    levels = np.arange(1, ng + 1, dtype=np.float64)
    i = levels[:, None]
    j = levels[None, :]
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    mu_x = float((levels * px).sum())
    mu_y = float((levels * py).sum())
    sig_x2 = float(((levels - mu_x) ** 2 * px).sum())
    sig_y2 = float(((levels - mu_y) ** 2 * py).sum())

    ks = np.arange(2, 2 * ng + 1, dtype=np.float64)
    p_sum = np.zeros(ks.size)
    kd = np.arange(0, ng, dtype=np.float64)
    p_diff = np.zeros(kd.size)
    sum_idx = (i + j).astype(int) - 2
    diff_idx = np.abs(i - j).astype(int)
    np.add.at(p_sum, sum_idx.ravel(), p.ravel())
    np.add.at(p_diff, diff_idx.ravel(), p.ravel())

    hx = _entropy(px)
    hy = _entropy(py)
    hxy = _entropy(p.ravel())
    nz = p > 0
    outer = px[:, None] * py[None, :]
    hxy1 = float(-(p[nz] * np.log2(outer[nz])).sum())
    nz_outer = outer > 0
    hxy2 = float(-(outer[nz_outer] * np.log2(outer[nz_outer])).sum())

    autocorr = float((i * j * p).sum())
    if sig_x2 > 0 and sig_y2 > 0:
        correlation = (autocorr - mu_x * mu_y) / np.sqrt(sig_x2 * sig_y2)
    else:
        correlation = 1.0

    hmax = max(hx, hy)
    imc1 = (hxy - hxy1) / hmax if hmax > 0 else 0.0
    imc2 = float(np.sqrt(max(0.0, 1.0 - np.exp(-2.0 * (hxy2 - hxy)))))

    diff_avg = float((kd * p_diff).sum())

    present = np.nonzero(px > 0)[0]
    if present.size <= 1:
        mcc = 1.0
    else:
        sub = p[np.ix_(present, present)]
        pxp = px[present]
        pyp = py[present]
        # Q[a, b] = sum_c sub[a, c] * sub[b, c] / (px[a] * py[c])
        q = (sub / pxp[:, None]) @ (sub / pyp[None, :]).T
        eig = np.sort(np.linalg.eigvals(q).real)[::-1]
        mcc = float(np.sqrt(max(0.0, eig[1])))

    return {
        "glcm.autocorrelation": autocorr,
        "glcm.joint_average": mu_x,
        "glcm.cluster_prominence": float(((i + j - mu_x - mu_y) ** 4 * p).sum()),
        "glcm.cluster_shade": float(((i + j - mu_x - mu_y) ** 3 * p).sum()),
        "glcm.cluster_tendency": float(((i + j - mu_x - mu_y) ** 2 * p).sum()),
        "glcm.contrast": float(((i - j) ** 2 * p).sum()),
        "glcm.correlation": float(correlation),
        "glcm.difference_average": diff_avg,
        "glcm.difference_entropy": _entropy(p_diff),
        "glcm.difference_variance": float(((kd - diff_avg) ** 2 * p_diff).sum()),
        "glcm.joint_energy": float((p ** 2).sum()),
        "glcm.joint_entropy": hxy,
        "glcm.imc1": float(imc1),
        "glcm.imc2": imc2,
        "glcm.idm": float((p_diff / (1.0 + kd ** 2)).sum()),
        "glcm.idmn": float((p_diff / (1.0 + kd ** 2 / ng ** 2)).sum()),
        "glcm.id": float((p_diff / (1.0 + kd)).sum()),
        "glcm.idn": float((p_diff / (1.0 + kd / ng)).sum()),
        "glcm.inverse_variance": float((p_diff[1:] / kd[1:] ** 2).sum()),
        "glcm.maximum_probability": float(p.max()),
        "glcm.sum_average": float((ks * p_sum).sum()),
        "glcm.sum_entropy": _entropy(p_sum),
        "glcm.sum_squares": float(((i - mu_x) ** 2 * p).sum()),
        "glcm.mcc": mcc,
    }


def glcm_features(disc: DiscretizedRoi) -> dict[str, float]:
    """Per-direction GLCM features averaged over non-empty directions."""
    mats = glcm_matrices(disc)
    per_dir = [glcm_features_single(m, disc.n_levels) for m in mats
               if m.sum() > 0]
    if not per_dir:
        raise TextureError("no co-occurrences in any direction")
    return {name: float(np.mean([d[name] for d in per_dir]))
            for name in GLCM_FEATURE_NAMES}


# ---------------------------------------------------------------------------
# GLRLM

def glrlm_matrices(disc: DiscretizedRoi) -> list[np.ndarray]:
    """Run-length count matrices (level x run length), one per direction."""
    ids = np.argwhere(disc.roi.membership).astype(np.int64)
    lv = disc.level_map[disc.roi.membership].astype(np.int64)
    n = ids.shape[0]
    if n == 0:
        raise TextureError("empty ROI")
    ng = disc.n_levels
    max_len = max(disc.roi.dims)
    out = []
    for d in DIRECTIONS_13:
        dvec = np.array(d, dtype=np.int64)
        dd = int(dvec @ dvec)
        t = ids @ dvec
        line = ids * dd - t[:, None] * dvec
        order = np.lexsort((t, line[:, 2], line[:, 1], line[:, 0]))
        ts = t[order]
        ls = line[order]
        vs = lv[order]
        # a new run starts at position 0 and wherever the line, the
        # step-continuity or the gray level breaks
        new_run = np.ones(n, dtype=bool)
        if n > 1:
            same_line = (ls[1:] == ls[:-1]).all(axis=1)
            contiguous = ts[1:] - ts[:-1] == dd
            same_level = vs[1:] == vs[:-1]
            new_run[1:] = ~(same_line & contiguous & same_level)
        starts = np.nonzero(new_run)[0]
        lengths = np.diff(np.append(starts, n))
        p = np.zeros((ng, max_len), dtype=np.float64)
        np.add.at(p, (vs[starts] - 1, lengths - 1), 1.0)
        out.append(p)
    return out


def _run_zone_values(p: np.ndarray, n_voxels: int) -> list[float]:
    """Shared GLRLM/GLSZM formulas over a (level x size) count matrix.

    Returns the 16 values in the canonical order shared by both families
    (emphasis pairs, non-uniformities, percentage, variances, entropy,
    gray-level emphases and the four joint emphases).
    """
    nr = p.sum()
    if nr <= 0:
        raise TextureError("empty run/zone matrix")
    ng, smax = p.shape
    i = np.arange(1, ng + 1, dtype=np.float64)[:, None]
    s = np.arange(1, smax + 1, dtype=np.float64)[None, :]
    pn = p / nr
    row = p.sum(axis=1)
    col = p.sum(axis=0)
    mu_i = float((i * pn).sum())
    mu_s = float((s * pn).sum())
    return [
        float((p / s ** 2).sum() / nr),            # short/small emphasis
        float((p * s ** 2).sum() / nr),            # long/large emphasis
        float((row ** 2).sum() / nr),              # gray level non-uniformity
        float((row ** 2).sum() / nr ** 2),         # ... normalized
        float((col ** 2).sum() / nr),              # size non-uniformity
        float((col ** 2).sum() / nr ** 2),         # ... normalized
        float(nr / n_voxels),                      # run/zone percentage
        float(((i - mu_i) ** 2 * pn).sum()),       # gray level variance
        float(((s - mu_s) ** 2 * pn).sum()),       # size variance
        _entropy(pn.ravel()),                      # entropy
        float((p / i ** 2).sum() / nr),            # low gray level emphasis
        float((p * i ** 2).sum() / nr),            # high gray level emphasis
        float((p / (i ** 2 * s ** 2)).sum() / nr),
        float((p * i ** 2 / s ** 2).sum() / nr),
        float((p * s ** 2 / i ** 2).sum() / nr),
        float((p * i ** 2 * s ** 2).sum() / nr),
    ]


def glrlm_features_single(p: np.ndarray, n_voxels: int) -> dict[str, float]:
    """The 16 GLRLM features for one direction's run matrix."""
    return dict(zip(GLRLM_FEATURE_NAMES, _run_zone_values(p, n_voxels)))


def glrlm_features(disc: DiscretizedRoi) -> dict[str, float]:
    """Per-direction GLRLM features averaged over the 13 directions."""
    n_vox = disc.roi.voxel_count
    per_dir = [glrlm_features_single(p, n_vox) for p in glrlm_matrices(disc)]
    return {name: float(np.mean([d[name] for d in per_dir]))
            for name in GLRLM_FEATURE_NAMES}


# ---------------------------------------------------------------------------
# GLSZM

def glszm_matrix(disc: DiscretizedRoi) -> np.ndarray:
    """Zone count matrix (level x zone size), zones 26-connected."""
    lp = _cropped_levels(disc)
    core_shape = tuple(s - 2 for s in lp.shape)
    flat = lp[1:-1, 1:-1, 1:-1].ravel()
    n_core = flat.size
    roi_idx = np.nonzero(flat > 0)[0]
    if roi_idx.size == 0:
        raise TextureError("empty ROI")

    parent = np.arange(n_core, dtype=np.int64)

    def find(a: int) -> int:
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    core = lp[1:-1, 1:-1, 1:-1]
    strides = np.array([core_shape[1] * core_shape[2], core_shape[2], 1])
    for d in DIRECTIONS_13:
        b = _shift(lp, d)
        match = (core > 0) & (core == b)
        if not match.any():
            continue
        src = np.argwhere(match)
        flat_src = src @ strides
        flat_dst = (src + np.array(d)) @ strides
        for a, b2 in zip(flat_src.tolist(), flat_dst.tolist()):
            ra, rb = find(a), find(b2)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

    roots = np.fromiter((find(int(a)) for a in roi_idx), dtype=np.int64,
                        count=roi_idx.size)
    _, zone_ids, zone_sizes = np.unique(roots, return_inverse=True,
                                        return_counts=True)
    zone_levels = np.zeros(zone_sizes.size, dtype=np.int64)
    zone_levels[zone_ids] = flat[roi_idx]

    p = np.zeros((disc.n_levels, int(zone_sizes.max())), dtype=np.float64)
    np.add.at(p, (zone_levels - 1, zone_sizes - 1), 1.0)
    return p


def glszm_features(disc: DiscretizedRoi) -> dict[str, float]:
    """The 16 GLSZM features (single matrix, no directionality)."""
    p = glszm_matrix(disc)
    return dict(zip(GLSZM_FEATURE_NAMES,
                    _run_zone_values(p, disc.roi.voxel_count)))


# ---------------------------------------------------------------------------
# GLDM

def gldm_matrix(disc: DiscretizedRoi, alpha: float = 0.0) -> np.ndarray:
    """Dependence count matrix (level x dependence count 0..26)."""
    lp = _cropped_levels(disc)
    core = _shift(lp, (0, 0, 0))
    member = core > 0
    if not member.any():
        raise TextureError("empty ROI")
    dep = np.zeros(core.shape, dtype=np.int64)
    for d in OFFSETS_26:
        b = _shift(lp, d)
        dep += (member & (b > 0) & (np.abs(core - b) <= alpha)).astype(np.int64)
    p = np.zeros((disc.n_levels, 27), dtype=np.float64)
    np.add.at(p, (core[member] - 1, dep[member]), 1.0)
    return p


def gldm_features(disc: DiscretizedRoi, alpha: float = 0.0) -> dict[str, float]:
    """The 14 GLDM features; formulas use dependence size d = count + 1."""
    p = gldm_matrix(disc, alpha)
    nz = p.sum()
    ng = p.shape[0]
    i = np.arange(1, ng + 1, dtype=np.float64)[:, None]
    d = np.arange(1, p.shape[1] + 1, dtype=np.float64)[None, :]
    pn = p / nz
    row = p.sum(axis=1)
    col = p.sum(axis=0)
    mu_i = float((i * pn).sum())
    mu_d = float((d * pn).sum())
    return {
        "gldm.small_dependence_emphasis": float((p / d ** 2).sum() / nz),
        "gldm.large_dependence_emphasis": float((p * d ** 2).sum() / nz),
        "gldm.gray_level_non_uniformity": float((row ** 2).sum() / nz),
        "gldm.dependence_non_uniformity": float((col ** 2).sum() / nz),
        "gldm.dependence_non_uniformity_normalized":
            float((col ** 2).sum() / nz ** 2),
        "gldm.gray_level_variance": float(((i - mu_i) ** 2 * pn).sum()),
        "gldm.dependence_variance": float(((d - mu_d) ** 2 * pn).sum()),
        "gldm.dependence_entropy": _entropy(pn.ravel()),
        "gldm.low_gray_level_emphasis": float((p / i ** 2).sum() / nz),
        "gldm.high_gray_level_emphasis": float((p * i ** 2).sum() / nz),
        "gldm.small_dependence_low_gray_level_emphasis":
            float((p / (i ** 2 * d ** 2)).sum() / nz),
        "gldm.small_dependence_high_gray_level_emphasis":
            float((p * i ** 2 / d ** 2).sum() / nz),
        "gldm.large_dependence_low_gray_level_emphasis":
            float((p * d ** 2 / i ** 2).sum() / nz),
        "gldm.large_dependence_high_gray_level_emphasis":
            float((p * i ** 2 * d ** 2).sum() / nz),
    }


# ---------------------------------------------------------------------------
# NGTDM

def ngtdm_table(disc: DiscretizedRoi) -> tuple[np.ndarray, np.ndarray, int]:
    """Per-level (n_i, s_i) over voxels with at least one in-ROI neighbor.

    Returns (n, s, n_participating) where n and s are indexed by level-1
    over 1..Ng, n_i counts participating voxels of level i and s_i sums
    |i - neighborhood mean| over them.
    """
    lp = _cropped_levels(disc)
    core = _shift(lp, (0, 0, 0))
    member = core > 0
    if not member.any():
        raise TextureError("empty ROI")
    neigh_sum = np.zeros(core.shape, dtype=np.float64)
    neigh_cnt = np.zeros(core.shape, dtype=np.int64)
    for d in OFFSETS_26:
        b = _shift(lp, d)
        inside = b > 0
        neigh_sum += np.where(inside, b, 0)
        neigh_cnt += inside
    part = member & (neigh_cnt > 0)
    ng = disc.n_levels
    n = np.zeros(ng, dtype=np.float64)
    s = np.zeros(ng, dtype=np.float64)
    lv = core[part]
    diff = np.abs(lv - neigh_sum[part] / neigh_cnt[part])
    np.add.at(n, lv - 1, 1.0)
    np.add.at(s, lv - 1, diff)
    return n, s, int(part.sum())


def ngtdm_features(disc: DiscretizedRoi) -> dict[str, float]:
    """Coarseness, contrast, busyness, complexity and strength."""
    n, s, nvp = ngtdm_table(disc)
    if nvp == 0:
        # isolated voxels only: no valid neighborhoods anywhere
        return {
            "ngtdm.coarseness": COARSENESS_SENTINEL,
            "ngtdm.contrast": 0.0,
            "ngtdm.busyness": 0.0,
            "ngtdm.complexity": 0.0,
            "ngtdm.strength": 0.0,
        }
    ng = n.size
    levels = np.arange(1, ng + 1, dtype=np.float64)
    p = n / nvp
    present = p > 0
    ngp = int(present.sum())

    ps_dot = float((p * s).sum())
    coarseness = 1.0 / ps_dot if ps_dot > 0 else COARSENESS_SENTINEL

    li = levels[present]
    pi = p[present]
    si = s[present]
    if ngp > 1:
        diff2 = (li[:, None] - li[None, :]) ** 2
        contrast = float((pi[:, None] * pi[None, :] * diff2).sum()
                         / (ngp * (ngp - 1)) * s.sum() / nvp)
        busy_den = float(np.abs(li[:, None] * pi[:, None]
                                - li[None, :] * pi[None, :]).sum())
        busyness = ps_dot / busy_den if busy_den > 0 else 0.0
        absdiff = np.abs(li[:, None] - li[None, :])
        pair_num = pi[:, None] * si[:, None] + pi[None, :] * si[None, :]
        pair_den = pi[:, None] + pi[None, :]
        complexity = float((absdiff * pair_num / pair_den).sum() / nvp)
        s_total = float(s.sum())
        strength = (float((pair_den * diff2).sum()) / s_total
                    if s_total > 0 else 0.0)
    else:
        contrast = 0.0
        busyness = 0.0
        complexity = 0.0
        strength = 0.0

    return {
        "ngtdm.coarseness": float(coarseness),
        "ngtdm.contrast": contrast,
        "ngtdm.busyness": float(busyness),
        "ngtdm.complexity": complexity,
        "ngtdm.strength": float(strength),
    }
