import numpy as np
import pytest

from radsurv.phantoms import PhantomSpec, gen_mask
from radsurv.radiomics import (Binning, RadiomicsConfig,
                               RADIOMICS_FEATURE_NAMES, extract_radiomics,
                               manifest_text, shape_features)
from radsurv.radiomics.manifest import (MANIFEST_VERSION,
                                        packaged_manifest_text)
from radsurv.radiomics.shape import SHAPE_FEATURE_NAMES
from radsurv.volumeio import derive_roi
from conftest import make_mask, make_volume


@pytest.fixture(scope="module")
def phantom():
    mask = gen_mask(PhantomSpec(shape="sphere", params=(7.0,),
                                center=(10, 10, 10), label_fill=2,
                                dims=(21, 21, 21)))
    rng = np.random.default_rng(0)
    vol = make_volume(0.2 + rng.random((21, 21, 21)))
    return vol, mask


class TestManifest:
    def test_exactly_107_unique_names_by_family(self):
        assert len(RADIOMICS_FEATURE_NAMES) == 107
        assert len(set(RADIOMICS_FEATURE_NAMES)) == 107
        counts = {}
        for name in RADIOMICS_FEATURE_NAMES:
            family = name.split(".")[0]
            counts[family] = counts.get(family, 0) + 1
        assert counts == {"shape": 14, "firstorder": 18, "glcm": 24,
                          "glrlm": 16, "glszm": 16, "gldm": 14, "ngtdm": 5}

    def test_packaged_manifest_matches_code(self):
        assert packaged_manifest_text() == manifest_text()
        lines = manifest_text().strip().split("\n")
        assert str(MANIFEST_VERSION) in lines[0]
        assert lines[1:] == list(RADIOMICS_FEATURE_NAMES)


class TestExtractRadiomics:
    def test_arity_and_provenance(self, phantom):
        vol, mask = phantom
        vec = extract_radiomics(vol, mask, RadiomicsConfig(
            roi_kind="WT", binning=Binning("fixed_bin_count", 16),
            channel="t1ce"))
        assert vec.names == RADIOMICS_FEATURE_NAMES
        assert vec.values.shape == (107,)
        assert not np.isnan(vec.values).any()
        assert vec.roi_kind == "WT"
        assert vec.channel == "t1ce"
        assert vec.binning == "fixed_bin_count(16)"

    def test_shape_slots_match_shape_features(self, phantom):
        vol, mask = phantom
        vec = extract_radiomics(vol, mask)
        direct = shape_features(derive_roi(mask, "WT")).as_vector()
        assert np.array_equal(vec.values[:14], direct)
        assert vec.names[:14] == SHAPE_FEATURE_NAMES

    def test_bit_identical_reruns(self, phantom):
        vol, mask = phantom
        v1 = extract_radiomics(vol, mask)
        v2 = extract_radiomics(vol, mask)
        assert np.array_equal(v1.values, v2.values)

    def test_empty_roi_rejected(self, phantom):
        vol, mask = phantom
        with pytest.raises(Exception, match="ET is empty"):
            extract_radiomics(vol, mask, RadiomicsConfig(roi_kind="ET"))

    def test_family_error_carries_family_name(self):
        labels = np.zeros((5, 5, 5), dtype=np.int16)
        labels[2, 2, 2] = 2   # a single voxel has no co-occurring pair
        mask = make_mask(labels)
        vol = make_volume(np.ones((5, 5, 5)))
        with pytest.raises(Exception, match="glcm:"):
            extract_radiomics(vol, mask)

    def test_dims_mismatch_rejected(self, phantom):
        _, mask = phantom
        vol = make_volume(np.ones((4, 4, 4)))
        with pytest.raises(ValueError, match="dims"):
            extract_radiomics(vol, mask)
