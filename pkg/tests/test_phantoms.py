import numpy as np
import pytest

from radsurv.phantoms import (CohortSpec, PhantomError, PhantomSpec,
                              gen_cohort, gen_mask)


class TestGenMask:
    def test_sphere_volume_within_digitization_tolerance(self):
        spec = PhantomSpec(shape="sphere", params=(10.0,), center=(12, 12, 12),
                           label_fill=1, dims=(25, 25, 25))
        count = gen_mask(spec).label_count(1)
        analytic = 4.0 / 3.0 * np.pi * 1000.0
        assert abs(count - analytic) / analytic < 0.02
        assert count == 4169   # frozen digitization of the canonical phantom

    def test_cuboid_exact_count(self):
        spec = PhantomSpec(shape="cuboid", params=(4, 6, 8),
                           center=(10.5, 10.5, 10.5), label_fill=2,
                           dims=(24, 24, 24))
        assert gen_mask(spec).label_count(2) == 192

    def test_single_voxel(self):
        spec = PhantomSpec(shape="single_voxel", params=(),
                           center=(5, 5, 5), label_fill=4, dims=(12, 12, 12))
        mask = gen_mask(spec)
        assert mask.label_count(4) == 1
        assert mask.labels[5, 5, 5] == 4

    def test_ellipsoid_between_bounding_shapes(self):
        spec = PhantomSpec(shape="ellipsoid", params=(8, 6, 4),
                           center=(15, 15, 15), label_fill=1,
                           dims=(32, 32, 32))
        count = gen_mask(spec).label_count(1)
        analytic = 4.0 / 3.0 * np.pi * 8 * 6 * 4
        assert abs(count - analytic) / analytic < 0.05

    def test_shape_exceeding_grid(self):
        spec = PhantomSpec(shape="sphere", params=(10.0,), center=(5, 12, 12),
                           label_fill=1, dims=(25, 25, 25))
        with pytest.raises(PhantomError, match="exceeds"):
            gen_mask(spec)

    def test_sphere_octant_symmetry(self):
        spec = PhantomSpec(shape="sphere", params=(8.0,), center=(12, 12, 12),
                           label_fill=2, dims=(25, 25, 25))
        member = gen_mask(spec).labels == 2
        flips = [member,
                 member[::-1, :, :], member[:, ::-1, :], member[:, :, ::-1],
                 member[::-1, ::-1, ::-1]]
        for f in flips[1:]:
            assert np.array_equal(flips[0], f)


class TestGenCohort:
    def _spec(self, **kw):
        base = dict(n_subjects=6, seed=99,
                    link={"shape.mesh_volume": 0.15, "meta.age": 2.0},
                    noise_std=0.0, n_distractors=2)
        base.update(kw)
        return CohortSpec(**base)

    def test_zero_noise_identity(self):
        cohort, _ = gen_cohort(self._spec())
        link = (0.15 * cohort.column("shape.mesh_volume")
                + 2.0 * cohort.column("meta.age"))
        assert np.array_equal(cohort.survival_days, np.maximum(link, 1.0))

    def test_same_seed_bit_identical(self, tmp_path):
        c1, _ = gen_cohort(self._spec(noise_std=12.0))
        c2, _ = gen_cohort(self._spec(noise_std=12.0))
        assert np.array_equal(c1.X, c2.X)
        assert np.array_equal(c1.survival_days, c2.survival_days)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        c1.write_features_csv(str(p1))
        c2.write_features_csv(str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_different_seed_differs(self):
        c1, _ = gen_cohort(self._spec())
        c2, _ = gen_cohort(self._spec(seed=100))
        assert not np.array_equal(c1.X, c2.X)

    def test_class_proportions_near_mix(self, class_mix_cohort):
        cohort, _, spec = class_mix_cohort
        days = cohort.survival_days
        t_lo, t_hi = spec.thresholds
        short = float((days < t_lo).mean())
        mid = float(((days >= t_lo) & (days <= t_hi)).mean())
        long = float((days > t_hi).mean())
        for observed, target in zip((short, mid, long), spec.class_mix):
            assert abs(observed - target) <= 0.1

    def test_distractor_count_and_names(self, class_mix_cohort):
        cohort, _, spec = class_mix_cohort
        noise = [n for n in cohort.feature_names if n.startswith("noise.")]
        assert len(noise) == 17
        assert len(cohort.feature_names) == 7 + 12 + 107 + 17

    def test_unknown_link_feature_rejected(self):
        with pytest.raises(PhantomError, match="unknown feature"):
            gen_cohort(self._spec(link={"does.not.exist": 1.0}))

    def test_bad_class_mix_rejected(self):
        with pytest.raises(PhantomError, match="class_mix"):
            gen_cohort(self._spec(class_mix=(0.5, 0.4, 0.4)))

    def test_survival_floored_at_one_day(self):
        cohort, _ = gen_cohort(self._spec(
            link={"meta.age": 1.0}, intercept=-1000.0))
        assert np.all(cohort.survival_days >= 1.0)
