import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wake_radon.detection import (
    DetectorConfig, ShipMaskSpec, StageError, WakeCandidate, angle_offset,
    compute_FI, confirm_candidates, detect_arms, detect_turbulent, detect_wakes,
    disc_mask, half_line_pixels, mask_ship, passes_rule, search_region,
)
from wake_radon.errors import (
    ConfigurationError, DetectionError, GeometryError, NormalizationError,
)
from wake_radon.geometry import RadonGrid, RadonImage
from wake_radon.myula import SolverConfig
from wake_radon.simulate import (
    ArmSpec, NoiseSpec, SceneSpec, TurbulentSpec, render_scene, table1_specs,
)


def cand(kind="turbulent", r=0.0, theta=30.0, **kw):
    return WakeCandidate(kind, 0, 0, r, theta, 0.0, **kw)


class TestMask:
    def test_default_radius(self):
        assert ShipMaskSpec().resolved(128).radius == pytest.approx(6.4)

    def test_constant_unchanged(self):
        img = np.full((64, 64), 2.5)
        np.testing.assert_array_equal(mask_ship(img), img)

    def test_blob_removed(self):
        img = np.zeros((64, 64))
        img[30:34, 30:34] = 10.0
        out = mask_ship(img, ShipMaskSpec(radius=4.0))
        assert np.all(out[disc_mask(64, (0, 0), 4.0)] == 0.0)

    def test_pixel_count_matches_direct_count(self):
        # counted point by point over the 128 x 128 pixel centres
        assert disc_mask(128, (0.0, 0.0), 6.4).sum() == 124
        assert disc_mask(128, (10.0, -5.0), 3.0).sum() == 32
        img = np.random.default_rng(0).standard_normal((128, 128)) + 5
        out = mask_ship(img, ShipMaskSpec())
        assert np.count_nonzero(out != img) == 124

    @pytest.mark.parametrize("spec", [
        ShipMaskSpec(radius=64.0), ShipMaskSpec(radius=-1.0), ShipMaskSpec(center=(70.0, 0.0)),
    ])
    def test_invalid(self, spec):
        with pytest.raises(ConfigurationError):
            mask_ship(np.ones((128, 128)), spec)


class TestRegion:
    def test_centered_ship(self):
        g = RadonGrid(128)
        reg = search_region(g, (0.0, 0.0), 3.0)
        expected = np.abs(g.r_values) <= 3
        assert np.array_equal(reg, np.repeat(expected[:, None], g.n_theta, axis=1))

    def test_offset_ship_follows_sinusoid(self):
        g = RadonGrid(128)
        reg = search_region(g, (10.0, 0.0), 1.0)
        rows = np.flatnonzero(reg[:, 90])
        np.testing.assert_array_equal(g.r_values[rows], [-1.0, 0.0, 1.0])
        rows0 = np.flatnonzero(reg[:, 0])
        np.testing.assert_array_equal(g.r_values[rows0], [9.0, 10.0, 11.0])

    def test_count_matches_per_bin_evaluation(self):
        # per-bin recomputation in plain Python gave 722 bins for (5, 5), delta_r = 2
        assert search_region(RadonGrid(128), (5.0, 5.0), 2.0).sum() == 722


def rimg(values, size=32):
    g = RadonGrid(size)
    return RadonImage(g, values)


class TestTurbulent:
    def test_spike(self):
        g = RadonGrid(32)
        v = np.zeros(g.shape)
        i0 = g.r_index(1.0)
        v[i0, 77] = -5.0
        c = detect_turbulent(RadonImage(g, v), search_region(g, (0, 0), 3))
        assert (c.r_bin, c.theta_bin, c.kind) == (i0, 77, "turbulent")
        assert c.theta == 77.0 and c.peak_value == -5.0

    def test_tie_break(self):
        g = RadonGrid(32)
        reg = search_region(g, (0, 0), 3)
        c = detect_turbulent(RadonImage(g, np.zeros(g.shape)), reg)
        assert c.theta_bin == 0
        assert c.r_bin == np.flatnonzero(reg[:, 0])[0]

    def test_spike_outside_region_ignored(self):
        g = RadonGrid(32)
        v = np.zeros(g.shape)
        v[0, 10] = -9.0
        v[g.r_index(0.0), 20] = -1.0
        c = detect_turbulent(RadonImage(g, v), search_region(g, (0, 0), 3))
        assert c.theta_bin == 20

    def test_empty_region(self):
        g = RadonGrid(32)
        with pytest.raises(DetectionError):
            detect_turbulent(RadonImage(g, np.zeros(g.shape)), np.zeros(g.shape, bool))


class TestArms:
    def setup_method(self):
        self.g = RadonGrid(32)
        self.reg = search_region(self.g, (0, 0), 3)
        self.turb = WakeCandidate("turbulent", self.g.r_index(0), 30, 0.0, 30.0, -1.0)
        self.i0 = self.g.r_index(0.0)

    def test_one_side(self):
        v = np.zeros(self.g.shape)
        v[self.i0, 32] = 4.0
        arms = detect_arms(RadonImage(self.g, v), self.reg, self.turb, "narrow_v")
        assert [a.theta for a in arms] == [32.0]

    def test_kelvin_both_sides(self):
        v = np.zeros(self.g.shape)
        v[self.i0, 50] = 3.0   # +20 deg
        v[self.i0 + 1, 11] = 2.0  # -19 deg
        arms = detect_arms(RadonImage(self.g, v), self.reg, self.turb, "kelvin")
        assert sorted(a.theta for a in arms) == [11.0, 50.0]

    def test_window_excludes_turbulent_angle(self):
        v = np.zeros(self.g.shape)
        v[self.i0, 30] = 10.0
        assert detect_arms(RadonImage(self.g, v), self.reg, self.turb, "narrow_v") == []

    def test_suppression_neighbourhood(self):
        v = np.zeros(self.g.shape)
        v[self.i0, 32] = 5.0
        v[self.i0 + 1, 33] = 4.9  # same side and inside the suppression box
        arms = detect_arms(RadonImage(self.g, v), self.reg, self.turb, "narrow_v")
        assert len(arms) == 1

    def test_wraps_around_180(self):
        turb = WakeCandidate("turbulent", self.i0, 1, 0.0, 1.0, -1.0)
        v = np.zeros(self.g.shape)
        v[self.i0, 178] = 3.0
        arms = detect_arms(RadonImage(self.g, v), self.reg, turb, "narrow_v")
        assert [a.theta for a in arms] == [178.0]

    def test_flat_background_gives_nothing(self):
        arms = detect_arms(RadonImage(self.g, np.ones(self.g.shape)), self.reg, self.turb, "kelvin")
        assert arms == []

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            detect_arms(RadonImage(self.g, np.zeros(self.g.shape)), self.reg, self.turb, "cusp")


def test_angle_offset_range():
    g = RadonGrid(16)
    d = angle_offset(g, 10.0)
    assert d.min() > -90 and d.max() <= 90
    assert d[g.theta_index(178.0)] == -12.0


class TestHalfLine:
    def test_axis_aligned(self):
        rows, cols = half_line_pixels(128, 0.5, 0.0, 1)
        np.testing.assert_array_equal(rows, np.arange(64, -1, -1))
        assert set(cols) == {64}
        rows, cols = half_line_pixels(128, 0.5, 0.0, -1)
        np.testing.assert_array_equal(rows, np.arange(64, 128))

    def test_halves_partition_line(self):
        up, _ = half_line_pixels(64, 0.0, 37.0, 1)
        down, _ = half_line_pixels(64, 0.0, 37.0, -1)
        assert abs(len(up) - len(down)) <= 2

    def test_outside(self):
        rows, _ = half_line_pixels(32, 80.0, 10.0, 1)
        assert rows.size == 0


class TestFI:
    def test_bright_vertical_half_line(self):
        # direct pixel sum: 65 pixels at 1.5 on a unit background
        img = np.ones((128, 128))
        img[0:65, 64] = 1.5
        fi = compute_FI(img, cand("narrow_v", r=0.5, theta=0.0), 1)
        mean_img = 1.0 + 0.5 * 65 / 128**2
        assert fi == pytest.approx(1.5 / mean_img - 1.0, rel=1e-13)

    def test_dark_line(self):
        img = np.ones((128, 128))
        img[:, 64] = 0.5
        fi = compute_FI(img, cand(r=0.5, theta=0.0), -1)
        assert fi == pytest.approx(0.5 / (1 - 0.5 / 128) - 1, rel=1e-13)
        assert fi == pytest.approx(-0.5, abs=0.01)

    def test_too_short(self):
        with pytest.raises(GeometryError):
            compute_FI(np.ones((32, 32)), cand(r=21.0, theta=45.0), 1)

    def test_zero_mean(self):
        img = np.zeros((32, 32))
        with pytest.raises(NormalizationError):
            compute_FI(img, cand(), 1)

    @settings(max_examples=100, deadline=None)
    @given(
        st.floats(-1e3, 1e3).filter(lambda v: v != 0),
        st.floats(-10, 10), st.floats(0, 179.999), st.sampled_from([1, -1]),
    )
    def test_constant_image_exact_zero(self, level, r, theta, half):
        fi = compute_FI(np.full((64, 64), level), cand(r=r, theta=theta), half)
        assert fi == 0.0


class TestRules:
    @pytest.mark.parametrize("kind,fi,ok", [
        ("narrow_v", 0.25, True), ("kelvin", 0.05, False), ("narrow_v", 0.1, True),
        ("turbulent", -0.3, True), ("turbulent", 0.2, False), ("turbulent", -0.05, False),
        ("kelvin", float("nan"), False),
    ])
    def test_physical(self, kind, fi, ok):
        assert passes_rule(kind, fi) is ok

    def test_turbulent_margin_zero_is_plain_sign_test(self):
        assert passes_rule("turbulent", 0.0, turbulent_margin=0.0)
        assert not passes_rule("turbulent", 1e-9, turbulent_margin=0.0)

    def test_literal(self):
        assert passes_rule("turbulent", 0.2, "literal")
        assert passes_rule("kelvin", 0.05, "literal")
        assert not passes_rule("narrow_v", 0.25, "literal")

    def test_unknown_rules(self):
        with pytest.raises(ConfigurationError):
            DetectorConfig(rules="other")


def test_confirm_picks_half_and_orders_slots():
    M = 128
    img = np.ones((M, M))
    img[0:65, 64] = 1.6   # bright upper half of x = 0.5
    img[0:65, 70] = 1.3   # dimmer bright upper half of x = 6.5
    img[64:, 40] = 0.4    # dark lower half of x = -23.5
    cands = [
        cand("turbulent", r=-23.5, theta=0.0),
        cand("narrow_v", r=6.5, theta=0.0),
        cand("narrow_v", r=0.5, theta=0.0),
        cand("kelvin", r=-40.5, theta=0.0),
    ]
    rep = confirm_candidates(img, cands)
    t = rep.slots["turbulent"]
    assert t.confirmed and t.half_sign == -1 and t.F_I < -0.5
    n1, n2 = rep.slots["narrow_v_1"], rep.slots["narrow_v_2"]
    assert n1.r == 0.5 and n2.r == 6.5 and n1.F_I > n2.F_I
    assert n1.confirmed and n2.confirmed and n1.half_sign == 1
    assert not rep.slots["kelvin_1"].confirmed
    assert rep.slots["kelvin_2"] is None
    assert rep.visibility == (True, True, True, False, False)


@pytest.fixture(scope="module")
def row4():
    spec = table1_specs(0.15, seed=0)[3]
    return render_scene(spec)


@pytest.mark.slow
def test_pipeline_on_three_wake_scene(row4):
    img, gt = row4
    rep = detect_wakes(img)
    assert rep.visibility == gt.visibility
    t = rep.slots["turbulent"]
    truth = gt.lines[0]
    assert abs(t.theta - truth.theta) <= 1.0
    n = rep.slots["narrow_v_1"]
    assert abs(n.theta - t.theta) <= 4.0 + 1.0
    k = rep.slots["kelvin_1"]
    assert abs(abs(angle_offset(RadonGrid(128), t.theta)[int(k.theta)]) - 19.5) <= 2.0
    assert not rep.arms_from_unconfirmed_turbulent
    assert rep.diagnostics.iterations_run == 200


@pytest.mark.slow
def test_blank_noise_confirms_nothing():
    img, _ = render_scene(SceneSpec(turbulent=None, noise=NoiseSpec("gaussian", 0.15), seed=3))
    rep = detect_wakes(img)
    assert rep.visibility == (False,) * 5
    assert rep.arms_from_unconfirmed_turbulent


def test_stage_attribution():
    bad = DetectorConfig(mask=ShipMaskSpec(radius=1000.0))
    with pytest.raises(StageError) as info:
        detect_wakes(np.ones((32, 32)), bad)
    assert info.value.stage == "mask_ship"
    assert info.value.exit_code == 1


def test_intensity_offset_does_not_move_bins():
    spec = SceneSpec(size=48, turbulent=TurbulentSpec(theta=65.0), noise=NoiseSpec("gaussian", 0.1), seed=2)
    img, _ = render_scene(spec)
    cfg = DetectorConfig(solver=SolverConfig(max_iter=20))
    a = detect_wakes(img, cfg).slots["turbulent"]
    b = detect_wakes(img + 7.0, cfg).slots["turbulent"]
    assert (a.r_bin, a.theta_bin) == (b.r_bin, b.theta_bin)
