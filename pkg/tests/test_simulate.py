import numpy as np
import pytest

from wake_radon.errors import SpecificationError
from wake_radon.geometry import RadonGrid, radon_forward
from wake_radon.myula import standardize
from wake_radon.simulate import (
    SLOTS, TABLE1_TEMPLATES, ArmSpec, NoiseSpec, SceneSpec, TurbulentSpec,
    render_scene, single_line_spec, table1_specs, table1_suite,
)

# visibility rows of the six benchmark templates
TABLE1_ROWS = [
    (1, 1, 0, 0, 0),
    (1, 1, 0, 0, 0),
    (1, 1, 0, 1, 0),
    (1, 1, 0, 1, 0),
    (1, 1, 0, 0, 0),
    (1, 1, 0, 0, 0),
]


def test_suite_rows():
    suite = table1_suite(seeds=(0,))
    assert len(suite) == 6
    assert [tuple(int(v) for v in gt.visibility) for _, gt in suite] == TABLE1_ROWS
    assert [sum(gt.visibility) + 0 for _, gt in suite] == [2, 2, 3, 3, 2, 2]
    assert sum(sum(gt.visibility) for _, gt in suite) == 14
    assert 5 * len(suite) == 30


def test_seeds_change_pixels_not_truth():
    a = table1_suite(seeds=(0,))
    b = table1_suite(seeds=(1,))
    for (ia, ga), (ib, gb) in zip(a, b):
        assert not np.array_equal(ia, ib)
        assert ga.visibility == gb.visibility and ga.lines == gb.lines


def test_bit_identical_rendering():
    spec = table1_specs(seed=7)[2]
    a, _ = render_scene(spec)
    b, _ = render_scene(spec)
    assert a.tobytes() == b.tobytes()


def test_suite_needs_seeds():
    with pytest.raises(ValueError):
        table1_suite(seeds=())


def test_no_wake_scene():
    img, gt = render_scene(SceneSpec(turbulent=None, noise=NoiseSpec("none", 0.0)))
    assert np.all(img == 1.0)
    assert gt.visibility == (False,) * 5


def test_gaussian_variance():
    sigma = 0.2
    img, _ = render_scene(SceneSpec(turbulent=None, noise=NoiseSpec("gaussian", sigma), seed=11))
    assert img.var() == pytest.approx(sigma**2, rel=0.05)


def test_speckle_mean():
    img, _ = render_scene(SceneSpec(turbulent=None, noise=NoiseSpec("gamma_speckle", 4.0), seed=5))
    assert img.size >= 10_000
    assert img.mean() == pytest.approx(1.0, rel=0.02)


def _has_local_extremum_near(rad, i0, j0, sign):
    """Is some bin within +-1 of (i0, j0) an extremum of its own 3x3 neighbourhood?"""
    n_r, n_t = rad.shape
    v = sign * rad
    for i in range(i0 - 1, i0 + 2):
        for j in range(j0 - 1, j0 + 2):
            if not 1 <= i < n_r - 1:
                continue
            nb = v[i - 1:i + 2][:, [(j + d) % n_t for d in (-1, 0, 1)]]
            if v[i, j % n_t] == nb.max():
                return True
    return False


@pytest.mark.parametrize("idx", range(len(TABLE1_TEMPLATES)))
def test_rendered_wakes_are_radon_extrema(idx):
    spec = table1_specs(seed=0, model="none", noise_level=0.0)[idx]
    img, gt = render_scene(spec)
    g = RadonGrid(spec.size)
    rad = radon_forward(standardize(img)[0], g).values
    for line in gt.lines:
        sign = -1.0 if line.kind == "turbulent" else 1.0
        assert _has_local_extremum_near(rad, g.r_index(line.r), g.theta_index(line.theta), sign)


def test_arm_geometry():
    spec = table1_specs()[2]
    _, gt = render_scene(spec)
    kinds = [l.kind for l in gt.lines]
    assert kinds == ["turbulent", "narrow_v", "kelvin"]
    t, n, k = gt.lines
    assert abs(n.theta - t.theta) == pytest.approx(3.0)
    assert abs(k.theta - t.theta) == pytest.approx(19.5)


def test_angle_wrap_keeps_half_line():
    spec = SceneSpec(
        turbulent=TurbulentSpec(theta=178.0, half=1),
        arms=(ArmSpec("narrow_v", 1, 3.0),), noise=NoiseSpec("none", 0.0),
    )
    _, gt = render_scene(spec)
    arm = gt.lines[1]
    assert arm.theta == pytest.approx(1.0)
    assert arm.half_sign == -1


@pytest.mark.parametrize("kw", [
    dict(arms=(ArmSpec("narrow_v", 1, 6.0),)),
    dict(arms=(ArmSpec("kelvin", 1, 15.0),)),
    dict(arms=(ArmSpec("narrow_v", 1, 2.0),) * 3),
    dict(arms=(ArmSpec("narrow_v", 1, 2.0, contrast=-0.1),)),
    dict(turbulent=TurbulentSpec(contrast=0.2)),
    dict(turbulent=None, arms=(ArmSpec(),)),
    dict(noise=NoiseSpec("salt", 0.1)),
    dict(size=4),
])
def test_invalid_specs(kw):
    with pytest.raises(SpecificationError):
        SceneSpec(**kw)


def test_override_allows_other_angles():
    spec = SceneSpec(arms=(ArmSpec("kelvin", 1, 25.0),), allow_override=True)
    _, gt = render_scene(spec)
    assert gt.visibility[SLOTS.index("kelvin_1")]


def test_wake_outside_image():
    spec = SceneSpec(size=32, turbulent=TurbulentSpec(offset_r=200.0))
    with pytest.raises(SpecificationError):
        render_scene(spec)


def test_single_line_spec():
    img, gt = render_scene(single_line_spec(0.1, seed=1, theta=42.0, size=64))
    assert img.shape == (64, 64)
    assert gt.visibility == (True, False, False, False, False)
    assert gt.lines[0].theta == 42.0
