import math

import pytest

from scarforge.errors import DegenerateLandmarksError
from scarforge.orientation import normalize_orientation, orientation_angle
from scarforge.phantoms import make_annulus, place_rvips
from scarforge.raster import Point2, rotate_about
from scarforge.rng import SplitMix64


def test_angle_already_vertical():
    assert orientation_angle(Point2(76, 36), Point2(76, 96)) == 0.0


def test_angle_flipped_pair():
    assert orientation_angle(Point2(76, 96), Point2(76, 36)) == pytest.approx(math.pi)


def test_angle_horizontal_pair():
    # vector (-80, 0): rotating by -pi/2 sends it onto (0, +80)
    theta = orientation_angle(Point2(96, 56), Point2(16, 56))
    assert theta == pytest.approx(-math.pi / 2)
    c, s = math.cos(theta), math.sin(theta)
    vx, vy = -80.0, 0.0
    assert (c * vx - s * vy, s * vx + c * vy) == pytest.approx((0.0, 80.0))


def test_angle_range_and_coincident_error():
    rng = SplitMix64(21)
    for _ in range(200):
        a = Point2(rng.uniform(0, 224), rng.uniform(0, 224))
        b = Point2(rng.uniform(0, 224), rng.uniform(0, 224))
        if a.distance_to(b) < 1e-6:
            continue
        theta = orientation_angle(a, b)
        assert -math.pi < theta <= math.pi
    with pytest.raises(DegenerateLandmarksError):
        orientation_angle(Point2(5, 5), Point2(5, 5))


def test_normalize_identity_when_already_vertical():
    center = Point2(64.0, 64.0)
    img, mask = make_annulus(center, 20.0, 30.0, (128, 128))
    anterior = Point2(64.0, 39.0)
    inferior = Point2(64.0, 89.0)
    out_img, out_masks, a2, i2, _ = normalize_orientation(img, [mask], anterior, inferior, center)
    assert out_img.data.tobytes() == img.data.tobytes()
    assert out_masks[0].labels.tobytes() == mask.labels.tobytes()
    assert (a2, i2) == (anterior, inferior)


def test_normalize_random_rotations_roundtrip():
    center = Point2(64.0, 64.0)
    img, mask = make_annulus(center, 20.0, 30.0, (128, 128))
    base_ant, base_inf = place_rvips(center, 25.0, -math.pi / 2, 2.0)
    sep0 = base_ant.distance_to(base_inf)
    rng = SplitMix64(22)
    for _ in range(30):
        phi = rng.uniform(-math.pi, math.pi)
        rot_img, t = rotate_about(img, center, phi)
        ant, inf = t.apply(base_ant), t.apply(base_inf)
        out_img, out_masks, a2, i2, _ = normalize_orientation(rot_img, [mask], ant, inf, center)
        assert abs(a2.x - i2.x) <= 1e-6
        assert a2.y < i2.y
        assert abs(a2.distance_to(i2) - sep0) <= 1e-9
        # idempotence: a second pass sees a zero angle
        assert abs(orientation_angle(a2, i2)) <= 1e-9


def test_normalize_preserves_myocardium_area():
    center = Point2(64.0, 64.0)
    img, mask = make_annulus(center, 20.0, 30.0, (128, 128))
    ant, inf = place_rvips(center, 25.0, 0.7, 2.0)
    _, out_masks, _, _, _ = normalize_orientation(img, [mask], ant, inf, center)
    before = int((mask.labels > 0).sum())
    after = int((out_masks[0].labels > 0).sum())
    assert abs(after - before) <= 0.05 * before
