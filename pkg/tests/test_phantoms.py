import math

import numpy as np
import pytest

from scarforge.phantoms import make_annulus, place_rvips
from scarforge.raster import Point2
from scarforge.rng import SplitMix64


def test_annulus_area_matches_analytic():
    _, mask = make_annulus(Point2(112.0, 112.0), 20.0, 30.0, (224, 224))
    area = int(mask.labels.sum())
    analytic = math.pi * (30.0**2 - 20.0**2)
    assert abs(area - analytic) <= 0.02 * analytic


def test_annulus_noise_free_is_deterministic():
    a_img, _ = make_annulus(Point2(64, 64), 18, 27, (128, 128))
    b_img, _ = make_annulus(Point2(64, 64), 18, 27, (128, 128))
    assert a_img.data.tobytes() == b_img.data.tobytes()


def test_annulus_cavity_dimmer_than_wall():
    img, mask = make_annulus(Point2(64, 64), 18, 27, (128, 128))
    wall = img.data[mask.labels > 0]
    ys, xs = np.mgrid[0:128, 0:128]
    cavity = img.data[np.hypot(xs - 64, ys - 64) < 18]
    assert cavity.max() < wall.min()


def test_annulus_rejects_bad_radii():
    with pytest.raises(ValueError):
        make_annulus(Point2(10, 10), 12.0, 8.0, (64, 64))
    with pytest.raises(ValueError):
        make_annulus(Point2(10, 10), 0.0, 8.0, (64, 64))


def test_annulus_noise_needs_rng():
    with pytest.raises(ValueError):
        make_annulus(Point2(10, 10), 4.0, 8.0, (64, 64), noise_sigma=0.1)
    img, _ = make_annulus(Point2(32, 32), 10.0, 16.0, (64, 64),
                          noise_sigma=0.05, rng=SplitMix64(1))
    assert img.data.min() >= 0.0


def test_rvips_on_circle():
    center = Point2(100.0, 90.0)
    ant, inf = place_rvips(center, 33.0, 0.8, 2.1)
    assert abs(ant.distance_to(center) - 33.0) <= 1e-9
    assert abs(inf.distance_to(center) - 33.0) <= 1e-9


def test_rvips_sweep_sign():
    # anterior at the top of the image; positive separation turns +x toward +y
    center = Point2(64.0, 64.0)
    ant, inf = place_rvips(center, 25.0, -math.pi / 2, 2 * math.pi / 3)
    assert ant.y < center.y
    assert inf.x > center.x  # 30 degrees past +x axis, lower-right quadrant
    assert inf.y > center.y


def test_rvips_pi_separation_flags_downstream():
    from scarforge.anatomy import SliceLevel, angular_segments
    from scarforge.errors import AmbiguousAnatomyError

    center = Point2(64.0, 64.0)
    _, mask = make_annulus(center, 20.0, 30.0, (128, 128))
    ant, inf = place_rvips(center, 25.0, 0.3, math.pi)
    with pytest.raises(AmbiguousAnatomyError):
        angular_segments(mask, center, ant, inf, SliceLevel.BASAL)
    with pytest.raises(ValueError):
        place_rvips(center, 25.0, 0.3, 0.0)
