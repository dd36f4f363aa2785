import math

import pytest

from scarforge.phantoms import make_annulus, place_rvips
from scarforge.raster import Point2
from scarforge.rng import SplitMix64


@pytest.fixture
def annulus_128():
    """Clean annulus on a 128 grid: wall radii [20, 30] about (64, 64)."""
    center = Point2(64.0, 64.0)
    image, mask = make_annulus(center, 20.0, 30.0, (128, 128))
    anterior, inferior = place_rvips(center, 25.0, -math.pi / 2, 2.0)
    return image, mask, center, anterior, inferior


@pytest.fixture
def rng():
    return SplitMix64(20240817)
