import math

import numpy as np
import pytest

from scarforge.errors import RecordRejected
from scarforge.phantoms import make_annulus, place_rvips
from scarforge.preprocess import OUTPUT_SIZE, preprocess
from scarforge.raster import GrayImage, LabeledMask, Point2
from scarforge.rng import SplitMix64


def _phantom(spacing=1.5, grid=160, center=(80.0, 78.0), noise=0.0, seed=1):
    rng = SplitMix64(seed)
    c = Point2(*center)
    img, mask = make_annulus(c, 18.0, 27.0, (grid, grid), noise_sigma=noise,
                             rng=rng if noise else None, spacing=(spacing, spacing))
    ant, inf = place_rvips(c, 22.0, -math.pi / 2 + 0.4, 2.0)
    return img, mask, ant, inf


def test_output_contract():
    img, mask, ant, inf = _phantom(noise=0.03)
    out = preprocess(img, mask, (ant, inf))
    assert (out.image.width, out.image.height) == (OUTPUT_SIZE, OUTPUT_SIZE)
    assert out.image.data.min() >= 0.0 and out.image.data.max() <= 1.0
    assert out.image.spacing == (0.5, 0.5)
    assert (out.myo_mask.width, out.myo_mask.height) == (OUTPUT_SIZE, OUTPUT_SIZE)
    assert set(np.unique(out.myo_mask.labels)) <= {0, 1}


def test_chain_centers_the_myocardium():
    img, mask, ant, inf = _phantom()
    out = preprocess(img, mask, (ant, inf))
    ys, xs = np.nonzero(mask.labels > 0)
    cx, cy = out.chain.apply_xy(float(xs.mean()), float(ys.mean()))
    assert abs(cx - 112.0) <= 1.5
    assert abs(cy - 112.0) <= 1.5


def test_already_centered_grid_is_pure_upsample():
    # 112x112 at 1 mm with the wall centered: the chain reduces to the 2x
    # upsample, so landmark coordinates double plus the half-pixel shift
    c = Point2(55.5, 55.5)
    img, mask = make_annulus(c, 14.0, 20.0, (112, 112), spacing=(1.0, 1.0))
    ant, inf = place_rvips(c, 17.0, -math.pi / 2, 2.0)
    out = preprocess(img, mask, (ant, inf))
    assert out.anterior.x == pytest.approx(2 * ant.x + 0.5, abs=1e-9)
    assert out.anterior.y == pytest.approx(2 * ant.y + 0.5, abs=1e-9)
    assert out.inferior.x == pytest.approx(2 * inf.x + 0.5, abs=1e-9)


def test_dimension_chain_from_coarser_spacing():
    img, mask, ant, inf = _phantom(spacing=1.5, grid=192, center=(96.0, 96.0))
    out = preprocess(img, mask, (ant, inf))
    assert (out.image.width, out.image.height) == (224, 224)


def test_percentile_cap_then_normalize():
    # a hot outlier must be capped to the 98th percentile of the crop before
    # the [0, 1] normalization
    img, mask, ant, inf = _phantom()
    data = img.data.copy()
    ys, xs = np.nonzero(mask.labels > 0)
    data[ys[0], xs[0]] = 10.0 * data.max()
    spiked = GrayImage(data, img.spacing)
    out = preprocess(spiked, mask, (ant, inf))
    assert out.image.data.max() == pytest.approx(1.0)
    # the spike is no longer 10x above everything: at most ~2% of pixels sit
    # at the maximum after capping
    at_max = int((out.image.data >= 1.0 - 1e-9).sum())
    assert at_max >= 0.019 * out.image.data.size


def test_cap_and_normalize_idempotent():
    from scarforge.preprocess import CAP_PERCENTILE
    from scarforge.raster import minmax_normalize, percentile

    img, mask, ant, inf = _phantom()  # noise-free: heavy value ties
    out = preprocess(img, mask, (ant, inf))
    cap = percentile(out.image, CAP_PERCENTILE)
    again = minmax_normalize(GrayImage(np.minimum(out.image.data, cap), out.image.spacing))
    assert np.abs(again.data - out.image.data).max() <= 1e-6


def test_mask_labels_preserved_through_chain():
    img, mask, ant, inf = _phantom()
    relabeled = LabeledMask(mask.labels * 3)
    out = preprocess(img, relabeled, (ant, inf))
    assert set(np.unique(out.myo_mask.labels)) <= {0, 3}


def test_empty_mask_rejected():
    img, mask, ant, inf = _phantom()
    empty = LabeledMask(np.zeros_like(mask.labels))
    with pytest.raises(RecordRejected):
        preprocess(img, empty, (ant, inf))


def test_grid_mismatch_rejected():
    img, mask, ant, inf = _phantom()
    small = LabeledMask(mask.labels[:100, :100])
    with pytest.raises(ValueError):
        preprocess(img, small, (ant, inf))


def test_near_border_heart_zero_padded():
    rng = SplitMix64(3)
    c = Point2(20.0, 20.0)  # wall hugs the upper-left corner
    img, mask = make_annulus(c, 12.0, 18.0, (160, 160), spacing=(1.0, 1.0))
    ant, inf = place_rvips(c, 15.0, 0.5, 2.0)
    out = preprocess(img, mask, (ant, inf))
    assert (out.image.width, out.image.height) == (224, 224)
    assert (out.myo_mask.labels > 0).any()
    assert out.image.data[0, 0] >= 0.0
