import numpy as np
import pytest

from lulcseg.augment import (GEOMETRIC, PHOTOMETRIC, AugmentConfig,
                             AugmentKind, apply_geometric, apply_photometric,
                             augment_set, contrast_stretch, gamma_correct,
                             hue_shift)
from lulcseg.errors import DimMismatch, WrongKind


def random_pair(rng, h=13, w=17):
    img = rng.integers(0, 256, (h, w, 3), dtype=np.uint8)
    mask = rng.integers(0, 2, (h, w), dtype=np.uint8)
    return img, mask


# --------------------------------------------------------------- geometric

def test_flip_h_two_pixel_example():
    img = np.array([[[1, 1, 1], [2, 2, 2]]], dtype=np.uint8)   # [A, B]
    mask = np.array([[0, 1]], dtype=np.uint8)
    out_img, out_mask = apply_geometric(AugmentKind.FLIP_H, img, mask)
    assert out_img.tolist() == [[[2, 2, 2], [1, 1, 1]]]        # [B, A]
    assert out_mask.tolist() == [[1, 0]]


def test_flips_are_involutions():
    rng = np.random.default_rng(0)
    img, mask = random_pair(rng)
    for kind in (AugmentKind.FLIP_H, AugmentKind.FLIP_V,
                 AugmentKind.ROT180, AugmentKind.TRANSPOSE):
        twice_img, twice_mask = apply_geometric(kind, *apply_geometric(kind, img, mask))
        assert np.array_equal(twice_img, img), kind
        assert np.array_equal(twice_mask, mask), kind


def test_rot90_four_times_is_identity():
    rng = np.random.default_rng(1)
    img, mask = random_pair(rng)
    cur = (img, mask)
    for _ in range(4):
        cur = apply_geometric(AugmentKind.ROT90, *cur)
    assert np.array_equal(cur[0], img)
    assert np.array_equal(cur[1], mask)


def test_rot90_then_rot270_is_identity():
    rng = np.random.default_rng(2)
    img, mask = random_pair(rng)
    back = apply_geometric(AugmentKind.ROT270,
                           *apply_geometric(AugmentKind.ROT90, img, mask))
    assert np.array_equal(back[0], img)
    assert np.array_equal(back[1], mask)


def test_rotations_swap_dims():
    rng = np.random.default_rng(3)
    img, mask = random_pair(rng, h=5, w=9)
    for kind in (AugmentKind.ROT90, AugmentKind.ROT270, AugmentKind.TRANSPOSE):
        out_img, out_mask = apply_geometric(kind, img, mask)
        assert out_img.shape == (9, 5, 3)
        assert out_mask.shape == (9, 5)


def test_geometric_moves_image_and_mask_together():
    # mark one pixel in both; it must land at the same place in each output
    for kind in GEOMETRIC:
        img = np.zeros((6, 8, 3), dtype=np.uint8)
        mask = np.zeros((6, 8), dtype=np.uint8)
        img[2, 5] = 200
        mask[2, 5] = 1
        out_img, out_mask = apply_geometric(kind, img, mask)
        assert np.array_equal(out_img[:, :, 0] == 200, out_mask == 1), kind


def test_geometric_histogram_preserved():
    rng = np.random.default_rng(4)
    img, mask = random_pair(rng, 21, 34)
    for kind in GEOMETRIC:
        out_img, out_mask = apply_geometric(kind, img, mask)
        for c in range(3):
            assert np.array_equal(np.bincount(out_img[:, :, c].ravel(), minlength=256),
                                  np.bincount(img[:, :, c].ravel(), minlength=256))
        assert np.array_equal(np.sort(out_mask, axis=None), np.sort(mask, axis=None))


def test_geometric_rejects_photometric_kind():
    rng = np.random.default_rng(5)
    img, mask = random_pair(rng)
    with pytest.raises(WrongKind):
        apply_geometric(AugmentKind.GAMMA, img, mask)


def test_geometric_rejects_dim_mismatch():
    with pytest.raises(DimMismatch):
        apply_geometric(AugmentKind.FLIP_H,
                        np.zeros((3, 4, 3), np.uint8), np.zeros((4, 3), np.uint8))


# -------------------------------------------------------------- photometric

def test_gamma_one_is_identity():
    rng = np.random.default_rng(6)
    img, _ = random_pair(rng)
    assert np.array_equal(gamma_correct(img, 1.0), img)


def test_gamma_two_on_mid_gray():
    # round(255 * (128/255)^2) = round(64.25) = 64
    img = np.full((2, 2, 3), 128, dtype=np.uint8)
    assert (gamma_correct(img, 2.0) == 64).all()


def test_gamma_endpoints_fixed():
    img = np.array([[[0, 0, 0], [255, 255, 255]]], dtype=np.uint8)
    for g in (0.4, 1.5, 2.2):
        out = gamma_correct(img, g)
        assert tuple(out[0, 0]) == (0, 0, 0)
        assert tuple(out[0, 1]) == (255, 255, 255)


def test_hue_shift_120_turns_red_green():
    img = np.full((3, 3, 3), (255, 0, 0), dtype=np.uint8)
    out = hue_shift(img, 120.0)
    assert (out == np.array([0, 255, 0], dtype=np.uint8)).all()


def test_hue_shift_360_is_identity():
    rng = np.random.default_rng(7)
    img, _ = random_pair(rng)
    assert np.array_equal(hue_shift(img, 360.0), img)


def test_hue_shift_keeps_grays():
    img = np.full((2, 2, 3), 77, dtype=np.uint8)
    assert np.array_equal(hue_shift(img, 30.0), img)


def test_contrast_stretch_expands_narrow_range():
    # channel values 100 and 150 at 0/100 percentiles map to 0 and 255
    img = np.zeros((1, 2, 3), dtype=np.uint8)
    img[0, 0] = 100
    img[0, 1] = 150
    out = contrast_stretch(img, percentiles=(0.0, 100.0))
    assert tuple(out[0, 0]) == (0, 0, 0)
    assert tuple(out[0, 1]) == (255, 255, 255)


def test_contrast_stretch_constant_channel_untouched():
    img = np.full((4, 4, 3), 42, dtype=np.uint8)
    assert np.array_equal(contrast_stretch(img), img)


def test_photometric_rejects_geometric_kind():
    with pytest.raises(WrongKind):
        apply_photometric(AugmentKind.FLIP_H, np.zeros((2, 2, 3), np.uint8))


def test_augment_config_validation():
    with pytest.raises(ValueError):
        AugmentConfig(gamma=0.0)
    with pytest.raises(ValueError):
        AugmentConfig(stretch_percentiles=(98.0, 2.0))


# ------------------------------------------------------------- augment_set

def test_augment_set_yields_ten_variants():
    rng = np.random.default_rng(8)
    img, mask = random_pair(rng)
    out = augment_set(img, mask)
    assert len(out) == 10
    assert np.array_equal(out[0][0], img)
    assert np.array_equal(out[0][1], mask)


def test_augment_set_all_disabled_keeps_only_original():
    rng = np.random.default_rng(9)
    img, mask = random_pair(rng)
    out = augment_set(img, mask, AugmentConfig(kinds=()))
    assert len(out) == 1
    assert np.array_equal(out[0][0], img)


def test_augment_set_respects_kind_order():
    rng = np.random.default_rng(10)
    img, mask = random_pair(rng)
    cfg = AugmentConfig(kinds=(AugmentKind.ROT180, AugmentKind.GAMMA))
    out = augment_set(img, mask, cfg)
    assert len(out) == 3
    assert np.array_equal(out[1][0], np.rot90(img, 2))
    assert np.array_equal(out[2][0], gamma_correct(img, cfg.gamma))


def test_photometric_variants_pass_mask_through():
    rng = np.random.default_rng(11)
    img, mask = random_pair(rng)
    out = augment_set(img, mask)
    kinds = [None] + list(AugmentConfig().kinds)
    for kind, (_, m) in zip(kinds, out):
        if kind in PHOTOMETRIC:
            assert np.array_equal(m, mask), kind


def test_augment_set_outputs_are_copies():
    rng = np.random.default_rng(12)
    img, mask = random_pair(rng)
    before = img.copy()
    out = augment_set(img, mask)
    out[0][0][:] = 99
    assert np.array_equal(img, before)
    assert not np.shares_memory(out[0][0], img)


def test_augment_set_rejects_dim_mismatch():
    with pytest.raises(DimMismatch):
        augment_set(np.zeros((3, 4, 3), np.uint8), np.zeros((4, 4), np.uint8))
