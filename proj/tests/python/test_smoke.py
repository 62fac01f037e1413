"""Smoke tests for the otikit python extension, cross-checked against numpy/scipy."""

import numpy as np
import pytest

import otikit


def rng(seed=0):
    return np.random.default_rng(seed)


def test_version():
    assert otikit.__version__


def test_texture_map_matches_scipy_sobel():
    scipy_ndimage = pytest.importorskip("scipy.ndimage")
    image = rng(1).random((7, 9))
    kx = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=float)
    gx = scipy_ndimage.convolve(image, kx, mode="nearest")
    gy = scipy_ndimage.convolve(image, kx.T, mode="nearest")
    expected = np.hypot(gx, gy)
    got = otikit.texture_map(image, op="sobel", combine="l2")
    np.testing.assert_allclose(got[0], expected, atol=1e-9)


def test_iti_and_oti():
    flat = np.full((8, 8), 0.5)
    assert otikit.iti(flat) == 0.0

    image = rng(2).random((8, 8))
    full = np.ones((8, 8), dtype=np.uint8)
    empty = np.zeros((8, 8), dtype=np.uint8)
    assert otikit.oti(image, full) == otikit.iti(image)
    assert otikit.oti(image, empty) == 0.0
    assert otikit.oti(image, full) == pytest.approx(otikit.texture_map(image).mean())


def test_oar():
    image = rng(3).random((3, 4, 4))
    mask = np.zeros((4, 4), dtype=np.uint8)
    mask[0, 0] = mask[1, 1] = mask[2, 2] = mask[3, 3] = 1
    assert otikit.oar(image, mask) == 0.25


def test_rank_and_select_are_deterministic():
    values = [(chr(ord("a") + i), float(i)) for i in range(10)]
    ranked = otikit.rank(values)
    assert [r[0] for r in ranked[:3]] == ["a", "b", "c"]
    # pinned partial Fisher-Yates draw (splitmix64-seeded xoshiro256**)
    assert otikit.select_top_alpha(ranked, 0.4, "random", 7) == ["e", "g", "i", "a"]
    assert otikit.select_top_alpha(ranked, 0.3) == ["a", "b", "c"]


def test_seg_metrics():
    truth = np.zeros((4, 4), dtype=np.uint8)
    truth[0, :3] = 1
    assert otikit.seg_metrics(truth, truth) == (1.0, 1.0, 1.0)
    over = truth.copy()
    over[1, :3] = 1  # TP = FP = 3, FN = 0
    precision, f1, iou = otikit.seg_metrics(over, truth)
    assert (precision, iou) == (0.5, 0.5)
    assert f1 == pytest.approx(2 / 3)


def test_spearman_matches_scipy():
    scipy_stats = pytest.importorskip("scipy.stats")
    x = rng(4).random(50)
    y = rng(5).integers(0, 6, 50).astype(float)  # ties included
    expected = scipy_stats.spearmanr(x, y).statistic
    assert otikit.spearman(list(x), list(y)) == pytest.approx(expected, abs=1e-12)


def test_band_energy_parseval_against_numpy_fft():
    image = rng(6).random((12, 10))
    centered = image - image.mean()
    total_expected = (np.abs(np.fft.fft2(centered)) ** 2).sum() / centered.size
    bands = otikit.band_energy(image)
    assert bands["total"] == pytest.approx(total_expected, rel=1e-9)
    assert bands["low"] + bands["mid"] + bands["high"] == pytest.approx(bands["total"])

    board = np.indices((8, 8)).sum(axis=0) % 2
    bands = otikit.band_energy(board.astype(float))
    assert bands["high"] == pytest.approx(bands["total"])
    assert otikit.band_energy(np.full((5, 5), 0.5))["total"] == 0.0


def test_io_round_trip(tmp_path):
    image = rng(7).random((3, 4, 4))
    path = str(tmp_path / "img.raw")
    otikit.save_planar_raw(image, path)
    loaded = otikit.load_image(path)
    np.testing.assert_array_equal(loaded, image.astype(np.float32).astype(np.float64))

    with pytest.raises(OSError):
        otikit.load_image(str(tmp_path / "missing.raw"))
    with pytest.raises(ValueError):
        otikit.oar(image, np.zeros((2, 2), dtype=np.uint8))


def test_toy_training_and_attack():
    images = [np.array([[0.9, 0.1]]), np.array([[0.1, 0.9]])]
    out = otikit.train("linear", images, [1, 0], learning_rate=0.5, epochs=300, seed=3)
    assert out["train_accuracy"] == 1.0
    assert out["epoch_loss"][-1] < out["epoch_loss"][0]

    model = out["model"]
    assert model.kind == "linear"
    w = model.params[:-1]
    b = model.params[-1]

    x = np.array([[0.55, 0.45]])
    label = model.predict(x)
    margin = abs(float(w @ x.ravel() + b))
    result = otikit.minimal_epsilon(model, x, label, tol=1e-7)
    assert result["success"]
    assert result["minimal_epsilon"] == pytest.approx(margin / np.abs(w).sum(), abs=1e-6)

    distance = otikit.boundary_distance_linear(model, x)
    assert distance == pytest.approx(margin / np.linalg.norm(w), abs=1e-12)

    hit = otikit.fgsm(model, x, label, 1.0)
    assert hit["success"]
    assert np.abs(hit["perturbation"]).max() <= 1.0


def test_generate_corpus_connects_to_measures():
    corpus = otikit.generate_corpus(count=12, side=16, seed=11)
    assert len(corpus) == 12
    ids = {item["image_id"] for item in corpus}
    assert len(ids) == 12
    for item in corpus:
        image, mask = item["image"], item["mask"]
        assert image.shape == (1, 16, 16)
        assert image.min() >= 0.0 and image.max() <= 1.0
        assert otikit.oar(image, mask) == mask.sum() / 256.0
        assert otikit.oti(image, mask) <= otikit.iti(image)
