"""Unit tests for the representation blocks, loss, training loop, and
checkpoint format."""
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from projpose import (
    EncoderOutput,
    Image1D,
    InvalidArgumentError,
    IrrepEmbedding,
    NumericError,
    TrainConfig,
    TrainingFailureError,
    VaeModel,
    decode,
    encode,
    irrep_matrix,
    load_model,
    loss,
    render_volume,
    reparametrize,
    save_model,
    train,
)
from projpose.dataset import generate_dataset
from projpose.errors import DatasetParseError
from projpose.evaluate import align_poses, alignment_spearman
from projpose.vae import (
    _KL_CONST,
    _spectral_rank_angles,
    encode_batch,
    history_csv_lines,
)
from projpose.volumes import asymmetric_three_points

angles = st.floats(min_value=-20.0, max_value=20.0)

_TINY = dict(
    encoder_hidden=(32,),
    decoder_hidden=(32,),
    epochs=2,
    restarts=2,
    spectral_landmarks=64,
    seed=5,
)


def tiny_config(**overrides):
    return TrainConfig(**{**_TINY, **overrides})


@pytest.fixture(scope="module")
def tiny_dataset():
    return generate_dataset(asymmetric_three_points(), 96, width=24, seed=3)


@pytest.fixture(scope="module")
def tiny_model(tiny_dataset):
    model, _ = train(tiny_dataset, tiny_config(epochs=0))
    return model


# ---------------------------------------------------------------------------
# irreducible representation


@given(angles, st.integers(min_value=1, max_value=5))
@settings(max_examples=50)
def test_irrep_orthonormal(theta, k):
    m = irrep_matrix(theta, k).matrix
    assert np.max(np.abs(m.T @ m - np.eye(2 * k))) < 1e-12


@given(angles, angles, st.integers(min_value=1, max_value=4))
@settings(max_examples=50)
def test_irrep_homomorphism(a, b, k):
    left = irrep_matrix(a, k).matrix @ irrep_matrix(b, k).matrix
    right = irrep_matrix(a + b, k).matrix
    assert np.max(np.abs(left - right)) < 1e-9


def test_irrep_block_frequencies():
    theta = 0.3
    m = irrep_matrix(theta, 3).matrix
    for f in (1, 2, 3):
        j = 2 * (f - 1)
        expected = np.array(
            [
                [math.cos(f * theta), -math.sin(f * theta)],
                [math.sin(f * theta), math.cos(f * theta)],
            ]
        )
        assert np.max(np.abs(m[j : j + 2, j : j + 2] - expected)) < 1e-12


def test_irrep_rejects_bad_inputs():
    with pytest.raises(InvalidArgumentError):
        irrep_matrix(0.1, 0)
    with pytest.raises(InvalidArgumentError):
        irrep_matrix(math.nan, 2)
    with pytest.raises(InvalidArgumentError):
        IrrepEmbedding(1, np.array([[1.0, 1.0], [0.0, 1.0]]))


# ---------------------------------------------------------------------------
# posterior, sampling, divergence term


def test_encoder_output_rejects_degenerate():
    with pytest.raises(NumericError):
        EncoderOutput((0.0, 0.0), 0.0, -1.0)
    with pytest.raises(NumericError):
        EncoderOutput((math.nan, 1.0), 0.0, -1.0)


def test_reparametrize_known_values():
    assert reparametrize(1.0, 0.0, 0.5).angle == pytest.approx(1.5)
    r = reparametrize(0.25, math.log(4.0), -1.0)
    assert r.angle == pytest.approx((0.25 - 2.0) % (2.0 * math.pi))
    with pytest.raises(InvalidArgumentError):
        reparametrize(math.inf, 0.0, 0.0)


def test_kl_matches_numeric_integral(tiny_model):
    # KL(N(mu, s^2) || uniform on the circle) integrated on the line gives
    # the closed form in the loss an oracle independent of its derivation.
    image = render_volume(asymmetric_three_points(), 0.7, tiny_model.width)
    for log_var in (-3.0, -1.0, 0.0, 0.5):
        sigma = math.exp(0.5 * log_var)
        x = np.linspace(-12.0 * sigma, 12.0 * sigma, 20001)
        q = np.exp(-0.5 * (x / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))
        integrand = q * (np.log(np.maximum(q, 1e-300)) - math.log(1.0 / (2.0 * math.pi)))
        closed = _KL_CONST - 0.5 * log_var
        assert np.trapezoid(integrand, x) == pytest.approx(closed, abs=1e-6)
        with_kl = loss(tiny_model, image, 0.3, 0.3, log_var, kl_weight=1.0)
        without = loss(tiny_model, image, 0.3, 0.3, log_var, kl_weight=0.0)
        assert with_kl - without == pytest.approx(max(0.0, closed), abs=1e-9)


def test_kl_clamps_at_zero(tiny_model):
    image = render_volume(asymmetric_three_points(), 0.7, tiny_model.width)
    wide = 2.0 * _KL_CONST + 1.0  # spread past uniform: divergence floor is 0
    assert loss(tiny_model, image, 0.0, 0.0, wide, kl_weight=7.0) == pytest.approx(
        loss(tiny_model, image, 0.0, 0.0, wide, kl_weight=0.0)
    )


# ---------------------------------------------------------------------------
# encode / decode


def test_encode_batch_ranges(tiny_dataset, tiny_model):
    out = encode_batch(tiny_model, tiny_dataset.images)
    assert np.all(out.mu >= 0.0) and np.all(out.mu < 2.0 * math.pi)
    assert np.all(out.log_var >= tiny_model.config.log_var_min)
    assert np.all(out.log_var <= tiny_model.config.log_var_max)


def test_encode_single_matches_batch(tiny_dataset, tiny_model):
    sample = tiny_dataset.samples[4]
    single = encode(tiny_model, sample.image)
    batch = encode_batch(tiny_model, tiny_dataset.images)
    assert single.mu == pytest.approx(float(batch.mu[4]))
    assert single.log_var == pytest.approx(float(batch.log_var[4]))


def test_encode_rejects_wrong_width(tiny_model):
    with pytest.raises(InvalidArgumentError):
        encode(tiny_model, Image1D(10, np.zeros(10), 1.0))


def test_decode_needs_matching_frequencies(tiny_model):
    with pytest.raises(InvalidArgumentError):
        decode(tiny_model, irrep_matrix(0.1, tiny_model.k + 1))
    image = decode(tiny_model, irrep_matrix(0.1, tiny_model.k))
    assert image.width == tiny_model.width
    assert np.all(image.pixels >= 0.0) and np.all(image.pixels <= 1.0)


def test_loss_rejects_wrong_width(tiny_model):
    with pytest.raises(InvalidArgumentError):
        loss(tiny_model, Image1D(9, np.zeros(9), 1.0), 0.0, 0.0, 0.0)


# ---------------------------------------------------------------------------
# config validation


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(k=0),
        dict(batch_size=0),
        dict(epochs=-1),
        dict(restarts=0),
        dict(log_var_min=1.0, log_var_max=1.0),
        dict(spectral_landmarks=7),
        dict(spectral_neighbors=1),
    ],
)
def test_train_config_rejects(kwargs):
    with pytest.raises(InvalidArgumentError):
        TrainConfig(**kwargs)


def test_model_rejects_tiny_width():
    with pytest.raises(InvalidArgumentError):
        VaeModel(1, 1.0, TrainConfig(), np.random.default_rng(0))


# ---------------------------------------------------------------------------
# spectral ordering


def test_spectral_angles_recover_circle_order():
    rng = np.random.default_rng(11)
    t = rng.uniform(0.0, 2.0 * math.pi, 300)
    x = np.zeros((300, 8))
    x[:, 0], x[:, 1] = np.cos(t), np.sin(t)
    picked, ang = _spectral_rank_angles(x, np.random.default_rng(0), 250, 10)
    report = align_poses(list(zip(t[picked], ang)))
    assert math.degrees(report.median_error) < 10.0
    assert abs(alignment_spearman(report)) > 0.99


def test_spectral_angles_need_enough_points():
    few = np.zeros((5, 8))
    assert _spectral_rank_angles(few, np.random.default_rng(0), 1200, 12) is None


def test_spectral_targets_are_uniform_ranks():
    rng = np.random.default_rng(2)
    t = rng.uniform(0.0, 2.0 * math.pi, 64)
    x = np.stack([np.cos(t), np.sin(t)], axis=1)
    picked, ang = _spectral_rank_angles(x, np.random.default_rng(0), 64, 8)
    assert len(picked) == 64
    assert sorted(ang) == pytest.approx([2.0 * math.pi * i / 64 for i in range(64)])


# ---------------------------------------------------------------------------
# training loop


def test_train_is_deterministic(tiny_dataset):
    m1, h1 = train(tiny_dataset, tiny_config())
    m2, h2 = train(tiny_dataset, tiny_config())
    for (name1, p1), (name2, p2) in zip(m1.named_parameters(), m2.named_parameters()):
        assert name1 == name2
        assert np.array_equal(p1.value, p2.value)
    assert [e.val_loss for h in h1 for e in h.epochs] == [
        e.val_loss for h in h2 for e in h.epochs
    ]


def test_history_covers_whole_run(tiny_dataset):
    config = tiny_config()
    model, histories = train(tiny_dataset, config)
    assert [h.restart for h in histories] == list(range(config.restarts))
    for h in histories:
        assert not h.diverged
        assert [e.epoch for e in h.epochs] == list(range(config.epochs + 1))
        assert all(math.isfinite(e.val_loss) for e in h.epochs)
    finals = [h.final_val_loss for h in histories]
    assert model.selected_restart == finals.index(min(finals))


def test_history_csv_format(tiny_dataset):
    config = tiny_config(restarts=1)
    _, histories = train(tiny_dataset, config)
    lines = history_csv_lines(histories)
    assert lines[0] == "restart,epoch,train_loss,val_loss"
    assert len(lines) == 1 + config.epochs + 1
    first = lines[1].split(",")
    assert first[0] == "0" and first[1] == "0"
    float(first[2]), float(first[3])


def test_train_epochs_zero_returns_untrained(tiny_dataset):
    model, histories = train(tiny_dataset, tiny_config(epochs=0))
    assert histories == []
    assert model.selected_restart == 0


def test_train_without_spectral_init(tiny_dataset):
    config = tiny_config(restarts=1, spectral_init=False)
    _, histories = train(tiny_dataset, config)
    assert len(histories[0].epochs) == config.epochs + 1


def test_train_needs_validation_split():
    ds = generate_dataset(
        asymmetric_three_points(), 32, width=24, seed=3, val_fraction=0.0
    )
    with pytest.raises(InvalidArgumentError):
        train(ds, tiny_config())


def test_all_restarts_diverging_raises(tiny_dataset):
    config = tiny_config(lr=1e150, spectral_init=False)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        with pytest.raises(TrainingFailureError):
            train(tiny_dataset, config)


# ---------------------------------------------------------------------------
# checkpoints


def test_checkpoint_roundtrip(tiny_dataset, tmp_path):
    model, _ = train(tiny_dataset, tiny_config(restarts=1))
    path = tmp_path / "model.ckpt"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.config == model.config
    assert loaded.width == model.width
    assert loaded.domain_radius == model.domain_radius
    assert loaded.selected_restart == model.selected_restart
    for (name, p), (_, q) in zip(model.named_parameters(), loaded.named_parameters()):
        assert np.array_equal(p.value, q.value), name
    before = encode_batch(model, tiny_dataset.images)
    after = encode_batch(loaded, tiny_dataset.images)
    assert np.array_equal(before.mu, after.mu)


def test_checkpoint_preserves_spectral_fields(tiny_model, tmp_path):
    path = tmp_path / "model.ckpt"
    save_model(tiny_model, path)
    text = path.read_text()
    assert "spectral_init=1" in text
    assert f"spectral_landmarks={_TINY['spectral_landmarks']}" in text
    loaded = load_model(path)
    assert loaded.config.spectral_init is True
    assert loaded.config.spectral_landmarks == _TINY["spectral_landmarks"]


def test_checkpoint_rejects_bad_files(tiny_model, tmp_path):
    path = tmp_path / "model.ckpt"
    save_model(tiny_model, path)
    good = path.read_text().splitlines()

    bad = tmp_path / "bad.ckpt"
    bad.write_text("not a checkpoint\n")
    with pytest.raises(DatasetParseError):
        load_model(bad)

    bad.write_text("\n".join(line for line in good if not line.startswith("k=")) + "\n")
    with pytest.raises(DatasetParseError):
        load_model(bad)

    bad.write_text(
        "\n".join(line for line in good if not line.startswith("param content")) + "\n"
    )
    with pytest.raises(DatasetParseError):
        load_model(bad)

    mangled = [
        line.replace("param content 1 8", "param content 1 5", 1) for line in good
    ]
    bad.write_text("\n".join(mangled) + "\n")
    with pytest.raises(DatasetParseError):
        load_model(bad)
