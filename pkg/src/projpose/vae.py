"""A rotation-aware variational autoencoder over 1D images.

The encoder maps an image to a direction on the unit circle (the pose
estimate) and a log-variance.  A pose enters the decoder only through its
irreducible representation: a block-diagonal matrix of planar rotations at
integer frequencies applied to a learned content vector.  The decoder
never sees the image coordinate frame directly, which is what ties the
latent space to the rotation group.

Training maximizes the usual evidence bound: pixelwise binary
cross-entropy plus the divergence between the Gaussian pose posterior
(on the algebra) and the uniform prior on the circle.  Because the bound
is riddled with local optima in which the encoder folds or crumples the
circle, each restart first orders a landmark subset of the images around
the circle spectrally, regresses the encoder onto that ordering, and
warms up the decoder against the frozen encoder before optimizing
everything jointly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from . import autodiff as ad
from .autodiff import Mlp, Node, adam_state, adam_step, backward
from .dataset import Dataset
from .errors import (
    DatasetParseError,
    InvalidArgumentError,
    NumericError,
    TrainingDivergenceError,
    TrainingFailureError,
)
from .geometry import Image1D, Rotation, canonical_angle, rotation_from_angle

# KL(N(mu, s^2) || Uniform(circle)) = log(2 pi) - 0.5 log(2 pi e s^2),
# which rearranges to 0.5 (log(2 pi) - 1) - 0.5 log_var.
_KL_CONST = 0.5 * (math.log(2.0 * math.pi) - 1.0)

# Initialization phases per restart, in epochs of the training split.
_SPECTRAL_FIT_EPOCHS = 40
_DECODER_WARMUP_EPOCHS = 60
# Log-variance the encoder is pulled toward during the fit phase: wide
# enough that pose noise still explores, narrow enough not to blur the
# warmed-up decoder.
_SPECTRAL_LOG_VAR_TARGET = -4.0
# Below this many usable images the spectral embedding is meaningless.
_SPECTRAL_MIN_POINTS = 8


@dataclass(frozen=True)
class EncoderOutput:
    """Posterior over the pose of one image: direction, angle, spread."""

    mean_vector: tuple[float, float]
    mu: float
    log_var: float

    def __post_init__(self):
        u1, u2 = self.mean_vector
        if not (math.isfinite(u1) and math.isfinite(u2) and math.isfinite(self.log_var)):
            raise NumericError("encoder produced a non-finite output")
        if u1 == 0.0 and u2 == 0.0:
            raise NumericError("encoder mean vector is zero; pose angle undefined")


@dataclass(frozen=True, eq=False)
class IrrepEmbedding:
    """Block-diagonal representation of a planar rotation.

    Block k (1-based) rotates by k times the angle, so the matrix is
    orthonormal and the map angle -> matrix is a group homomorphism.
    """

    frequencies: int
    matrix: np.ndarray

    def __post_init__(self):
        k = self.frequencies
        if k < 1:
            raise InvalidArgumentError(f"need at least one frequency, got {k}")
        m = np.array(self.matrix, dtype=np.float64)
        if m.shape != (2 * k, 2 * k):
            raise InvalidArgumentError(f"matrix shape {m.shape} != ({2 * k}, {2 * k})")
        if np.max(np.abs(m.T @ m - np.eye(2 * k))) > 1e-12:
            raise InvalidArgumentError("representation matrix is not orthonormal")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)


def irrep_matrix(theta: float, frequencies: int) -> IrrepEmbedding:
    """The representation of the rotation by ``theta`` at 1..K frequencies."""
    k = int(frequencies)
    if k < 1:
        raise InvalidArgumentError(f"need at least one frequency, got {k}")
    theta = float(theta)
    if not math.isfinite(theta):
        raise InvalidArgumentError("angle must be finite")
    m = np.zeros((2 * k, 2 * k))
    for i in range(1, k + 1):
        c, s = math.cos(i * theta), math.sin(i * theta)
        j = 2 * (i - 1)
        m[j, j] = c
        m[j, j + 1] = -s
        m[j + 1, j] = s
        m[j + 1, j + 1] = c
    return IrrepEmbedding(k, m)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for :func:`train`."""

    k: int = 4
    encoder_hidden: tuple[int, ...] = (128, 128)
    decoder_hidden: tuple[int, ...] = (128, 128)
    lr: float = 1e-3
    batch_size: int = 64
    epochs: int = 200
    restarts: int = 3
    seed: int = 1
    kl_weight: float = 1.0
    log_var_min: float = -9.0
    log_var_max: float = 2.0
    spectral_init: bool = True
    spectral_landmarks: int = 1200
    spectral_neighbors: int = 12

    def __post_init__(self):
        if self.k < 1:
            raise InvalidArgumentError("k must be >= 1")
        if self.batch_size < 1 or self.restarts < 1 or self.epochs < 0:
            raise InvalidArgumentError("bad training budget")
        if self.log_var_min >= self.log_var_max:
            raise InvalidArgumentError("empty log-variance interval")
        if self.spectral_landmarks < _SPECTRAL_MIN_POINTS:
            raise InvalidArgumentError(
                f"spectral_landmarks must be >= {_SPECTRAL_MIN_POINTS}"
            )
        if self.spectral_neighbors < 2:
            raise InvalidArgumentError("spectral_neighbors must be >= 2")


class VaeModel:
    """Encoder, decoder, and content vector, all built on graph nodes."""

    def __init__(
        self,
        width: int,
        domain_radius: float,
        config: TrainConfig,
        rng: np.random.Generator,
    ):
        if width < 2:
            raise InvalidArgumentError(f"image width must be >= 2, got {width}")
        self.width = int(width)
        self.domain_radius = float(domain_radius)
        self.config = config
        self.k = config.k
        self.encoder = Mlp([width, *config.encoder_hidden, 3], rng)
        self.decoder = Mlp([2 * config.k, *config.decoder_hidden, width], rng)
        self.content = Node(0.5 * rng.standard_normal(2 * config.k))
        self.selected_restart: int | None = None

    def parameters(self) -> list[Node]:
        return self.encoder.parameters() + self.decoder.parameters() + [self.content]

    def named_parameters(self) -> list[tuple[str, Node]]:
        named = []
        for prefix, mlp in (("encoder", self.encoder), ("decoder", self.decoder)):
            for i, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
                named.append((f"{prefix}.w{i}", w))
                named.append((f"{prefix}.b{i}", b))
        named.append(("content", self.content))
        return named

    @property
    def parameter_count(self) -> int:
        return sum(p.value.size for p in self.parameters())


def _decoder_logits(model: VaeModel, theta: Node) -> Node:
    """Decode a batch of pose angles into image logits.

    Equivalent to applying the block-rotation representation of each angle
    to the content vector and running the decoder on the result.
    """
    cols = []
    for k in range(1, model.k + 1):
        ck = ad.cos(ad.scale(theta, k))
        sk = ad.sin(ad.scale(theta, k))
        c0 = ad.element(model.content, 2 * (k - 1))
        c1 = ad.element(model.content, 2 * (k - 1) + 1)
        cols.append(ck * c0 - sk * c1)
        cols.append(sk * c0 + ck * c1)
    z = ad.stack_columns(cols)
    return model.decoder.forward_linear(z)


def _forward_nodes(
    model: VaeModel, images: np.ndarray, eps: np.ndarray | None
) -> SimpleNamespace:
    x = Node(images)
    head = model.encoder.forward_linear(x)
    u1 = ad.column(head, 0)
    u2 = ad.column(head, 1)
    log_var = ad.clip(
        ad.column(head, 2), model.config.log_var_min, model.config.log_var_max
    )
    mu = ad.atan2(u2, u1)
    if eps is None:
        theta = mu
    else:
        theta = ad.add(mu, ad.mul(ad.exp(ad.scale(log_var, 0.5)), Node(eps)))
    logits = _decoder_logits(model, theta)
    return SimpleNamespace(
        u1=u1, u2=u2, log_var=log_var, mu=mu, theta=theta, logits=logits
    )


def _loss_node(fwd: SimpleNamespace, targets: np.ndarray, kl_weight: float) -> Node:
    count = targets.shape[0]
    bce = ad.scale(ad.total(ad.bce_with_logits(fwd.logits, targets)), 1.0 / count)
    kl_arg = ad.add(ad.scale(fwd.log_var, -0.5), Node(_KL_CONST))
    kl = ad.scale(ad.total(ad.relu(kl_arg)), 1.0 / count)
    return ad.add(bce, ad.scale(kl, kl_weight))


def encode_batch(model: VaeModel, images: np.ndarray) -> SimpleNamespace:
    """Posterior parameters for a stack of images, as plain arrays."""
    images = np.atleast_2d(np.asarray(images, dtype=np.float64))
    if images.shape[1] != model.width:
        raise InvalidArgumentError(
            f"image width {images.shape[1]} != model width {model.width}"
        )
    fwd = _forward_nodes(model, images, None)
    mu = np.mod(fwd.mu.value, 2.0 * math.pi)
    mu[mu >= 2.0 * math.pi] = 0.0
    return SimpleNamespace(
        mu=mu,
        log_var=fwd.log_var.value.copy(),
        u1=fwd.u1.value.copy(),
        u2=fwd.u2.value.copy(),
    )


def encode(model: VaeModel, image: Image1D) -> EncoderOutput:
    """Infer the pose posterior of a single image."""
    if image.width != model.width:
        raise InvalidArgumentError(
            f"image width {image.width} != model width {model.width}"
        )
    out = encode_batch(model, image.pixels[None, :])
    u1, u2 = float(out.u1[0]), float(out.u2[0])
    if not (math.isfinite(u1) and math.isfinite(u2)):
        raise NumericError("encoder produced a non-finite mean vector")
    return EncoderOutput((u1, u2), float(out.mu[0]), float(out.log_var[0]))


def reparametrize(mu: float, log_var: float, epsilon: float) -> Rotation:
    """Draw a pose from the posterior: rotate the mean by sigma * epsilon."""
    for name, value in (("mu", mu), ("log_var", log_var), ("epsilon", epsilon)):
        if not math.isfinite(float(value)):
            raise InvalidArgumentError(f"{name} must be finite")
    return rotation_from_angle(float(mu) + math.exp(0.5 * float(log_var)) * float(epsilon))


def decode(model: VaeModel, embedding: IrrepEmbedding) -> Image1D:
    """Render the content vector as seen under the given representation."""
    if embedding.frequencies != model.k:
        raise InvalidArgumentError(
            f"embedding has {embedding.frequencies} frequencies, model has {model.k}"
        )
    z = embedding.matrix @ model.content.value
    logits = model.decoder.forward_linear(Node(z[None, :]))
    probs = ad.sigmoid(logits).value[0]
    return Image1D(model.width, probs, model.domain_radius)


def loss(
    model: VaeModel,
    image: Image1D,
    theta_sample: float,
    mu: float,
    log_var: float,
    kl_weight: float = 1.0,
) -> float:
    """Negative evidence bound for one image at a sampled pose.

    ``mu`` is accepted alongside ``log_var`` as part of the posterior, but
    the divergence against the uniform pose prior depends on the spread
    only, so the reconstruction term is the only place the sample enters.
    """
    if image.width != model.width:
        raise InvalidArgumentError(
            f"image width {image.width} != model width {model.width}"
        )
    theta = Node(np.array([float(theta_sample)]))
    logits = _decoder_logits(model, theta)
    bce = float(ad.total(ad.bce_with_logits(logits, image.pixels[None, :])).value)
    kl = max(0.0, _KL_CONST - 0.5 * float(log_var))
    return bce + float(kl_weight) * kl


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float


@dataclass
class RestartHistory:
    restart: int
    diverged: bool
    epochs: list[EpochStats]

    @property
    def final_val_loss(self) -> float:
        return self.epochs[-1].val_loss if self.epochs else math.inf


def _restart_rng(seed: int, restart: int) -> np.random.Generator:
    return np.random.default_rng([seed, restart])


def _connected(adjacency: np.ndarray) -> bool:
    reached = np.zeros(len(adjacency), dtype=bool)
    reached[0] = True
    frontier = reached.copy()
    while frontier.any():
        frontier = adjacency[frontier].any(axis=0) & ~reached
        reached |= frontier
    return bool(reached.all())


def _spectral_rank_angles(
    images: np.ndarray, rng: np.random.Generator, landmarks: int, neighbors: int
) -> tuple[np.ndarray, np.ndarray] | None:
    """Order a landmark subset of images around the circle.

    Builds a mutual nearest-neighbour graph on a random subset, embeds it
    with the two leading nontrivial eigenvectors of the degree-normalized
    adjacency, and replaces the embedded angles by their ranks spread
    evenly over the circle, matching the uniform pose prior.  The graph is
    kept binary on purpose: weighted affinities let near-coincident images
    of distant poses bridge the cycle into a figure eight.  When the image
    manifold itself is folded (a reflection-symmetric volume) the ordering
    inherits the fold rather than undoing it.  Returns landmark indices
    and their target angles, or None with too few images.
    """
    n = min(int(landmarks), len(images))
    if n < _SPECTRAL_MIN_POINTS:
        return None
    picked = rng.permutation(len(images))[:n]
    x = images[picked]
    sq = (x * x).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.fill_diagonal(d2, np.inf)
    k = min(int(neighbors), n - 1)
    while True:
        cols = np.argsort(d2, axis=1, kind="stable")[:, :k]
        graph = np.zeros((n, n), dtype=bool)
        graph[np.repeat(np.arange(n), k), cols.ravel()] = True
        graph |= graph.T
        # Doubling k until the graph connects keeps clustered samples of a
        # lumpy dataset in one component without widening typical links.
        if _connected(graph) or k == n - 1:
            break
        k = min(2 * k, n - 1)
    weights = graph.astype(np.float64)
    degree = weights.sum(axis=1)
    normalized = weights / np.sqrt(np.outer(degree, degree))
    _, vectors = np.linalg.eigh(normalized)
    plane = vectors[:, [-2, -3]] / np.sqrt(degree)[:, None]
    angles = np.arctan2(plane[:, 1], plane[:, 0])
    ranks = np.argsort(np.argsort(angles, kind="stable"), kind="stable")
    return picked, 2.0 * math.pi * ranks / n


def _fit_encoder_to_angles(
    model: VaeModel,
    images: np.ndarray,
    angles: np.ndarray,
    rng: np.random.Generator,
    config: TrainConfig,
) -> None:
    """Regress the pose head onto target circle directions.

    Pulls the mean vector toward (cos, sin) of each target and the
    log-variance toward a moderate spread, leaving the decoder untouched.
    """
    cos_t = np.cos(angles)
    sin_t = np.sin(angles)
    params = model.encoder.parameters()
    state = adam_state(params)
    for _ in range(_SPECTRAL_FIT_EPOCHS):
        order = rng.permutation(len(images))
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            head = model.encoder.forward_linear(Node(images[batch]))
            du1 = ad.add(ad.column(head, 0), Node(-cos_t[batch]))
            du2 = ad.add(ad.column(head, 1), Node(-sin_t[batch]))
            dlv = ad.add(
                ad.column(head, 2),
                Node(np.full(len(batch), -_SPECTRAL_LOG_VAR_TARGET)),
            )
            sq = ad.add(
                ad.add(ad.total(ad.mul(du1, du1)), ad.total(ad.mul(du2, du2))),
                ad.scale(ad.total(ad.mul(dlv, dlv)), 0.1),
            )
            loss_node = ad.scale(sq, 1.0 / len(batch))
            if not math.isfinite(float(loss_node.value)):
                raise TrainingDivergenceError(start, "non-finite encoder fit loss")
            backward(loss_node)
            adam_step(params, [p.grad for p in params], state, lr=config.lr)


def _warmup_decoder(
    model: VaeModel,
    images: np.ndarray,
    train_idx: np.ndarray,
    rng: np.random.Generator,
    config: TrainConfig,
) -> None:
    """Train decoder and content against the frozen encoder for a while."""
    params = model.decoder.parameters() + [model.content]
    state = adam_state(params)
    for _ in range(_DECODER_WARMUP_EPOCHS):
        order = train_idx[rng.permutation(len(train_idx))]
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            eps = rng.standard_normal(len(batch))
            fwd = _forward_nodes(model, images[batch], eps)
            loss_node = _loss_node(fwd, images[batch], config.kl_weight)
            if not math.isfinite(float(loss_node.value)):
                raise TrainingDivergenceError(start, "non-finite warmup loss")
            backward(loss_node)
            adam_step(params, [p.grad for p in params], state, lr=config.lr)


def _mean_loss(model: VaeModel, images: np.ndarray, config: TrainConfig) -> float:
    fwd = _forward_nodes(model, images, None)
    return float(_loss_node(fwd, images, config.kl_weight).value)


def train(
    dataset: Dataset, config: TrainConfig = TrainConfig()
) -> tuple[VaeModel, list[RestartHistory]]:
    """Fit the model with independent restarts; keep the best validator.

    Each restart draws its own initialization, batch order, and pose noise
    from a stream derived from (seed, restart index).  Unless disabled in
    the config, a restart begins by spectrally ordering a landmark subset
    of the training images, fitting the encoder to that ordering, and
    warming up the decoder against the frozen encoder; only then does the
    joint loop run for ``config.epochs`` epochs.  Each restart's history
    starts with an epoch-0 row evaluating the untrained model, so loss
    curves cover the whole run.  A restart whose loss or gradients leave
    the finite range is recorded as diverged and abandoned; if every
    restart diverges, training fails.  The selected model is the one with
    the lowest final validation loss.
    """
    if len(dataset.val_indices) == 0:
        raise InvalidArgumentError("dataset has no validation split")
    if config.epochs == 0:
        model = VaeModel(
            dataset.width, dataset.volume.domain_radius, config, _restart_rng(config.seed, 0)
        )
        model.selected_restart = 0
        return model, []
    images = dataset.images
    train_idx = dataset.train_indices
    train_images = images[train_idx]
    val_images = images[dataset.val_indices]
    histories: list[RestartHistory] = []
    candidates: list[tuple[float, int, VaeModel]] = []
    for restart in range(config.restarts):
        rng = _restart_rng(config.seed, restart)
        model = VaeModel(dataset.width, dataset.volume.domain_radius, config, rng)
        log: list[EpochStats] = []
        diverged = False
        base_train = _mean_loss(model, train_images, config)
        base_val = _mean_loss(model, val_images, config)
        if math.isfinite(base_train) and math.isfinite(base_val):
            log.append(EpochStats(0, base_train, base_val))
        else:
            diverged = True
        if not diverged and config.spectral_init:
            try:
                spectral = _spectral_rank_angles(
                    train_images, rng, config.spectral_landmarks, config.spectral_neighbors
                )
                if spectral is not None:
                    picked, angles = spectral
                    _fit_encoder_to_angles(
                        model, train_images[picked], angles, rng, config
                    )
                    _warmup_decoder(model, images, train_idx, rng, config)
            except TrainingDivergenceError:
                diverged = True
        params = model.parameters()
        state = adam_state(params)
        for epoch in range(1, config.epochs + 1):
            if diverged:
                break
            order = train_idx[rng.permutation(len(train_idx))]
            running = 0.0
            for start in range(0, len(order), config.batch_size):
                batch = order[start : start + config.batch_size]
                eps = rng.standard_normal(len(batch))
                fwd = _forward_nodes(model, images[batch], eps)
                loss_node = _loss_node(fwd, images[batch], config.kl_weight)
                if not math.isfinite(float(loss_node.value)):
                    diverged = True
                    break
                backward(loss_node)
                try:
                    adam_step(params, [p.grad for p in params], state, lr=config.lr)
                except TrainingDivergenceError:
                    diverged = True
                    break
                running += float(loss_node.value) * len(batch)
            if diverged:
                break
            val_loss = _mean_loss(model, val_images, config)
            if not math.isfinite(val_loss):
                diverged = True
                break
            log.append(EpochStats(epoch, running / len(train_idx), val_loss))
        histories.append(RestartHistory(restart, diverged, log))
        if not diverged and len(log) > 1:
            candidates.append((log[-1].val_loss, restart, model))
    if not candidates:
        raise TrainingFailureError(
            f"all {config.restarts} restarts diverged; nothing to select"
        )
    best = min(candidates, key=lambda c: (c[0], c[1]))
    best[2].selected_restart = best[1]
    return best[2], histories


def history_csv_lines(histories: list[RestartHistory]) -> list[str]:
    from .geometry import format_float

    lines = ["restart,epoch,train_loss,val_loss"]
    for h in histories:
        for e in h.epochs:
            lines.append(
                f"{h.restart},{e.epoch},{format_float(e.train_loss)},{format_float(e.val_loss)}"
            )
    return lines


_CHECKPOINT_MAGIC = "projpose-vae 1"


def save_model(model: VaeModel, path) -> None:
    """Write the model as key-ordered text with full-precision parameters."""
    from .geometry import format_float

    c = model.config
    header = {
        "batch_size": str(c.batch_size),
        "decoder_hidden": " ".join(str(w) for w in c.decoder_hidden),
        "domain_radius": format_float(model.domain_radius),
        "encoder_hidden": " ".join(str(w) for w in c.encoder_hidden),
        "epochs": str(c.epochs),
        "k": str(c.k),
        "kl_weight": format_float(c.kl_weight),
        "log_var_max": format_float(c.log_var_max),
        "log_var_min": format_float(c.log_var_min),
        "lr": format_float(c.lr),
        "restarts": str(c.restarts),
        "seed": str(c.seed),
        "selected_restart": str(
            -1 if model.selected_restart is None else model.selected_restart
        ),
        "spectral_init": "1" if c.spectral_init else "0",
        "spectral_landmarks": str(c.spectral_landmarks),
        "spectral_neighbors": str(c.spectral_neighbors),
        "width": str(model.width),
    }
    lines = [_CHECKPOINT_MAGIC]
    for key in sorted(header):
        lines.append(f"{key}={header[key]}")
    for name, node in sorted(model.named_parameters()):
        shape = node.value.shape
        dims = " ".join(str(d) for d in shape)
        flat = " ".join(format_float(v) for v in node.value.ravel())
        lines.append(f"param {name} {len(shape)} {dims} {flat}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> VaeModel:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines or lines[0] != _CHECKPOINT_MAGIC:
        raise DatasetParseError(1, "not a model checkpoint")
    fields: dict[str, str] = {}
    params: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if line.startswith("param "):
            parts = line.split()
            try:
                name = parts[1]
                ndim = int(parts[2])
                dims = tuple(int(d) for d in parts[3 : 3 + ndim])
                values = np.array([float(v) for v in parts[3 + ndim :]])
                params[name] = values.reshape(dims)
            except (IndexError, ValueError) as exc:
                raise DatasetParseError(lineno, f"bad parameter line: {exc}") from exc
        else:
            if "=" not in line:
                raise DatasetParseError(lineno, f"expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            fields[key] = value
    try:
        config = TrainConfig(
            k=int(fields["k"]),
            encoder_hidden=tuple(int(w) for w in fields["encoder_hidden"].split()),
            decoder_hidden=tuple(int(w) for w in fields["decoder_hidden"].split()),
            lr=float(fields["lr"]),
            batch_size=int(fields["batch_size"]),
            epochs=int(fields["epochs"]),
            restarts=int(fields["restarts"]),
            seed=int(fields["seed"]),
            kl_weight=float(fields["kl_weight"]),
            log_var_min=float(fields["log_var_min"]),
            log_var_max=float(fields["log_var_max"]),
            spectral_init=fields["spectral_init"] == "1",
            spectral_landmarks=int(fields["spectral_landmarks"]),
            spectral_neighbors=int(fields["spectral_neighbors"]),
        )
        width = int(fields["width"])
        domain_radius = float(fields["domain_radius"])
        selected = int(fields["selected_restart"])
    except (KeyError, ValueError) as exc:
        raise DatasetParseError(0, f"bad checkpoint header: {exc}") from exc
    model = VaeModel(width, domain_radius, config, np.random.default_rng(0))
    model.selected_restart = None if selected < 0 else selected
    for name, node in model.named_parameters():
        if name not in params:
            raise DatasetParseError(0, f"checkpoint is missing parameter {name}")
        if params[name].shape != node.value.shape:
            raise DatasetParseError(
                0,
                f"parameter {name} has shape {params[name].shape}, "
                f"expected {node.value.shape}",
            )
        node.value = params[name]
    return model
