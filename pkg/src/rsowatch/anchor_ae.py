"""Per-object anchor-loss autoencoder, trained with plain numpy.

The model is a symmetric 6 -> hidden -> latent -> hidden -> 6 autoencoder.
Each hidden layer applies per-sample feature normalization with a learned
gain and offset followed by a leaky ReLU; the latent and output layers are
linear. The training objective adds a latent compactness term to the
reconstruction MSE:

    L = mean((xhat - x)^2) + lambda * anchor(Z)

where anchor(Z) averages, over the batch, each latent's mean Euclidean
distance to its k nearest in-batch neighbours (self excluded, neighbour
assignment held fixed within a step). Setting lambda to zero recovers the
plain autoencoder baseline: the anchor branch is skipped entirely, so both
families share one trainer.

All gradients are derived by hand and checked against central finite
differences in the test suite. Training is bit-reproducible for a fixed
seed: parameter init, shuffling and the latent reference sample each draw
from their own seeded stream.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from datetime import datetime

import numpy as np

from .elements import ELEMENT_NAMES, OrbitalElements

log = logging.getLogger(__name__)

INPUT_DIM = len(ELEMENT_NAMES)

#: Fixed parameter ordering so optimizer state and serialization are stable.
PARAM_NAMES = ("W1", "b1", "g1", "o1", "W2", "b2", "W3", "b3", "g2", "o2", "W4", "b4")

_LN_EPS = 1e-5
_STD_FLOOR = 1e-12

# Adam moments, fixed.
_BETA1 = 0.9
_BETA2 = 0.999
_ADAM_EPS = 1e-8

#: Most latents kept as the scoring-time nearest-neighbour reference.
LATENT_REF_CAP = 512

DEFAULT_MIN_TRAINING_ROWS = 100


class InsufficientDataError(ValueError):
    """Training window holds fewer rows than the configured minimum."""


class NotCalibratedError(RuntimeError):
    """Scoring was attempted before thresholds were calibrated."""


@dataclass(frozen=True)
class ModelConfig:
    hidden_dim: int = 16
    latent_dim: int = 5
    epochs: int = 150
    batch_size: int = 16
    learning_rate: float = 1e-3
    lambda_anchor: float = 0.1
    k_neighbors: int = 3
    threshold_sigma: float = 1.5
    leaky_slope: float = 0.2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.hidden_dim < 2:
            raise ValueError(f"hidden_dim must be at least 2, got {self.hidden_dim}")
        if not 0 < self.latent_dim < INPUT_DIM:
            raise ValueError(
                f"latent_dim must lie in [1, {INPUT_DIM - 1}], got {self.latent_dim}"
            )
        if self.epochs <= 0 or self.batch_size <= 0:
            raise ValueError("epochs and batch_size must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.lambda_anchor < 0:
            raise ValueError("lambda_anchor must be non-negative")
        if not 0 < self.k_neighbors < self.batch_size:
            raise ValueError(
                f"k_neighbors must lie in [1, batch_size), got {self.k_neighbors}"
            )
        if not 0 < self.threshold_sigma:
            raise ValueError("threshold_sigma must be positive")


@dataclass(frozen=True)
class NormStats:
    """Per-element mean/std of the training matrix; constant columns get std 1."""

    mean: np.ndarray
    std: np.ndarray

    def standardize(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.std

    def unstandardize(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) * self.std + self.mean


def fit_norm_stats(X: np.ndarray) -> NormStats:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != INPUT_DIM:
        raise ValueError(f"expected an N x {INPUT_DIM} matrix, got shape {X.shape}")
    if X.shape[0] < 1:
        raise ValueError("need at least one row")
    if not np.isfinite(X).all():
        raise ValueError("training matrix contains non-finite values")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std < _STD_FLOOR, 1.0, std)
    return NormStats(mean=mean, std=std)


def init_params(cfg: ModelConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Glorot-uniform weights, zero biases/offsets, unit gains."""
    def glorot(fan_in: int, fan_out: int) -> np.ndarray:
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-bound, bound, size=(fan_in, fan_out))

    h, z = cfg.hidden_dim, cfg.latent_dim
    return {
        "W1": glorot(INPUT_DIM, h), "b1": np.zeros(h),
        "g1": np.ones(h), "o1": np.zeros(h),
        "W2": glorot(h, z), "b2": np.zeros(z),
        "W3": glorot(z, h), "b3": np.zeros(h),
        "g2": np.ones(h), "o2": np.zeros(h),
        "W4": glorot(h, INPUT_DIM), "b4": np.zeros(INPUT_DIM),
    }


def _layer_norm(A: np.ndarray, gain: np.ndarray, offset: np.ndarray):
    mu = A.mean(axis=1, keepdims=True)
    var = A.var(axis=1, keepdims=True)
    sigma = np.sqrt(var + _LN_EPS)
    xhat = (A - mu) / sigma
    return xhat * gain + offset, xhat, sigma


def _layer_norm_backward(dY, xhat, sigma, gain):
    dgain = (dY * xhat).sum(axis=0)
    doffset = dY.sum(axis=0)
    dxhat = dY * gain
    dA = (
        dxhat
        - dxhat.mean(axis=1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=1, keepdims=True)
    ) / sigma
    return dA, dgain, doffset


def _leaky(N: np.ndarray, slope: float) -> np.ndarray:
    return np.where(N > 0.0, N, slope * N)


def _leaky_grad(N: np.ndarray, slope: float) -> np.ndarray:
    return np.where(N > 0.0, 1.0, slope)


def forward(params: dict, cfg: ModelConfig, X: np.ndarray):
    """Run the autoencoder; returns (latents, reconstruction, cache for backprop).

    Normalization is per sample, so each row's outputs are independent of the
    batch it travels in.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    A1 = X @ params["W1"] + params["b1"]
    N1, xhat1, sig1 = _layer_norm(A1, params["g1"], params["o1"])
    H1 = _leaky(N1, cfg.leaky_slope)
    Z = H1 @ params["W2"] + params["b2"]
    A2 = Z @ params["W3"] + params["b3"]
    N2, xhat2, sig2 = _layer_norm(A2, params["g2"], params["o2"])
    H2 = _leaky(N2, cfg.leaky_slope)
    Y = H2 @ params["W4"] + params["b4"]
    cache = {"X": X, "xhat1": xhat1, "sig1": sig1, "N1": N1, "H1": H1,
             "Z": Z, "xhat2": xhat2, "sig2": sig2, "N2": N2, "H2": H2, "Y": Y}
    return Z, Y, cache


def reconstruction_loss(Y: np.ndarray, X: np.ndarray) -> float:
    return float(np.mean((Y - X) ** 2))


def _neighbor_indices(Z: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Pairwise distances and each row's k nearest neighbours (self excluded).

    k is clamped to batch_size - 1. Ties are broken by row order via a stable
    sort so the assignment is deterministic.
    """
    B = Z.shape[0]
    diff = Z[:, None, :] - Z[None, :, :]
    D = np.sqrt((diff * diff).sum(axis=2))
    ke = min(k, B - 1)
    D_masked = D.copy()
    np.fill_diagonal(D_masked, np.inf)
    order = np.argsort(D_masked, axis=1, kind="stable")
    return D, order[:, :ke]


def anchor_loss(Z: np.ndarray, k: int) -> float:
    """Mean over the batch of each latent's mean distance to its k nearest neighbours.

    Batches with fewer than two rows have no neighbours and contribute zero.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    B = Z.shape[0]
    if B < 2:
        return 0.0
    D, nn = _neighbor_indices(Z, k)
    rows = np.arange(B)[:, None]
    return float(D[rows, nn].mean())


def anchor_loss_and_grad(Z: np.ndarray, k: int) -> tuple[float, np.ndarray]:
    """Anchor loss plus its gradient with respect to every latent.

    The neighbour assignment is treated as fixed; gradients flow through the
    distances to both endpoints of each (point, neighbour) pair. Zero-length
    distances contribute zero gradient.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    B = Z.shape[0]
    dZ = np.zeros_like(Z)
    if B < 2:
        return 0.0, dZ
    D, nn = _neighbor_indices(Z, k)
    ke = nn.shape[1]
    coeff = 1.0 / (B * ke)
    total = 0.0
    for i in range(B):
        for j in nn[i]:
            d = D[i, j]
            total += d
            if d > 0.0:
                u = (Z[i] - Z[j]) / d
                dZ[i] += coeff * u
                dZ[j] -= coeff * u
    return total * coeff, dZ


def total_loss(params: dict, cfg: ModelConfig, X: np.ndarray) -> float:
    Z, Y, _ = forward(params, cfg, X)
    loss = reconstruction_loss(Y, np.atleast_2d(X))
    if cfg.lambda_anchor != 0.0:
        loss += cfg.lambda_anchor * anchor_loss(Z, cfg.k_neighbors)
    return loss


def loss_and_gradients(params: dict, cfg: ModelConfig, X: np.ndarray):
    """Total loss and analytic gradients for every parameter.

    With lambda_anchor == 0 the anchor branch is not evaluated at all, which
    makes the plain-autoencoder reduction exact down to the bit level.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    B = X.shape[0]
    Z, Y, c = forward(params, cfg, X)

    loss = reconstruction_loss(Y, X)
    dY = 2.0 * (Y - X) / Y.size

    grads: dict[str, np.ndarray] = {}
    grads["W4"] = c["H2"].T @ dY
    grads["b4"] = dY.sum(axis=0)
    dH2 = dY @ params["W4"].T
    dN2 = dH2 * _leaky_grad(c["N2"], cfg.leaky_slope)
    dA2, grads["g2"], grads["o2"] = _layer_norm_backward(dN2, c["xhat2"], c["sig2"], params["g2"])
    grads["W3"] = Z.T @ dA2
    grads["b3"] = dA2.sum(axis=0)
    dZ = dA2 @ params["W3"].T

    if cfg.lambda_anchor != 0.0 and B >= 2:
        anchor, dZ_anchor = anchor_loss_and_grad(Z, cfg.k_neighbors)
        loss += cfg.lambda_anchor * anchor
        dZ = dZ + cfg.lambda_anchor * dZ_anchor

    grads["W2"] = c["H1"].T @ dZ
    grads["b2"] = dZ.sum(axis=0)
    dH1 = dZ @ params["W2"].T
    dN1 = dH1 * _leaky_grad(c["N1"], cfg.leaky_slope)
    dA1, grads["g1"], grads["o1"] = _layer_norm_backward(dN1, c["xhat1"], c["sig1"], params["g1"])
    grads["W1"] = c["X"].T @ dA1
    grads["b1"] = dA1.sum(axis=0)
    return loss, grads


@dataclass
class TrainedModel:
    """A trained per-object model with everything scoring needs."""

    config: ModelConfig
    norm: NormStats
    params: dict[str, np.ndarray]
    err_mean: np.ndarray | None = None
    err_std: np.ndarray | None = None
    latent_ref: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def calibrated(self) -> bool:
        return self.err_mean is not None and self.err_std is not None

    def thresholds(self) -> np.ndarray:
        if not self.calibrated:
            raise NotCalibratedError("model has no calibration stats")
        return self.err_mean + self.config.threshold_sigma * self.err_std


@dataclass(frozen=True)
class AnomalyVerdict:
    """Per-observation scoring outcome."""

    norad_id: int
    epoch: datetime | None
    errors: dict[str, float]
    flags: dict[str, bool]
    latent_knn_distance: float

    @property
    def any_flag(self) -> bool:
        return any(self.flags.values())


class _Adam:
    def __init__(self, params: dict, lr: float):
        self.lr = lr
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        bc1 = 1.0 - _BETA1 ** self.t
        bc2 = 1.0 - _BETA2 ** self.t
        for name in PARAM_NAMES:
            g = grads[name]
            self.m[name] = _BETA1 * self.m[name] + (1.0 - _BETA1) * g
            self.v[name] = _BETA2 * self.v[name] + (1.0 - _BETA2) * (g * g)
            m_hat = self.m[name] / bc1
            v_hat = self.v[name] / bc2
            params[name] = params[name] - self.lr * m_hat / (np.sqrt(v_hat) + _ADAM_EPS)


def calibrate_thresholds(params: dict, cfg: ModelConfig, X_std: np.ndarray):
    """Mean/std of per-element squared reconstruction error on standardized rows.

    The std floor keeps degenerate (perfectly reconstructed) elements from
    producing zero-width thresholds.
    """
    _, Y, _ = forward(params, cfg, X_std)
    E = (Y - X_std) ** 2
    err_mean = E.mean(axis=0)
    err_std = np.maximum(E.std(axis=0), _STD_FLOOR)
    return err_mean, err_std


def train(
    X: np.ndarray,
    cfg: ModelConfig,
    norad_id: int = 0,
    min_rows: int = DEFAULT_MIN_TRAINING_ROWS,
) -> TrainedModel:
    """Train one model on an N x 6 matrix of raw element values.

    Raises :class:`InsufficientDataError` below ``min_rows`` and
    ``RuntimeError`` if the loss ever goes non-finite (reported with epoch and
    step). The returned model is calibrated and carries a seeded latent
    reference sample (at most ``LATENT_REF_CAP`` rows) for the scoring-time
    nearest-neighbour diagnostic.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != INPUT_DIM:
        raise ValueError(f"expected an N x {INPUT_DIM} matrix, got shape {X.shape}")
    if X.shape[0] < min_rows:
        raise InsufficientDataError(
            f"object {norad_id}: {X.shape[0]} training rows, need at least {min_rows}"
        )

    norm = fit_norm_stats(X)
    X_std = norm.standardize(X)
    n = X_std.shape[0]

    seed_init, seed_shuffle, seed_ref = np.random.SeedSequence(cfg.seed).spawn(3)
    params = init_params(cfg, np.random.Generator(np.random.PCG64(seed_init)))
    shuffle_rng = np.random.Generator(np.random.PCG64(seed_shuffle))
    opt = _Adam(params, cfg.learning_rate)

    final_loss = float("nan")
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, cfg.batch_size):
            batch = X_std[order[start : start + cfg.batch_size]]
            loss, grads = loss_and_gradients(params, cfg, batch)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"object {norad_id}: non-finite loss {loss} at epoch {epoch}, "
                    f"step {start // cfg.batch_size}"
                )
            opt.step(params, grads)
            epoch_losses.append(loss)
        final_loss = float(np.mean(epoch_losses))

    err_mean, err_std = calibrate_thresholds(params, cfg, X_std)
    Z_all, _, _ = forward(params, cfg, X_std)
    if n > LATENT_REF_CAP:
        ref_rng = np.random.Generator(np.random.PCG64(seed_ref))
        keep = np.sort(ref_rng.choice(n, size=LATENT_REF_CAP, replace=False))
        latent_ref = Z_all[keep]
    else:
        latent_ref = Z_all

    return TrainedModel(
        config=cfg,
        norm=norm,
        params=params,
        err_mean=err_mean,
        err_std=err_std,
        latent_ref=latent_ref,
        metadata={"norad_id": norad_id, "rows": int(n), "final_loss": final_loss},
    )


def _latent_knn_distance(model: TrainedModel, Z: np.ndarray) -> np.ndarray:
    ref = model.latent_ref
    if ref is None or ref.shape[0] == 0:
        return np.full(Z.shape[0], np.nan)
    k = min(model.config.k_neighbors, ref.shape[0])
    diff = Z[:, None, :] - ref[None, :, :]
    D = np.sqrt((diff * diff).sum(axis=2))
    nearest = np.partition(D, k - 1, axis=1)[:, :k]
    return nearest.mean(axis=1)


def score_matrix(model: TrainedModel, X: np.ndarray):
    """Score raw rows; returns (squared errors, per-element flags, knn distances).

    Scoring is stateless: per-sample normalization means results do not depend
    on batch composition or ordering.
    """
    if not model.calibrated:
        raise NotCalibratedError("cannot score with an uncalibrated model")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    X_std = model.norm.standardize(X)
    Z, Y, _ = forward(model.params, model.config, X_std)
    E = (Y - X_std) ** 2
    flags = E > model.thresholds()
    return E, flags, _latent_knn_distance(model, Z)


def score(
    model: TrainedModel,
    elements: "OrbitalElements | np.ndarray",
    epoch: datetime | None = None,
) -> AnomalyVerdict:
    """Score a single observation, given as OrbitalElements or a 6-vector."""
    vector = elements.as_vector() if isinstance(elements, OrbitalElements) else (
        np.asarray(elements, dtype=np.float64)
    )
    if vector.shape != (INPUT_DIM,):
        raise ValueError(f"expected a vector of {INPUT_DIM} elements, got shape {vector.shape}")
    E, flags, knn = score_matrix(model, vector[None, :])
    return AnomalyVerdict(
        norad_id=int(model.metadata.get("norad_id", 0)),
        epoch=epoch,
        errors={name: float(E[0, i]) for i, name in enumerate(ELEMENT_NAMES)},
        flags={name: bool(flags[0, i]) for i, name in enumerate(ELEMENT_NAMES)},
        latent_knn_distance=float(knn[0]),
    )
