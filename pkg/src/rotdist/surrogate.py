"""Trainable stand-in for the score networks: an MLP over rotation encodings.

A small fully connected network maps a rotation encoding to two unnormalized
deviation scores (shape channel and feature channel).  Training minimizes
the generalized KL divergence between target weights exp(-beta_s m' -
beta_f o') computed by the geometric oracle and predicted weights built the
same way from the network outputs, both stabilized by their own minimum
energy.  Gradients are hand-rolled reverse-mode; every step draws a fresh
mode-focused rotation batch and scores it online.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from . import distribution as dist_mod
from . import rotation as rt
from .distribution import ImageAlignedCloud, ScoredDistribution, raw_scores
from .encodings import RotationEncoder
from .shapes import ShapeModel
from .validation import check_quaternions

HIDDEN = (256, 256, 256)


@dataclass
class Mlp:
    """Plain fully connected net: affine layers with rectifier hiddens.

    weights[k] has shape (fan_in, fan_out); output layer is linear with two
    channels (predicted shape score, predicted feature score).
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @classmethod
    def init(cls, in_dim: int, hidden: tuple[int, ...] = HIDDEN, out_dim: int = 2, rng=None) -> "Mlp":
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)
        dims = [in_dim, *hidden, out_dim]
        weights, biases = [], []
        for a, b in zip(dims[:-1], dims[1:]):
            bound = np.sqrt(6.0 / (a + b))
            weights.append(rng.uniform(-bound, bound, size=(a, b)))
            biases.append(np.zeros(b))
        return cls(weights, biases)

    def forward(self, enc: np.ndarray) -> np.ndarray:
        """(n, in_dim) -> (n, 2) predicted scores."""
        enc = np.atleast_2d(np.asarray(enc, dtype=float))
        if enc.shape[1] != self.weights[0].shape[0]:
            raise ValueError(
                f"encoding dim {enc.shape[1]} != network input dim {self.weights[0].shape[0]}"
            )
        h = enc
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if k < len(self.weights) - 1:
                h = np.maximum(h, 0.0)
        return h

    def forward_cached(self, enc: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Forward pass retaining pre-activation inputs per layer."""
        h = np.atleast_2d(np.asarray(enc, dtype=float))
        cache = []
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            cache.append(h)
            h = h @ w + b
            if k < len(self.weights) - 1:
                h = np.maximum(h, 0.0)
        return h, cache

    def backward(self, cache: list[np.ndarray], grad_out: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
        """Reverse-mode gradients w.r.t. weights and biases.

        ``cache`` holds each layer's input activations (from forward_cached);
        ``grad_out`` is dLoss/d(output), shape (n, 2).
        """
        grads_w = [np.empty(0)] * len(self.weights)
        grads_b = [np.empty(0)] * len(self.biases)
        g = grad_out
        for k in range(len(self.weights) - 1, -1, -1):
            x = cache[k]
            grads_w[k] = x.T @ g
            grads_b[k] = g.sum(axis=0)
            if k > 0:
                g = g @ self.weights[k].T
                # rectifier gate: the stored input of layer k is its output
                g = g * (x > 0.0)
        return grads_w, grads_b

    def save(self, path: str) -> None:
        """Checkpoint: text header ``mlp <dims...>`` then little-endian f64
        of each layer's weights (row-major) followed by its biases."""
        with open(path, "wb") as fh:
            fh.write(("mlp " + " ".join(str(d) for d in self.dims) + "\n").encode())
            for w, b in zip(self.weights, self.biases):
                fh.write(w.astype("<f8").tobytes())
                fh.write(b.astype("<f8").tobytes())

    @classmethod
    def load(cls, path: str) -> "Mlp":
        with open(path, "rb") as fh:
            header = fh.readline().decode().split()
            if not header or header[0] != "mlp":
                raise ValueError(f"{path}: not an mlp checkpoint")
            dims = [int(d) for d in header[1:]]
            weights, biases = [], []
            for a, b in zip(dims[:-1], dims[1:]):
                w = np.frombuffer(fh.read(8 * a * b), dtype="<f8").reshape(a, b).copy()
                bias = np.frombuffer(fh.read(8 * b), dtype="<f8").copy()
                weights.append(w)
                biases.append(bias)
            if fh.read(1):
                raise ValueError(f"{path}: trailing bytes after checkpoint payload")
        return cls(weights, biases)


def gkl_from_energies(target_energy: np.ndarray, pred_energy: np.ndarray) -> tuple[float, np.ndarray]:
    """GKL(target||predicted) on min-shifted energies, with d(loss)/d(pred_energy).

    Both weight vectors are exp(-(E - min E)).  Written in energy space the
    loss is sum(mu * (ep - et) + nu - mu) with mu = exp(-et~), nu = exp(-ep~),
    which avoids forming logarithms of tiny weights.  The gradient accounts
    for the min-shift through the argmin coordinate (valid almost
    everywhere).
    """
    et = target_energy - target_energy.min()
    kmin = int(np.argmin(pred_energy))
    ep = pred_energy - pred_energy[kmin]
    mu = np.exp(-et)
    nu = np.exp(-ep)
    loss = float(np.sum(mu * (ep - et) + nu - mu))
    g = mu - nu  # d loss / d ep_i
    grad = g.copy()
    grad[kmin] -= g.sum()  # shift term: d ep_j / d pred_energy_kmin = -1
    return loss, grad


def loss_and_grad(
    mlp: Mlp,
    enc: np.ndarray,
    m_target: np.ndarray,
    o_target: np.ndarray,
    beta_s: float,
    beta_f: float,
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Mean GKL between oracle and predicted score weights, with gradients.

    The divergence is averaged over the batch so the gradient scale (and
    hence a usable learning rate) does not depend on the batch size.
    """
    out, cache = mlp.forward_cached(enc)
    target_energy = beta_s * m_target + beta_f * o_target
    pred_energy = beta_s * out[:, 0] + beta_f * out[:, 1]
    loss, g_energy = gkl_from_energies(target_energy, pred_energy)
    n = len(target_energy)
    grad_out = np.column_stack([beta_s * g_energy, beta_f * g_energy]) / n
    gw, gb = mlp.backward(cache, grad_out)
    return loss / n, gw, gb


@dataclass
class TrainConfig:
    steps: int = 2000
    learning_rate: float = 1e-3
    seed: int = 0
    beta_s: float = 50.0
    beta_f: float = 50.0
    top_pool: int = 20000
    n_mode: int = 3000
    n_uniform: int = 1095

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")


def train(
    model: ShapeModel,
    cloud: ImageAlignedCloud,
    cfg: TrainConfig,
    encoder: RotationEncoder | None = None,
    gt_dist: ScoredDistribution | None = None,
    mlp: Mlp | None = None,
    base_level: int = 4,
    refine_rounds: int = 3,
    top_k: int = 4096,
    threads: int = 1,
    callback=None,
) -> tuple[Mlp, np.ndarray]:
    """Fit the score MLP against oracle supervision by plain gradient descent.

    Per step: draw a mode-focused batch of rotations from the precomputed
    ground-truth distribution, score it online with the oracle, and take one
    descent step on the GKL between oracle and predicted weights.

    Returns:
        (trained mlp, loss trace of length cfg.steps).
    """
    encoder = encoder or RotationEncoder()
    rng = np.random.default_rng(cfg.seed)
    if gt_dist is None:
        gt_dist = dist_mod.precompute_gt_distribution(
            model, cloud, base_level=base_level, refine_rounds=refine_rounds,
            top_k=top_k, beta_s=cfg.beta_s, beta_f=cfg.beta_f, threads=threads,
        )
    if mlp is None:
        mlp = Mlp.init(encoder.dim, rng=rng)
    q_gt = cloud.source_rotation
    trace = np.empty(cfg.steps)
    for step in range(cfg.steps):
        batch = dist_mod.mode_focused_sample(
            gt_dist, q_gt, top_pool=cfg.top_pool, n_mode=cfg.n_mode,
            n_uniform=cfg.n_uniform, rng=rng,
        )
        m_t, o_t = raw_scores(model, cloud, batch, threads=threads)
        enc = encoder.transform(batch)
        loss, gw, gb = loss_and_grad(mlp, enc, m_t, o_t, cfg.beta_s, cfg.beta_f)
        for k in range(len(mlp.weights)):
            mlp.weights[k] -= cfg.learning_rate * gw[k]
            mlp.biases[k] -= cfg.learning_rate * gb[k]
        trace[step] = loss
        if callback is not None:
            callback(step, loss)
    return mlp, trace


def predict_distribution(
    mlp: Mlp,
    encoder: RotationEncoder,
    quats: np.ndarray,
    beta_s: float = 50.0,
    beta_f: float = 50.0,
    score_mode: str = "F+S",
    chunk: int = 65536,
) -> ScoredDistribution:
    """Tabulate the network's predicted distribution over a rotation set."""
    quats = check_quaternions(quats)
    m_hat = np.empty(len(quats))
    o_hat = np.empty(len(quats))
    for start in range(0, len(quats), chunk):
        block = quats[start : start + chunk]
        out = mlp.forward(encoder.transform(block))
        m_hat[start : start + len(block)] = out[:, 0]
        o_hat[start : start + len(block)] = out[:, 1]
    return dist_mod._normalize(quats, m_hat, o_hat, beta_s, beta_f, score_mode)


class MlpOrientationDensity(BaseEstimator):
    """Sklearn-style density estimator backed by the trained score MLP.

    Parameters mirror :class:`TrainConfig` plus the encoding choice; ``fit``
    takes the ground-truth rotation (shape (1, 4) quaternion) and requires
    the geometric context (shape model, camera) given at construction.
    """

    def __init__(
        self,
        model: ShapeModel = None,
        camera=None,
        kind: str = "cube_pe",
        n_freq: int = 3,
        steps: int = 2000,
        learning_rate: float = 1e-3,
        beta_s: float = 50.0,
        beta_f: float = 50.0,
        n_points: int = 100,
        eval_level: int = 4,
        seed: int = 0,
    ):
        self.model = model
        self.camera = camera
        self.kind = kind
        self.n_freq = n_freq
        self.steps = steps
        self.learning_rate = learning_rate
        self.beta_s = beta_s
        self.beta_f = beta_f
        self.n_points = n_points
        self.eval_level = eval_level
        self.seed = seed

    def fit(self, X, y=None):
        from .render import default_camera

        if self.model is None:
            raise ValueError("fit needs a shape model")
        cam = self.camera or default_camera(self.model.bounding_radius)
        q_gt = check_quaternions(X)[0]
        self.encoder_ = RotationEncoder(kind=self.kind, n_freq=self.n_freq)
        self.cloud_ = dist_mod.build_image_aligned_cloud(
            self.model, q_gt, cam, n_points=self.n_points, rng=self.seed
        )
        cfg = TrainConfig(
            steps=self.steps, learning_rate=self.learning_rate, seed=self.seed,
            beta_s=self.beta_s, beta_f=self.beta_f,
        )
        self.mlp_, self.loss_trace_ = train(self.model, self.cloud_, cfg, encoder=self.encoder_)
        return self

    def predict_distribution(self, quats: np.ndarray) -> ScoredDistribution:
        self._check_fitted()
        return predict_distribution(
            self.mlp_, self.encoder_, quats, beta_s=self.beta_s, beta_f=self.beta_f
        )

    def score_samples(self, X) -> np.ndarray:
        """Log density at each rotation, tabulated on the eval grid."""
        from . import grid as gridlib

        self._check_fitted()
        if not hasattr(self, "_eval_dist"):
            grid = gridlib.generate_grid(self.eval_level)
            self._eval_dist = self.predict_distribution(grid.quats)
        return self._eval_dist.log_density_at(check_quaternions(X))

    def score(self, X, y=None) -> float:
        """Mean log density over rotations (grid log-likelihood in nats)."""
        return float(np.mean(self.score_samples(X)))

    def _check_fitted(self):
        if not hasattr(self, "mlp_"):
            raise RuntimeError("estimator is not fitted")
