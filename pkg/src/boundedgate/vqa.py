"""Offline variational optimization: every objective and gradient query goes to a surrogate.

The surrogate is a trained :class:`~boundedgate.learner.Predictor`. It is a
per-coordinate degree-1 trigonometric polynomial, so the parameter-shift rule
is exact for it and no circuit is simulated inside the optimization loops.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import trig
from .circuit import expectation
from .pauli import Observable


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.1
    max_iters: int = 200
    shift: float = np.pi / 2
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning rate must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if np.isclose(np.sin(self.shift), 0.0, atol=1e-12):
            raise ValueError("shift must not be a multiple of pi")

    def initial_parameters(self, k: int) -> np.ndarray:
        return np.random.default_rng(self.seed).uniform(-np.pi, np.pi, size=k)


@dataclass
class TrainTrace:
    """Objective and parameters at every iteration, initialization included."""

    iterations: list = field(default_factory=list)
    params: list = field(default_factory=list)
    objective: list = field(default_factory=list)

    def record(self, it, theta, value):
        self.iterations.append(int(it))
        self.params.append(np.array(theta, dtype=float))
        self.objective.append(float(value))

    def __len__(self):
        return len(self.iterations)

    @property
    def final_params(self) -> np.ndarray:
        return self.params[-1]

    @property
    def final_objective(self) -> float:
        return self.objective[-1]

    def to_csv(self, digits: int = 12) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        k = len(self.params[0]) if self.params else 0
        w.writerow(["iter", "objective", *(f"theta_{j}" for j in range(k))])
        for it, th, obj in zip(self.iterations, self.params, self.objective):
            w.writerow([it, f"{obj:.{digits}g}", *(f"{v:.{digits}g}" for v in th)])
        return buf.getvalue()


def _shift_rule(values_plus, values_minus, alpha):
    return (values_plus - values_minus) / (2.0 * np.sin(alpha))


def surrogate_gradient(pred, obs: Observable | None, x, k: int, alpha: float = np.pi / 2) -> float:
    """Parameter-shift derivative of the surrogate along coordinate ``k``."""
    if np.isclose(np.sin(alpha), 0.0, atol=1e-12):
        raise ValueError("shift must not be a multiple of pi")
    x = np.asarray(x, dtype=float)
    e = np.zeros_like(x)
    e[k] = alpha
    vals = pred.predict(np.stack([x + e, x - e]), obs)
    return float(_shift_rule(vals[0], vals[1], alpha))


def surrogate_gradient_full(pred, obs, x, alpha: float = np.pi / 2, coords=None) -> np.ndarray:
    """Shift-rule gradient over ``coords`` (all coordinates by default) in one batched query."""
    x = np.asarray(x, dtype=float)
    coords = np.arange(x.size) if coords is None else np.asarray(coords)
    pts = np.repeat(x[None, :], 2 * coords.size, axis=0)
    pts[np.arange(coords.size), coords] += alpha
    pts[coords.size + np.arange(coords.size), coords] -= alpha
    vals = np.asarray(pred.predict(pts, obs))
    return _shift_rule(vals[: coords.size], vals[coords.size :], alpha)


def offline_vqe(pred, hamiltonian: Observable, cfg: OptimizerConfig, init=None) -> TrainTrace:
    """Gradient descent on ``theta -> pred(theta, H)``."""
    theta = cfg.initial_parameters(pred.d) if init is None else np.array(init, dtype=float)
    if theta.shape != (pred.d,):
        raise ValueError(f"initial parameters must have length {pred.d}")
    trace = TrainTrace()
    trace.record(0, theta, pred.predict(theta, hamiltonian))
    for it in range(1, cfg.max_iters + 1):
        theta = theta - cfg.learning_rate * surrogate_gradient_full(pred, hamiltonian, theta, cfg.shift)
        trace.record(it, theta, pred.predict(theta, hamiltonian))
    return trace


def exact_vqe(circuit, hamiltonian: Observable, cfg: OptimizerConfig, init=None, initial_state=None) -> TrainTrace:
    """Same optimizer on the exact simulator (infinite-shot reference)."""
    from .circuit import parameter_shift_gradient

    theta = cfg.initial_parameters(circuit.n_slots) if init is None else np.array(init, dtype=float)
    trace = TrainTrace()
    trace.record(0, theta, expectation(circuit, theta, hamiltonian, initial_state))
    for it in range(1, cfg.max_iters + 1):
        grad = parameter_shift_gradient(circuit, theta, hamiltonian, cfg.shift, initial_state)
        theta = theta - cfg.learning_rate * grad
        trace.record(it, theta, expectation(circuit, theta, hamiltonian, initial_state))
    return trace


# --- binary classification -----------------------------------------------------


@dataclass(frozen=True)
class ClassificationData:
    z: np.ndarray  # (m, 3)
    y: np.ndarray  # (m,) in {-1, +1}
    theta_star: np.ndarray

    def __len__(self):
        return self.y.size

    def split(self, test_fraction: float = 0.2, seed: int = 0):
        """Shuffled ``(train, test)`` split; the test part has ``round(m * test_fraction)`` rows."""
        perm = np.random.default_rng(seed).permutation(len(self))
        n_test = int(round(len(self) * test_fraction))
        te, tr = perm[:n_test], perm[n_test:]
        return (
            ClassificationData(self.z[tr], self.y[tr], self.theta_star),
            ClassificationData(self.z[te], self.y[te], self.theta_star),
        )


def synth_classification_dataset(seed: int, n_pos: int, n_neg: int, max_draws: int = 1_000_000) -> ClassificationData:
    """Balanced labels ``y = sign <X_0>`` under encoding ``V(z)`` and a hidden ``W(theta*)``.

    ``theta*`` is uniform on ``[-pi, pi]^6`` from ``seed``; inputs ``z`` are uniform on
    ``[-pi, pi]^3`` and accepted in draw order until both label counts are met.
    """
    from .experiments import build_biqc9, classifier_observable

    rng = np.random.default_rng(seed)
    theta_star = rng.uniform(-np.pi, np.pi, size=6)
    circuit = build_biqc9()
    obs = classifier_observable()
    zs, ys = [], []
    pos = neg = drawn = 0
    while pos < n_pos or neg < n_neg:
        if drawn >= max_draws:
            raise RuntimeError(f"draw cap {max_draws} reached before the label counts were met")
        batch = rng.uniform(-np.pi, np.pi, size=(1024, 3))
        drawn += batch.shape[0]
        f = expectation(circuit, np.hstack([batch, np.broadcast_to(theta_star, (1024, 6))]), obs)
        for z, v in zip(batch, f):
            if v > 0 and pos < n_pos:
                zs.append(z)
                ys.append(1)
                pos += 1
            elif v < 0 and neg < n_neg:
                zs.append(z)
                ys.append(-1)
                neg += 1
    return ClassificationData(np.array(zs).reshape(-1, 3), np.array(ys, dtype=int), theta_star)


def conditioned_surrogate(pred, obs, z) -> np.ndarray:
    """Contract the surrogate over the data coordinates.

    Returns ``A`` of shape ``(m, 3^k)`` with ``pred((z_i, theta)) = A[i] . F(theta)``
    where ``F`` is the Kronecker feature map of the ``k`` trainable coordinates.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    dz = z.shape[1]
    freqs = pred.frequencies()
    full = np.zeros(3**pred.d)
    full[freqs.full_index()] = pred.precompute_features(obs)
    full = full.reshape(3**dz, 3 ** (pred.d - dz))
    return trig.full_features(z) @ full


def _conditioned_values(A, theta):
    F = trig.full_features(np.atleast_2d(theta))  # (p, 3^k)
    return A @ F.T  # (m, p)


def offline_classifier_train(pred, obs: Observable, train: ClassificationData, cfg: OptimizerConfig, init=None) -> TrainTrace:
    """Batch gradient descent on ``L = mean 0.5 (g(z_i, theta) - y_i)^2`` through the surrogate."""
    A = conditioned_surrogate(pred, obs, train.z)
    k = pred.d - train.z.shape[1]
    theta = cfg.initial_parameters(k) if init is None else np.array(init, dtype=float)
    y = train.y.astype(float)
    a = cfg.shift
    eye = np.eye(k) * a

    def loss(th):
        g = _conditioned_values(A, th)[:, 0]
        return 0.5 * float(np.mean((g - y) ** 2)), g

    trace = TrainTrace()
    value, g = loss(theta)
    trace.record(0, theta, value)
    for it in range(1, cfg.max_iters + 1):
        vals = _conditioned_values(A, np.vstack([theta + eye, theta - eye]))
        dg = _shift_rule(vals[:, :k], vals[:, k:], a)  # (m, k)
        grad = np.mean((g - y)[:, None] * dg, axis=0)
        theta = theta - cfg.learning_rate * grad
        value, g = loss(theta)
        trace.record(it, theta, value)
    return trace


def classifier_scores(pred, obs, theta, z) -> np.ndarray:
    z = np.atleast_2d(np.asarray(z, dtype=float))
    pts = np.hstack([z, np.broadcast_to(np.asarray(theta, dtype=float), (z.shape[0], len(theta)))])
    return np.asarray(pred.predict(pts, obs))


def classifier_accuracy(pred, obs, theta, data: ClassificationData) -> float:
    """Fraction of examples with ``sign(g) == y`` (``g >= 0`` counts as +1)."""
    g = classifier_scores(pred, obs, theta, data.z)
    return float(np.mean(np.where(g >= 0, 1, -1) == data.y))
