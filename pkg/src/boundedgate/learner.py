"""Kernel-mean predictors for circuit mean values, risk evaluation and sample-size planning.

The predictor is the unregularized kernel average

    h(x) = (1/n) sum_i kappa_L(x, x_i) g(x_i, O),

with ``g`` either a classical-shadow estimate (shadow backend) or an exact
mean value (exact backend). Grouping the sum by frequency gives the
equivalent feature form ``h(x) = sum_w beta_w Phi_w(x)``; both evaluation
modes are offered and agree to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import trig
from .circuit import Circuit, parameter_shift_gradient, simulate
from .pauli import Observable, expectation_exact, parse_observable
from .shadow import ShadowDataset, load_dataset, shadow_labels

DEFAULT_FEATURE_CAP = 1 << 20


class FrequencyCapError(MemoryError):
    """The truncated frequency set is larger than the configured cap."""


@dataclass(eq=False)
class Predictor:
    """Kernel-mean predictor over a fixed set of training inputs.

    Parameters
    ----------
    xs : ndarray, shape (n, d)
        Training inputs in ``[-pi, pi]^d``.
    lam : int
        Frequency truncation, ``0 <= lam <= d``.
    dataset : ShadowDataset, optional
        Shadow backend: labels come from shadow estimates of ``dataset``.
    states : ndarray, optional
        Exact backend with simulator states ``(n, 2^N)``; any observable works.
    labels, observable :
        Exact backend with fixed labels, valid only for ``observable`` (or
        for any observable if ``observable`` is None).
    mode : {"kernel", "features"}
        Evaluate by the kernel sum or by the precomputed frequency vector.
    """

    xs: np.ndarray
    lam: int
    dataset: ShadowDataset | None = None
    states: np.ndarray | None = None
    labels: np.ndarray | None = None
    observable: Observable | None = None
    mode: str = "kernel"
    feature_cap: int = DEFAULT_FEATURE_CAP
    _label_cache: dict = field(default_factory=dict, repr=False)
    _beta_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.xs = np.atleast_2d(np.asarray(self.xs, dtype=float))
        if self.xs.shape[0] == 0:
            raise ValueError("empty training set")
        if not 0 <= self.lam <= self.d:
            raise ValueError(f"truncation {self.lam} must lie in [0, {self.d}]")
        if np.any(np.abs(self.xs) > np.pi + 1e-12):
            raise ValueError("training inputs must lie in [-pi, pi]^d")
        if self.mode not in ("kernel", "features"):
            raise ValueError(f"unknown evaluation mode {self.mode!r}")
        sources = sum(v is not None for v in (self.dataset, self.states, self.labels))
        if sources != 1:
            raise ValueError("give exactly one of dataset, states or labels")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=float).reshape(-1)
            if self.labels.shape[0] != self.n:
                raise ValueError("labels and inputs differ in length")

    # constructors

    @classmethod
    def from_shadow(cls, ds: ShadowDataset, lam: int, **kw) -> Predictor:
        return cls(ds.xs, lam, dataset=ds, **kw)

    @classmethod
    def from_labels(cls, xs, labels, lam: int, observable: Observable | None = None, **kw) -> Predictor:
        return cls(xs, lam, labels=labels, observable=observable, **kw)

    @classmethod
    def from_simulator(cls, circuit: Circuit, xs, lam: int, initial=None, **kw) -> Predictor:
        return cls(xs, lam, states=simulate(circuit, np.atleast_2d(xs), initial), **kw)

    # basic properties

    @property
    def n(self) -> int:
        return self.xs.shape[0]

    @property
    def d(self) -> int:
        return self.xs.shape[1]

    @property
    def backend(self) -> str:
        return "shadow" if self.dataset is not None else "exact"

    @property
    def n_qubits(self) -> int | None:
        if self.dataset is not None:
            return self.dataset.n_qubits
        if self.states is not None:
            return int(np.log2(self.states.shape[1]))
        return None if self.observable is None else self.observable.n_qubits

    def with_mode(self, mode: str) -> Predictor:
        """Same training data (sharing label caches) with another evaluation mode."""
        out = Predictor(
            self.xs, self.lam, self.dataset, self.states, self.labels, self.observable, mode, self.feature_cap
        )
        out._label_cache = self._label_cache
        out._beta_cache = self._beta_cache
        return out

    # labels and features

    def training_labels(self, obs: Observable | None = None) -> np.ndarray:
        """``g(x_i, obs)`` for every training input, cached per observable."""
        if self.labels is not None:
            if obs is not None and self.observable is not None and str(obs) != str(self.observable):
                raise ValueError("fixed-label predictor was built for a different observable")
            return self.labels
        if obs is None:
            raise ValueError("an observable is required for this backend")
        if obs.n_qubits != self.n_qubits:
            raise ValueError(
                f"observable acts on {obs.n_qubits} qubits, training data has {self.n_qubits}"
            )
        key = str(obs)
        if key not in self._label_cache:
            if self.dataset is not None:
                self._label_cache[key] = shadow_labels(self.dataset, obs)
            else:
                self._label_cache[key] = np.asarray(expectation_exact(self.states, obs))
        return self._label_cache[key]

    def frequencies(self) -> trig.FrequencySet:
        size = trig.cardinality(self.d, self.lam)
        if size > self.feature_cap:
            raise FrequencyCapError(
                f"|C(lambda={self.lam})| = {size} exceeds the feature cap {self.feature_cap}"
            )
        return trig.enumerate_frequencies(self.d, self.lam)

    def precompute_features(self, obs: Observable | None = None, chunk: int | None = None) -> np.ndarray:
        """``beta_w = 2^{|w|} (1/n) sum_i Phi_w(x_i) g_i`` over the truncated set, cached."""
        key = None if obs is None else str(obs)
        if key in self._beta_cache:
            return self._beta_cache[key]
        freqs = self.frequencies()
        g = self.training_labels(obs)
        if chunk is None:
            chunk = max(1, (1 << 22) // max(len(freqs), 1))
        acc = np.zeros(len(freqs))
        for lo in range(0, self.n, chunk):
            feats = trig.monomials(self.xs[lo : lo + chunk], freqs)
            acc += np.sum(feats * g[lo : lo + chunk, None], axis=0)
        beta = freqs.weights * acc / self.n
        beta.flags.writeable = False
        self._beta_cache[key] = beta
        return beta

    def expansion(self, obs: Observable | None = None) -> trig.TrigExpansion:
        return trig.TrigExpansion.from_vector(self.frequencies(), self.precompute_features(obs))

    # prediction

    def predict(self, x, obs: Observable | None = None, chunk: int = 256):
        """Prediction at one input ``(d,)`` or a batch ``(m, d)``."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        xb = np.atleast_2d(x)
        if xb.shape[1] != self.d:
            raise ValueError(f"query has length {xb.shape[1]}, predictor expects {self.d}")
        if self.mode == "features":
            beta = self.precompute_features(obs)
            freqs = self.frequencies()
            out = np.empty(xb.shape[0])
            for lo in range(0, xb.shape[0], chunk):
                out[lo : lo + chunk] = np.sum(trig.monomials(xb[lo : lo + chunk], freqs) * beta, axis=1)
        else:
            g = self.training_labels(obs)
            out = np.empty(xb.shape[0])
            step = max(1, (1 << 21) // (self.n * self.d))
            for lo in range(0, xb.shape[0], step):
                K = trig.kernel(xb[lo : lo + step, None, :], self.xs[None, :, :], self.lam)
                out[lo : lo + step] = np.sum(K * g, axis=1) / self.n
        return float(out[0]) if single else out

    # persistence

    def save(self, path, obs: Observable | None = None, dataset_path: str | None = None) -> None:
        """Write a predictor file.

        With ``dataset_path`` the file references that dataset and stores the
        cached labels; otherwise it stores the frequency vector ``beta`` for
        ``obs`` in the expansion text format.
        """
        lines = [
            f"backend={self.backend} lambda={self.lam} d={self.d} n={self.n}",
            f"observable={'' if obs is None else str(obs)}",
        ]
        if dataset_path is not None:
            lines.append(f"dataset={dataset_path}")
            g = self.training_labels(obs)
            lines.append("labels=" + ",".join(repr(float(v)) for v in g))
        else:
            lines.append("expansion")
            lines.append(self.expansion(obs).to_text().rstrip("\n"))
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class ExpansionPredictor:
    """Predictor reloaded from a stored frequency vector; evaluation only."""

    lam: int
    expansion: trig.TrigExpansion
    observable: Observable | None = None

    @property
    def d(self) -> int:
        return self.expansion.d

    def predict(self, x, obs: Observable | None = None):
        return trig.evaluate_expansion(self.expansion, x)


def load_predictor(path):
    """Inverse of :meth:`Predictor.save`."""
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    head = dict(item.split("=", 1) for item in lines[0].split())
    lam, d = int(head["lambda"]), int(head["d"])
    obs_text = lines[1].partition("=")[2]
    if lines[2].startswith("dataset="):
        ds = load_dataset(lines[2].partition("=")[2])
        pred = Predictor.from_shadow(ds, lam)
        g = np.array([float(v) for v in lines[3].partition("=")[2].split(",")])
        if obs_text:
            pred._label_cache[obs_text] = g
        return pred
    obs = parse_observable(obs_text, _max_qubit(obs_text)) if obs_text else None
    return ExpansionPredictor(lam, trig.TrigExpansion.from_text("\n".join(lines[3:]), d), obs)


def _max_qubit(text: str) -> int:
    import re

    qs = [int(m) for m in re.findall(r"[XYZ]([0-9]+)", text)]
    return max(qs, default=0) + 1


# --- evaluation ---------------------------------------------------------------


def rms_error(pred, obs: Observable | None, xs, truth) -> float:
    """Root mean squared difference between predictions and ``truth`` on ``xs``."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    truth = np.asarray(truth, dtype=float).reshape(-1)
    if truth.size == 0:
        raise ValueError("empty test set")
    err = np.asarray(pred.predict(xs, obs)).reshape(-1) - truth
    return float(np.sqrt(np.mean(err**2)))


def estimate_gradient_constant(
    circuit: Circuit, initial, obs: Observable, n_samples: int, seed: int
) -> tuple[float, float]:
    """Monte-Carlo ``E_x |grad f(x)|^2`` over uniform inputs, with its standard error."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-np.pi, np.pi, size=(n_samples, circuit.n_slots))
    sq = np.zeros(n_samples)
    step = max(1, (1 << 20) // (2**circuit.n_qubits * max(circuit.n_slots, 1)))
    for lo in range(0, n_samples, step):
        g = parameter_shift_gradient(circuit, xs[lo : lo + step], obs, initial=initial)
        sq[lo : lo + step] = np.sum(g**2, axis=1)
    stderr = float(np.std(sq, ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else float("inf")
    return float(np.mean(sq)), stderr


# --- sample-size planning -------------------------------------------------------


def _ceil(v: float) -> int:
    # values within rounding distance of an integer are not pushed up by one
    r = round(v)
    if abs(v - r) <= 1e-12 * max(1.0, abs(v)):
        return max(1, int(r))
    return max(1, math.ceil(v))


def _check_eps_delta(eps, delta):
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")


def sample_size(lam: int, B: float, K: int, eps: float, delta: float, d: int) -> int:
    """``ceil(|C(lam)| 2 B^2 9^K / eps * ln(2 |C(lam)| / delta))``."""
    _check_eps_delta(eps, delta)
    c = trig.cardinality(d, lam)
    return _ceil(c * 2.0 * B * B * 9.0**K / eps * math.log(2.0 * c / delta))


def exact_label_sample_size(d: int, B: float, eps: float, delta: float) -> int:
    """Exact-label variant: ``ceil(3^d B^2 ln(2 3^d / delta) / (2 eps))``."""
    _check_eps_delta(eps, delta)
    m = 3.0**d
    return _ceil(m * B * B * math.log(2.0 * m / delta) / (2.0 * eps))


def lower_bound_sample_size(d: int, eps: float, T: int, c1: float) -> float:
    """Information-theoretic lower bound ``(1 - eps)(c1 d - ln 2) / (eps T)``.

    ``c1`` is an unspecified constant in ``(0, 1)``; callers must choose it.
    """
    if not 0 < c1 < 1:
        raise ValueError("c1 must lie in (0, 1)")
    if not 0 < eps < 1 or T < 1:
        raise ValueError("need 0 < eps < 1 and T >= 1")
    return (1.0 - eps) * (c1 * d - math.log(2.0)) / (eps * T)


def truncation_for(C: float, eps: float, d: int) -> int:
    """``max(1, ceil(4 C / eps))`` clipped to ``d``."""
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    return int(min(d, max(1, math.ceil(4.0 * C / eps - 1e-12))))


@dataclass(frozen=True)
class SampleSizePlan:
    eps: float
    delta: float
    B: float
    K: int
    C: float
    d: int
    lam: int
    n_frequencies: int
    n: int
    n_exact: int

    @classmethod
    def build(cls, eps, delta, B, K, C, d) -> SampleSizePlan:
        lam = truncation_for(C, eps, d)
        return cls(
            eps, delta, B, K, C, d, lam,
            trig.cardinality(d, lam),
            sample_size(lam, B, K, eps, delta, d),
            exact_label_sample_size(d, B, eps, delta),
        )
