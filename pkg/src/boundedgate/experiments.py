"""Reference circuits and seeded numerical studies that emit CSV tables.

Qubits are 0-indexed. Builders that take "physical" angles (``exp(-i x P)``)
apply the factor 2 of the ``exp(-i theta/2 P)`` rotation convention
internally, so ``x`` keeps its physical meaning.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .circuit import CNOT, ROT, Circuit, H, expectation, rot_axis
from .learner import Predictor, rms_error
from .pauli import Observable, PauliString, parse_observable
from .shadow import collect_dataset

# --- builders -------------------------------------------------------------------


def build_ghz_rotational(N: int) -> tuple[Circuit, None]:
    """GHZ preparation followed by ``RY`` on qubits ``0, N/2 - 1, N - 1`` (slots 0, 1, 2).

    Returns the circuit and the initial state (``None`` means ``|0...0>``).
    """
    if N < 2 or N % 2:
        raise ValueError("N must be even and at least 2")
    gates = [H(0)] + [CNOT(q, q + 1) for q in range(N - 1)]
    for slot, q in enumerate((0, N // 2 - 1, N - 1)):
        gates.append(ROT(rot_axis(N, "Y", q), slot=slot))
    return Circuit(N, 3, tuple(gates)), None


def ghz_z1zn_exact(x):
    """Reference closed form for the first/last-qubit ``ZZ`` correlation of the rotational GHZ state.

    ``-s1 s2 c3 - c1 s2 s3 + s1 c2 s3 + c1 c2 c3``. Batched over leading axes.
    This expression is not the circuit's mean value: it exceeds 1 in magnitude,
    for example ``sqrt(2)`` at ``(pi/4, -pi/4, pi/4)``, and the simulated
    correlator is ``cos x1 cos x3`` for every even ``N >= 4``.
    """
    x = np.asarray(x, dtype=float)
    c = np.cos(x)
    s = np.sin(x)
    c1, c2, c3 = c[..., 0], c[..., 1], c[..., 2]
    s1, s2, s3 = s[..., 0], s[..., 1], s[..., 2]
    val = -s1 * s2 * c3 - c1 * s2 * s3 + s1 * c2 * s3 + c1 * c2 * c3
    return float(val) if np.ndim(val) == 0 else val


def ghz_zz_observable(N: int) -> Observable:
    return Observable(N, ((1.0, PauliString.from_sparse(N, [(0, "Z"), (N - 1, "Z")])),))


def build_trotter_ising(N: int, d: int) -> tuple[Circuit, None]:
    """``prod_j [exp(-i x_j Z...Z) RX(pi/3)^{otimes N}]``; slot ``j`` drives step ``j``."""
    if N < 1 or d < 1:
        raise ValueError("need N >= 1 and d >= 1")
    zz = PauliString("Z" * N)
    gates = []
    for j in range(d):
        gates.append(ROT(zz, slot=j, scale=2.0))
        gates.extend(ROT(rot_axis(N, "X", q), angle=np.pi / 3) for q in range(N))
    return Circuit(N, d, tuple(gates)), None


def magnetization(N: int) -> Observable:
    """``(1/N) sum_i Z_i``."""
    return Observable(N, tuple((1.0 / N, PauliString.from_sparse(N, [(q, "Z")])) for q in range(N)))


def build_hea(n_layers: int, n_qubits: int = 3) -> Circuit:
    """Layers of per-qubit ``RY`` (one slot each) followed by a linear ``CNOT`` ladder."""
    gates = []
    for layer in range(n_layers):
        for q in range(n_qubits):
            gates.append(ROT(rot_axis(n_qubits, "Y", q), slot=layer * n_qubits + q))
        gates.extend(CNOT(q, q + 1) for q in range(n_qubits - 1))
    return Circuit(n_qubits, n_layers * n_qubits, tuple(gates))


def build_hea_3q() -> Circuit:
    return build_hea(3, 3)


def build_biqc9() -> Circuit:
    """Classifier circuit: encoding layer on slots 0-2, two trainable layers on slots 3-8."""
    return build_hea(3, 3)


def classifier_observable() -> Observable:
    return parse_observable("X0", 3)


def tfi_hamiltonian() -> Observable:
    return parse_observable("-0.1*Z0*Z1 - 0.1*Z1*Z2 + 0.5*X0 + 0.5*X1 + 0.5*X2", 3)


def ground_energy(obs: Observable) -> float:
    return float(np.linalg.eigvalsh(obs.matrix())[0])


# --- lower-bound family ---------------------------------------------------------


@dataclass(frozen=True)
class LowerBoundFamily:
    """``f_a(x) = sqrt(2 eps) B cos(sum_{j: a_j = 0} x_j)``."""

    d: int
    eps: float
    B: float
    a: tuple

    def __post_init__(self):
        if not 0 < self.eps <= 0.25:
            raise ValueError("eps must lie in (0, 1/4]")
        a = tuple(int(v) for v in self.a)
        if len(a) != self.d or set(a) - {0, 1}:
            raise ValueError("index must be a 0/1 vector of length d")
        object.__setattr__(self, "a", a)

    @property
    def mask(self) -> np.ndarray:
        return np.array(self.a) == 0

    def label(self) -> str:
        return "".join(map(str, self.a))


def lowerbound_f(fam: LowerBoundFamily, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != fam.d:
        raise ValueError("input length does not match the family dimension")
    val = np.sqrt(2 * fam.eps) * fam.B * np.cos(np.sum(x[..., fam.mask], axis=-1))
    return float(val) if np.ndim(val) == 0 else val


def lowerbound_distance_mc(fa: LowerBoundFamily, fb: LowerBoundFamily, samples: int, seed: int, chunk: int = 1 << 16) -> float:
    """Monte-Carlo ``E (f_a - f_b)^2`` over uniform inputs."""
    if (fa.d, fa.eps, fa.B) != (fb.d, fb.eps, fb.B):
        raise ValueError("families must share d, eps and B")
    rng = np.random.default_rng(seed)
    total = 0.0
    for lo in range(0, samples, chunk):
        x = rng.uniform(-np.pi, np.pi, size=(min(chunk, samples - lo), fa.d))
        total += float(np.sum((lowerbound_f(fa, x) - lowerbound_f(fb, x)) ** 2))
    return total / samples


# --- configured runs ------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "ghz"
    N: int = 8
    d: int = 3
    ns: tuple = (50, 500)
    shots: int = 1000
    lams: tuple = (1, 2, 3)
    seed: int = 1234
    n_test: int = 10
    test_seed: int = 123
    repeats: tuple = ()
    observable: str = ""
    eps: float = 0.04
    B: float = 1.0
    pairs: int = 10
    samples: int = 1_000_000
    threads: int | None = None
    out: str = ""

    def __post_init__(self):
        for key in ("N", "d", "shots", "n_test", "pairs", "samples"):
            if getattr(self, key) < 1:
                raise ValueError(f"{key} must be positive")
        if not self.ns or min(self.ns) < 1:
            raise ValueError("ns must be positive counts")
        if self.name != "lowerbound" and any(not 0 <= lam <= self.d for lam in self.lams):
            raise ValueError(f"truncations must lie in [0, {self.d}]")

    @classmethod
    def from_mapping(cls, values: dict) -> ExperimentConfig:
        """Build from string values (config file / command line)."""
        kinds = {f.name: f.type for f in fields(cls)}
        kw = {}
        for key, raw in values.items():
            if key not in kinds:
                raise KeyError(f"unknown experiment setting {key!r}")
            kind = kinds[key]
            if kind == "tuple":
                kw[key] = tuple(int(v) for v in str(raw).replace(",", " ").split())
            elif kind == "int":
                kw[key] = int(raw)
            elif kind == "float":
                kw[key] = float(raw)
            elif kind == "int | None":
                kw[key] = None if raw in ("", None) else int(raw)
            else:
                kw[key] = str(raw)
        return cls(**kw)


def _csv(header, rows, digits=12) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{v:.{digits}g}" if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _bootstrap_stderr(values, seed, n_boot=1000) -> float:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, values.size, size=(n_boot, values.size))
    return float(np.std(values[idx].mean(axis=1), ddof=1))


def _test_points(cfg, d):
    return np.random.default_rng(cfg.test_seed).uniform(-np.pi, np.pi, size=(cfg.n_test, d))


def _learning_rows(cfg, circuit, initial, obs):
    """Shared body of the GHZ and Ising runners.

    The dataset is collected once at the largest ``n``; each smaller cell uses
    the leading records, or random subsets drawn from each ``repeats`` seed.
    Returns rows ``(lambda, n, shots, rms, stderr)`` and the per-repeat rms values.
    """
    n_max = max(cfg.ns)
    ds = collect_dataset(circuit, n_max, cfg.shots, cfg.seed, initial, threads=cfg.threads)
    xt = _test_points(cfg, circuit.n_slots)
    truth = expectation(circuit, xt, obs, initial)
    rows, detail = [], {}
    for lam in cfg.lams:
        for n in sorted(cfg.ns):
            if cfg.repeats:
                vals = []
                for r in cfg.repeats:
                    idx = np.sort(np.random.default_rng(r).choice(n_max, size=n, replace=False))
                    pred = Predictor.from_shadow(ds.subset(indices=idx), lam)
                    vals.append(rms_error(pred, obs, xt, truth))
                rms = float(np.mean(vals))
                se = _bootstrap_stderr(vals, cfg.seed)
            else:
                pred = Predictor.from_shadow(ds.subset(n), lam)
                err2 = (np.asarray(pred.predict(xt, obs)) - truth) ** 2
                vals = [float(np.sqrt(np.mean(err2)))]
                rms = vals[0]
                rng = np.random.default_rng(cfg.seed)
                idx = rng.integers(0, err2.size, size=(1000, err2.size))
                se = float(np.std(np.sqrt(err2[idx].mean(axis=1)), ddof=1))
            rows.append((lam, n, cfg.shots, rms, se))
            detail[(lam, n)] = vals
    return rows, detail, ds


RESULT_HEADER = ("lambda", "n", "shots", "rms", "stderr")


@dataclass
class ExperimentResult:
    rows: list
    header: tuple = RESULT_HEADER
    extra: dict = field(default_factory=dict)  # file name -> csv text
    detail: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        return _csv(self.header, self.rows)

    def write(self, out_dir, stem):
        os.makedirs(out_dir, exist_ok=True)
        paths = [os.path.join(out_dir, f"{stem}.csv")]
        with open(paths[0], "w", encoding="ascii", newline="\n") as fh:
            fh.write(self.to_csv())
        for name, text in self.extra.items():
            paths.append(os.path.join(out_dir, name))
            with open(paths[-1], "w", encoding="ascii", newline="\n") as fh:
                fh.write(text)
        return paths


def run_ghz_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    circuit, initial = build_ghz_rotational(cfg.N)
    obs = parse_observable(cfg.observable, cfg.N) if cfg.observable else ghz_zz_observable(cfg.N)
    rows, detail, _ = _learning_rows(replace(cfg, d=3), circuit, initial, obs)
    return ExperimentResult(rows, detail=detail)


def run_ising_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Magnetization learning on the Trotterized Ising circuit.

    For ``d = 1`` a 25-point sweep over ``[-pi, pi]`` (first truncation, largest
    ``n``) is added as ``ising_sweep.csv`` with columns ``x,pred,exact``.
    """
    circuit, initial = build_trotter_ising(cfg.N, cfg.d)
    obs = parse_observable(cfg.observable, cfg.N) if cfg.observable else magnetization(cfg.N)
    rows, detail, ds = _learning_rows(cfg, circuit, initial, obs)
    extra = {}
    if cfg.d == 1:
        xs = np.linspace(-np.pi, np.pi, 25)[:, None]
        pred = Predictor.from_shadow(ds, cfg.lams[0])
        p = np.asarray(pred.predict(xs, obs))
        exact = expectation(circuit, xs, obs, initial)
        extra["ising_sweep.csv"] = _csv(("x", "pred", "exact"), [(float(a), float(b), float(c)) for a, b, c in zip(xs[:, 0], p, exact)])
    return ExperimentResult(rows, extra=extra, detail=detail)


def lowerbound_pairs(d: int, count: int, seed: int):
    """Random ordered pairs of distinct masks, excluding the all-ones mask.

    The all-ones mask gives a constant function, for which the pairwise
    distance is ``3 eps B^2`` rather than ``2 eps B^2``.
    """
    rng = np.random.default_rng(seed)
    top = 2**d - 1
    out = []
    while len(out) < count:
        a, b = rng.integers(0, top, size=2)
        if a != b:
            out.append((_bits(a, d), _bits(b, d)))
    return out


def _bits(v, d):
    return tuple(int(c) for c in format(int(v), f"0{d}b"))


LOWERBOUND_HEADER = ("d", "eps", "B", "a", "a_prime", "mc_distance", "target")


def run_lowerbound_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    rows = []
    for k, (a, b) in enumerate(lowerbound_pairs(cfg.d, cfg.pairs, cfg.seed)):
        fa = LowerBoundFamily(cfg.d, cfg.eps, cfg.B, a)
        fb = LowerBoundFamily(cfg.d, cfg.eps, cfg.B, b)
        dist = lowerbound_distance_mc(fa, fb, cfg.samples, cfg.seed + 1 + k)
        rows.append((cfg.d, float(cfg.eps), float(cfg.B), fa.label(), fb.label(), dist, 2 * cfg.eps * cfg.B**2))
    return ExperimentResult(rows, header=LOWERBOUND_HEADER)


RUNNERS = {
    "ghz": run_ghz_experiment,
    "ising": run_ising_experiment,
    "lowerbound": run_lowerbound_experiment,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    try:
        runner = RUNNERS[cfg.name]
    except KeyError:
        raise ValueError(f"unknown experiment {cfg.name!r}") from None
    return runner(cfg)
