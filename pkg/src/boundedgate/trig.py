"""Trigonometric monomials over ``{0, +1, -1}^d`` frequencies and the truncated kernel.

A frequency ``w`` selects, per coordinate, ``1`` (``w_i = 0``), ``cos x_i``
(``w_i = +1``) or ``sin x_i`` (``w_i = -1``); the monomial is the product.
Circuit mean values with single-reference rotation slots are exactly linear
combinations of these monomials.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .pauli import PauliString

_SIGN_RANK = {1: 0, -1: 1}
QUADRATURE_NODES = np.array([-2 * np.pi / 3, 0.0, 2 * np.pi / 3])
MAX_GRID_DIM = 12
COEFF_TOL = 1e-12


def cardinality(d: int, lam: int) -> int:
    """Number of frequencies with at most ``lam`` nonzero entries."""
    if not 0 <= lam <= d:
        raise ValueError(f"truncation {lam} must lie in [0, {d}]")
    return sum(comb(d, k) * 2**k for k in range(lam + 1))


def _order_key(w):
    return (
        sum(1 for v in w if v),
        tuple((i, _SIGN_RANK[v]) for i, v in enumerate(w) if v),
    )


@dataclass(frozen=True, eq=False)
class FrequencySet:
    """All frequencies with support at most ``lam``, in canonical order.

    Order: ascending support size, then lexicographic over the
    ``(position, sign)`` pairs of the nonzero entries, with ``+1`` before ``-1``.
    """

    d: int
    lam: int
    omegas: np.ndarray = field(repr=False)  # (m, d) int8

    @classmethod
    def build(cls, d: int, lam: int) -> FrequencySet:
        if not 0 <= lam <= d:
            raise ValueError(f"truncation {lam} must lie in [0, {d}]")
        rows = []
        for k in range(lam + 1):
            for pos in itertools.combinations(range(d), k):
                for signs in itertools.product((1, -1), repeat=k):
                    w = [0] * d
                    for p, s in zip(pos, signs):
                        w[p] = s
                    rows.append(tuple(w))
        rows.sort(key=_order_key)
        arr = np.array(rows, dtype=np.int8).reshape(len(rows), d)
        arr.flags.writeable = False
        return cls(d, lam, arr)

    def __len__(self):
        return self.omegas.shape[0]

    def __iter__(self):
        return (tuple(int(v) for v in w) for w in self.omegas)

    @property
    def support(self) -> np.ndarray:
        return np.count_nonzero(self.omegas, axis=1)

    @property
    def weights(self) -> np.ndarray:
        """``2^{|w|_0}`` for every frequency."""
        return 2.0 ** self.support

    def full_index(self) -> np.ndarray:
        """Position of each frequency in the ``3^d`` Kronecker feature vector."""
        codes = np.where(self.omegas == -1, 2, self.omegas).astype(np.int64)
        return codes @ (3 ** np.arange(self.d - 1, -1, -1, dtype=np.int64))


def enumerate_frequencies(d: int, lam: int) -> FrequencySet:
    return FrequencySet.build(d, lam)


def phi(omega, x) -> float:
    """Single monomial ``Phi_w(x)``."""
    omega = np.asarray(omega)
    x = np.asarray(x, dtype=float)
    if omega.shape != x.shape:
        raise ValueError("frequency and input lengths differ")
    vals = np.where(omega == 1, np.cos(x), np.where(omega == -1, np.sin(x), 1.0))
    return float(np.prod(vals))


def _coordinate_table(X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.stack([np.ones_like(X), np.cos(X), np.sin(X)], axis=-1)  # (m, d, 3)


def full_features(X) -> np.ndarray:
    """Kronecker feature map ``(m, 3^d)``: all monomials, index = base-3 code of ``w``.

    Coordinate codes are 0 for ``w_i = 0``, 1 for ``+1`` and 2 for ``-1``, the
    first coordinate being the most significant digit.
    """
    tab = _coordinate_table(X)
    m, d, _ = tab.shape
    out = np.ones((m, 1))
    for i in range(d):
        out = (out[:, :, None] * tab[:, i, None, :]).reshape(m, -1)
    return out


def monomials(X, freqs: FrequencySet) -> np.ndarray:
    """Matrix ``Phi[j, k] = Phi_{w_k}(X[j])`` of shape ``(m, |freqs|)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != freqs.d:
        raise ValueError(f"inputs have length {X.shape[1]}, expected {freqs.d}")
    m = X.shape[0]
    if 3**freqs.d <= 2 * max(freqs.lam, 1) * len(freqs):
        return full_features(X)[:, freqs.full_index()]
    tab = _coordinate_table(X)
    out = np.ones((m, len(freqs)))
    codes = np.where(freqs.omegas == -1, 2, freqs.omegas)
    for i in range(freqs.d):
        active = codes[:, i] != 0
        if np.any(active):
            out[:, active] *= tab[:, i, codes[active, i]]
    return out


def elementary_symmetric(p: np.ndarray, lam: int) -> np.ndarray:
    """``e_0 .. e_lam`` of the last axis of ``p`` by the O(d * lam) recurrence."""
    p = np.asarray(p, dtype=float)
    e = np.zeros(p.shape[:-1] + (lam + 1,))
    e[..., 0] = 1.0
    for i in range(p.shape[-1]):
        pi = p[..., i : i + 1]
        e[..., 1:] = e[..., 1:] + pi * e[..., :-1]
    return e


def kernel(x, xp, lam: int) -> np.ndarray | float:
    """Truncated trigonometric monomial kernel.

    Uses ``2 cos a cos b + 2 sin a sin b = 2 cos(a - b)``, so the kernel is the
    sum of the first ``lam + 1`` elementary symmetric polynomials of
    ``2 cos(x_i - x'_i)``. Broadcasts over leading axes of ``x`` and ``xp``.
    """
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    if x.shape[-1] != xp.shape[-1]:
        raise ValueError("kernel arguments have different lengths")
    d = x.shape[-1]
    if not 0 <= lam <= d:
        raise ValueError(f"truncation {lam} must lie in [0, {d}]")
    p = 2.0 * np.cos(x - xp)
    val = elementary_symmetric(p, lam).sum(axis=-1)
    return float(val) if np.ndim(val) == 0 else val


def kernel_naive(x, xp, lam: int) -> float:
    """Direct sum over the truncated frequency set (reference implementation)."""
    freqs = enumerate_frequencies(len(x), lam)
    a = monomials(x, freqs)[0]
    b = monomials(xp, freqs)[0]
    return float(np.sum(freqs.weights * a * b))


@dataclass
class TrigExpansion:
    """Sparse coefficient map ``w -> alpha_w``; absent keys are zero."""

    d: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for w, a in self.coeffs.items():
            w = tuple(int(v) for v in w)
            if len(w) != self.d or any(v not in (0, 1, -1) for v in w):
                raise ValueError(f"invalid frequency {w}")
            if abs(a) >= COEFF_TOL:
                clean[w] = float(a)
        self.coeffs = dict(sorted(clean.items(), key=lambda t: _order_key(t[0])))

    def __call__(self, x):
        return evaluate_expansion(self, x)

    def truncate(self, lam: int) -> TrigExpansion:
        return TrigExpansion(self.d, {w: a for w, a in self.coeffs.items() if _support(w) <= lam})

    def to_text(self) -> str:
        return "".join(f"{_wstr(w)} {a!r}\n" for w, a in self.coeffs.items())

    @classmethod
    def from_text(cls, text: str, d: int | None = None) -> TrigExpansion:
        coeffs = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            ws, a = line.split()
            w = tuple({"0": 0, "+": 1, "-": -1}[c] for c in ws)
            if d is None:
                d = len(w)
            coeffs[w] = float(a)
        if d is None:
            raise ValueError("cannot infer dimension from an empty expansion")
        return cls(d, coeffs)

    @classmethod
    def from_vector(cls, freqs: FrequencySet, values) -> TrigExpansion:
        return cls(freqs.d, dict(zip(iter(freqs), np.asarray(values, dtype=float))))

    def to_vector(self, freqs: FrequencySet) -> np.ndarray:
        return np.array([self.coeffs.get(w, 0.0) for w in freqs])


def _support(w):
    return sum(1 for v in w if v)


def _wstr(w):
    return "".join({0: "0", 1: "+", -1: "-"}[v] for v in w)


def evaluate_expansion(exp: TrigExpansion, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != exp.d:
        raise ValueError(f"input has length {x.shape[-1]}, expansion has {exp.d}")
    if not exp.coeffs:
        return 0.0 if x.ndim == 1 else np.zeros(x.shape[0])
    ws = np.array(list(exp.coeffs), dtype=np.int8)
    alphas = np.array(list(exp.coeffs.values()))
    tab = _coordinate_table(x)
    codes = np.where(ws == -1, 2, ws)
    vals = np.ones((tab.shape[0], len(alphas)))
    for i in range(exp.d):
        vals *= tab[:, i, codes[:, i]]
    out = vals @ alphas
    return float(out[0]) if x.ndim == 1 else out


def quadrature_grid(d: int) -> np.ndarray:
    """The ``3^d`` points of ``{-2pi/3, 0, 2pi/3}^d``, first coordinate slowest."""
    return np.array(list(itertools.product(QUADRATURE_NODES, repeat=d))).reshape(3**d, d)


def extract_coefficients(f, d: int, lam: int | None = None) -> TrigExpansion:
    """Exact expansion coefficients of a per-coordinate degree-1 trig polynomial.

    ``f`` maps an ``(m, d)`` array of inputs to ``m`` values. The three-point
    rule integrates per-axis degree-2 products exactly, so
    ``alpha_w = 2^{|w|_0} * mean_grid(Phi_w * f)`` holds to rounding.
    """
    if d > MAX_GRID_DIM:
        raise ValueError(f"grid extraction needs 3^d evaluations; d={d} exceeds {MAX_GRID_DIM}")
    lam = d if lam is None else lam
    freqs = enumerate_frequencies(d, lam)
    grid = quadrature_grid(d)
    vals = np.asarray(f(grid), dtype=float).reshape(-1)
    feats = monomials(grid, freqs)
    # axis-0 sum keeps the reduction order fixed
    alphas = freqs.weights * np.sum(feats * vals[:, None], axis=0) / grid.shape[0]
    return TrigExpansion.from_vector(freqs, alphas)


def gradient_constant_from_expansion(exp: TrigExpansion) -> float:
    """``E_x |grad f|^2 = sum_w |w|_0 2^{-|w|_0} alpha_w^2`` for uniform ``x``."""
    return float(sum(_support(w) * 2.0 ** (-_support(w)) * a * a for w, a in exp.coeffs.items()))


# --- Pauli transfer matrices ------------------------------------------------


def rz_ptm():
    """Constant matrices with ``PTM_RZ(x) = D0 + cos(x) D1 + sin(x) D2``.

    Entries are ``Tr(P_i RZ(x) P_j RZ(x)^dag) / 2`` over ``(I, X, Y, Z)`` with
    ``RZ(x) = exp(-i x Z / 2)``.
    """
    D0 = np.diag([1.0, 0.0, 0.0, 1.0])
    D1 = np.diag([0.0, 1.0, 1.0, 0.0])
    D2 = np.zeros((4, 4))
    D2[1, 2] = -1.0
    D2[2, 1] = 1.0
    return D0, D1, D2


def _pauli_product_phase(a: PauliString, b: PauliString):
    """``a * b = phase * c``; returns ``(phase, c)``."""
    table = {
        ("X", "Y"): (1j, "Z"), ("Y", "X"): (-1j, "Z"),
        ("Y", "Z"): (1j, "X"), ("Z", "Y"): (-1j, "X"),
        ("Z", "X"): (1j, "Y"), ("X", "Z"): (-1j, "Y"),
    }
    phase = 1.0 + 0j
    out = []
    for p, q in zip(a.axes, b.axes):
        if p == "I":
            out.append(q)
        elif q == "I":
            out.append(p)
        elif p == q:
            out.append("I")
        else:
            ph, r = table[(p, q)]
            phase *= ph
            out.append(r)
    return phase, PauliString("".join(out))


def pauli_rot_ptm_class(p_rot: PauliString, p_i: PauliString, p_k: PauliString) -> str:
    """How entry ``(i, k)`` of the PTM of ``exp(-i x/2 P_rot)`` depends on ``x``.

    Returns ``"constant"`` (entry is ``delta_ik``), ``"cosine"``, ``"sine"`` or
    ``"zero"``.
    """
    if not (p_rot.n_qubits == p_i.n_qubits == p_k.n_qubits):
        raise ValueError("Pauli strings must have equal length")
    if p_i.commutes_with(p_rot) or p_k.commutes_with(p_rot):
        return "constant"
    if p_i == p_k:
        return "cosine"
    _, rest = _pauli_product_phase(p_rot, p_i)
    _, total = _pauli_product_phase(rest, p_k)
    if not total.support:
        return "sine"
    return "zero"
