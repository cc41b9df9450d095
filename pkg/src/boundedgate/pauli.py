"""Pauli strings, weighted observables and exact expectation values.

Observables are written as text such as ``"0.5*X0 + 0.5*X1 - 0.25*Z0*Z1"``.
Qubit 0 is the most significant bit of a computational-basis index, i.e. a
state vector reshaped to ``(2,) * n`` has qubit ``q`` on axis ``q``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

AXES = "IXYZ"


class ObservableParseError(ValueError):
    """Raised for malformed observable text; ``position`` is a 0-based offset."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


@dataclass(frozen=True, order=True)
class PauliString:
    """Tensor product of single-qubit Paulis, one character per qubit."""

    axes: str

    def __post_init__(self):
        if not self.axes or any(a not in AXES for a in self.axes):
            raise ValueError(f"invalid Pauli string {self.axes!r}")

    @classmethod
    def from_sparse(cls, n_qubits: int, factors) -> PauliString:
        """Build from ``{qubit: axis}`` or an iterable of ``(qubit, axis)``."""
        axes = ["I"] * n_qubits
        items = factors.items() if isinstance(factors, dict) else factors
        for q, a in items:
            if not 0 <= q < n_qubits:
                raise ValueError(f"qubit {q} out of range for {n_qubits} qubits")
            if axes[q] != "I":
                raise ValueError(f"duplicate axis on qubit {q}")
            axes[q] = a
        return cls("".join(axes))

    @property
    def n_qubits(self) -> int:
        return len(self.axes)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, a in enumerate(self.axes) if a != "I")

    @property
    def locality(self) -> int:
        return len(self.support)

    def sparse(self) -> tuple[tuple[int, str], ...]:
        return tuple((q, self.axes[q]) for q in self.support)

    def commutes_with(self, other: PauliString) -> bool:
        clashes = sum(
            1 for a, b in zip(self.axes, other.axes) if a != "I" and b != "I" and a != b
        )
        return clashes % 2 == 0

    def matrix(self) -> np.ndarray:
        """Dense ``2^N x 2^N`` matrix; only meant for small oracles."""
        out = np.ones((1, 1), dtype=complex)
        for a in self.axes:
            out = np.kron(out, _SINGLE[a])
        return out

    def __str__(self):
        if not self.support:
            return "I"
        return "*".join(f"{a}{q}" for q, a in self.sparse())


_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@lru_cache(maxsize=4096)
def pauli_action(axes: str) -> tuple[np.ndarray, np.ndarray]:
    """Index permutation and phases such that ``(P psi)[b] = phase[b] * psi[perm[b]]``."""
    n = len(axes)
    idx = np.arange(2**n)
    flip = 0
    phase = np.ones(2**n, dtype=complex)
    for q, a in enumerate(axes):
        bit = (idx >> (n - 1 - q)) & 1
        if a in "XY":
            flip |= 1 << (n - 1 - q)
        if a == "Z":
            phase *= 1 - 2 * bit
        elif a == "Y":
            # Y|0> = i|1>, Y|1> = -i|0>
            phase *= 1j * (2 * bit - 1)
    perm = idx ^ flip
    perm.flags.writeable = False
    phase.flags.writeable = False
    return perm, phase


def apply_pauli(state: np.ndarray, pauli: PauliString) -> np.ndarray:
    """Return ``P|psi>`` for a state (or a batch of states along leading axes)."""
    perm, phase = pauli_action(pauli.axes)
    if state.shape[-1] != perm.size:
        raise ValueError(
            f"state dimension {state.shape[-1]} does not match {pauli.n_qubits} qubits"
        )
    return phase * state[..., perm]


def pauli_expectation(state: np.ndarray, pauli: PauliString) -> np.ndarray | float:
    perm, phase = pauli_action(pauli.axes)
    if state.shape[-1] != perm.size:
        raise ValueError(
            f"state dimension {state.shape[-1]} does not match {pauli.n_qubits} qubits"
        )
    val = np.sum(np.conj(state) * phase * state[..., perm], axis=-1).real
    return float(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True)
class Observable:
    """A real linear combination of Pauli strings, in canonical merged form."""

    n_qubits: int
    terms: tuple[tuple[float, PauliString], ...]

    def __post_init__(self):
        merged: dict[PauliString, float] = {}
        for c, p in self.terms:
            if not isinstance(p, PauliString):
                p = PauliString(p)
            if p.n_qubits != self.n_qubits:
                raise ValueError(
                    f"term {p.axes!r} has {p.n_qubits} qubits, expected {self.n_qubits}"
                )
            merged[p] = merged.get(p, 0.0) + float(c)
        terms = tuple(
            (c, p) for p, c in sorted(merged.items(), key=lambda t: _term_key(t[0])) if c != 0.0
        )
        if not terms:
            raise ValueError("empty observable")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_terms(cls, n_qubits: int, terms) -> Observable:
        return cls(n_qubits, tuple(terms))

    @property
    def norm_bound(self) -> float:
        """B: the sum of absolute coefficients."""
        return float(sum(abs(c) for c, _ in self.terms))

    @property
    def locality(self) -> int:
        """K: the largest term locality."""
        return max(p.locality for _, p in self.terms)

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    def __add__(self, other: Observable) -> Observable:
        if not isinstance(other, Observable):
            return NotImplemented
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit count mismatch")
        return Observable(self.n_qubits, self.terms + other.terms)

    def __sub__(self, other: Observable) -> Observable:
        return self + (-1.0) * other

    def __mul__(self, scale: float) -> Observable:
        return Observable(self.n_qubits, tuple((scale * c, p) for c, p in self.terms))

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def matrix(self) -> np.ndarray:
        return sum(c * p.matrix() for c, p in self.terms)

    def __str__(self):
        return serialize_observable(self)


def _term_key(p: PauliString):
    sp = p.sparse()
    return tuple(a for _, a in sp), tuple(q for q, _ in sp)


_NUMBER = r"[0-9]+(?:\.[0-9]*)?(?:[eE][+-]?[0-9]+)?|\.[0-9]+(?:[eE][+-]?[0-9]+)?"
_TOKEN = re.compile(rf"\s*(?:(?P<num>{_NUMBER})|(?P<pauli>[XYZ][0-9]+)|(?P<ident>I)|(?P<op>[-+*]))")


def _tokenize(text: str):
    pos = 0
    tokens = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            bad = len(text) - len(text[pos:].lstrip())
            raise ObservableParseError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    return tokens


def parse_observable(text: str, n_qubits: int) -> Observable:
    """Parse ``term (+|- term)*`` with ``term = [coeff *] P q (* P q)*``.

    A term may also be ``coeff * I`` for an explicit identity contribution.
    A term with no Pauli factor at all is rejected.
    """
    tokens = _tokenize(text)
    if not tokens:
        raise ObservableParseError("empty observable", 0)
    terms = []
    i = 0
    sign = 1.0
    if tokens[0][0] == "op" and tokens[0][1] in "+-":
        sign = -1.0 if tokens[0][1] == "-" else 1.0
        i = 1
    while True:
        coeff = 1.0
        if i >= len(tokens):
            raise ObservableParseError("expected a term", len(text))
        kind, val, pos = tokens[i]
        if kind == "num":
            coeff = float(val)
            i += 1
            if i >= len(tokens) or tokens[i][1] != "*":
                at = tokens[i][2] if i < len(tokens) else len(text)
                raise ObservableParseError("expected '*' after coefficient", at)
            i += 1
        factors = []
        identity = False
        while True:
            if i >= len(tokens):
                raise ObservableParseError("expected a Pauli factor", len(text))
            kind, val, pos = tokens[i]
            if kind == "pauli":
                q = int(val[1:])
                if q >= n_qubits:
                    raise ObservableParseError(
                        f"qubit index {q} out of range for {n_qubits} qubits", pos
                    )
                if any(fq == q for fq, _ in factors):
                    raise ObservableParseError(f"duplicate axis on qubit {q}", pos)
                factors.append((q, val[0]))
            elif kind == "ident" and not factors and not identity:
                identity = True
            else:
                raise ObservableParseError(f"expected a Pauli factor, got {val!r}", pos)
            i += 1
            if i < len(tokens) and tokens[i][1] == "*" and not identity:
                i += 1
                continue
            break
        terms.append((sign * coeff, PauliString.from_sparse(n_qubits, factors)))
        if i == len(tokens):
            break
        kind, val, pos = tokens[i]
        if kind != "op" or val not in "+-":
            raise ObservableParseError(f"expected '+' or '-', got {val!r}", pos)
        sign = -1.0 if val == "-" else 1.0
        i += 1
    try:
        return Observable(n_qubits, tuple(terms))
    except ValueError as exc:
        raise ObservableParseError(str(exc), 0) from None


def serialize_observable(obs: Observable) -> str:
    parts = []
    for k, (c, p) in enumerate(obs.terms):
        body = f"{abs(c)!r}*{p}"
        if k == 0:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append(("- " if c < 0 else "+ ") + body)
    return " ".join(parts)


def expectation_exact(state: np.ndarray, obs: Observable) -> np.ndarray | float:
    """Sum of ``c_i <psi|P_i|psi>`` over the observable's terms.

    ``state`` may carry leading batch axes; the result then has the batch shape.
    """
    state = np.asarray(state)
    if state.shape[-1] != 2**obs.n_qubits:
        raise ValueError(
            f"state dimension {state.shape[-1]} does not match {obs.n_qubits} qubits"
        )
    total = 0.0
    for c, p in obs.terms:
        total = total + c * pauli_expectation(state, p)
    return total
