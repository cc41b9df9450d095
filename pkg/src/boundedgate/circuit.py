"""Parameterized Clifford + Pauli-rotation circuits and dense state-vector simulation.

Rotations follow ``ROT(P, theta) = exp(-i theta/2 P)``. A rotation angle is
either a constant or ``scale * x[slot]`` for an input vector ``x`` of length
``n_slots``. Simulation is batched: ``x`` of shape ``(d,)`` gives one state,
``(m, d)`` gives ``m`` states.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, field

import numpy as np

from .pauli import Observable, PauliString, apply_pauli, expectation_exact

_SQRT_HALF = 1.0 / np.sqrt(2.0)


class CircuitFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...] = ()
    pauli: PauliString | None = None
    slot: int | None = None
    angle: float | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("H", "S", "CNOT", "ROT"):
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind == "ROT":
            if self.pauli is None:
                raise ValueError("ROT needs a Pauli string")
            if (self.slot is None) == (self.angle is None):
                raise ValueError("ROT needs exactly one of slot or angle")
            object.__setattr__(self, "qubits", self.pauli.support)
        expected = {"H": 1, "S": 1, "CNOT": 2}.get(self.kind)
        if expected is not None and len(self.qubits) != expected:
            raise ValueError(f"{self.kind} acts on {expected} qubit(s)")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated qubit in {self.kind} gate")


def H(q):
    return Gate("H", (q,))


def S(q):
    return Gate("S", (q,))


def CNOT(control, target):
    return Gate("CNOT", (control, target))


def ROT(pauli: PauliString, *, slot: int | None = None, angle: float | None = None, scale: float = 1.0):
    return Gate("ROT", pauli=pauli, slot=slot, angle=angle, scale=scale)


def rot_axis(n_qubits: int, axis: str, *qubits: int) -> PauliString:
    """Pauli string with the same ``axis`` on every listed qubit."""
    return PauliString.from_sparse(n_qubits, [(q, axis) for q in qubits])


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    n_slots: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        used = set()
        for g in self.gates:
            if any(not 0 <= q < self.n_qubits for q in g.qubits):
                raise ValueError(f"qubit index out of range in {g}")
            if g.pauli is not None and g.pauli.n_qubits != self.n_qubits:
                raise ValueError("rotation Pauli string length does not match the circuit")
            if g.slot is not None:
                if not 0 <= g.slot < self.n_slots:
                    raise ValueError(f"slot {g.slot} out of range for {self.n_slots} slots")
                used.add(g.slot)
        unused = sorted(set(range(self.n_slots)) - used)
        if unused:
            warnings.warn(f"circuit slots {unused} drive no gate", stacklevel=3)

    @property
    def n_gates(self) -> int:
        return len(self.gates)

    def slot_references(self, slot: int) -> list[Gate]:
        return [g for g in self.gates if g.slot == slot]

    def to_text(self) -> str:
        return serialize_circuit(self)

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()


def zero_state(n_qubits: int) -> np.ndarray:
    psi = np.zeros(2**n_qubits, dtype=complex)
    psi[0] = 1.0
    return psi


def _wrap(x):
    # only touch out-of-range entries so in-range inputs stay bit-exact
    x = np.asarray(x, dtype=float)
    out = np.where(np.abs(x) > np.pi, np.remainder(x + np.pi, 2 * np.pi) - np.pi, x)
    return out


def _apply_1q(psi, n, q, kind):
    v = psi.reshape(psi.shape[0], 2**q, 2, 2 ** (n - q - 1))
    if kind == "H":
        a0 = v[:, :, 0, :]
        a1 = v[:, :, 1, :]
        out = np.empty_like(v)
        out[:, :, 0, :] = (a0 + a1) * _SQRT_HALF
        out[:, :, 1, :] = (a0 - a1) * _SQRT_HALF
        return out.reshape(psi.shape)
    out = v.copy()
    out[:, :, 1, :] *= 1j
    return out.reshape(psi.shape)


def _apply_cnot(psi, n, c, t):
    idx = np.arange(2**n)
    cbit = (idx >> (n - 1 - c)) & 1
    perm = np.where(cbit == 1, idx ^ (1 << (n - 1 - t)), idx)
    return psi[:, perm]


def simulate(circuit: Circuit, x, initial: np.ndarray | None = None) -> np.ndarray:
    """Return ``U(x)|initial>`` (``|0...0>`` by default).

    ``x`` may be a single input of length ``n_slots`` or a batch ``(m, n_slots)``;
    the result has shape ``(2**N,)`` or ``(m, 2**N)`` accordingly.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    if xb.shape[1] != circuit.n_slots:
        raise ValueError(f"input has length {xb.shape[1]}, circuit has {circuit.n_slots} slots")
    xb = _wrap(xb)
    n = circuit.n_qubits
    if initial is None:
        initial = zero_state(n)
    initial = np.asarray(initial, dtype=complex)
    if initial.shape[-1] != 2**n:
        raise ValueError("initial state dimension does not match the circuit")
    psi = np.broadcast_to(initial, (xb.shape[0], 2**n)).copy()
    for g in circuit.gates:
        if g.kind in ("H", "S"):
            psi = _apply_1q(psi, n, g.qubits[0], g.kind)
        elif g.kind == "CNOT":
            psi = _apply_cnot(psi, n, *g.qubits)
        else:
            theta = g.angle if g.slot is None else g.scale * xb[:, g.slot]
            half = np.asarray(theta) / 2.0
            c = np.cos(half)
            s = np.sin(half)
            if np.ndim(half):
                c = c[:, None]
                s = s[:, None]
            psi = c * psi - 1j * s * apply_pauli(psi, g.pauli)
    return psi[0] if single else psi


def expectation(circuit: Circuit, x, obs: Observable, initial=None):
    """``Tr(rho(x) O)`` for one input or a batch of inputs."""
    if obs.n_qubits != circuit.n_qubits:
        raise ValueError("observable and circuit qubit counts differ")
    return expectation_exact(simulate(circuit, x, initial), obs)


def parameter_shift_grad(circuit: Circuit, x, obs: Observable, k: int, alpha: float = np.pi / 2, initial=None) -> float:
    """Derivative of the mean value along input slot ``k`` by the shift rule.

    The slot must drive exactly one rotation. For a rotation angle ``scale * x_k``
    the shift in input space is ``alpha / scale`` and the rule is rescaled, which
    keeps it exact.
    """
    if np.isclose(np.sin(alpha), 0.0, atol=1e-12):
        raise ValueError("shift must not be a multiple of pi")
    refs = circuit.slot_references(k)
    if len(refs) != 1:
        raise ValueError(f"slot {k} drives {len(refs)} gates; exactly one is required")
    scale = refs[0].scale
    x = np.asarray(x, dtype=float)
    shift = np.zeros(circuit.n_slots)
    shift[k] = alpha / scale
    vals = expectation(circuit, np.stack([x + shift, x - shift]), obs, initial)
    return float(scale * (vals[0] - vals[1]) / (2.0 * np.sin(alpha)))


def parameter_shift_gradient(circuit: Circuit, x, obs: Observable, alpha: float = np.pi / 2, initial=None) -> np.ndarray:
    """Full gradient over all slots, batched over ``x`` of shape ``(m, d)`` or ``(d,)``."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = np.atleast_2d(x)
    m, d = xb.shape
    if np.isclose(np.sin(alpha), 0.0, atol=1e-12):
        raise ValueError("shift must not be a multiple of pi")
    grads = np.zeros((m, d))
    for k in range(d):
        refs = circuit.slot_references(k)
        if not refs:
            continue
        if len(refs) > 1:
            raise ValueError(f"slot {k} drives {len(refs)} gates; exactly one is required")
        scale = refs[0].scale
        shifted = np.concatenate([xb, xb])
        shifted[:m, k] += alpha / scale
        shifted[m:, k] -= alpha / scale
        vals = expectation(circuit, shifted, obs, initial)
        grads[:, k] = scale * (vals[:m] - vals[m:]) / (2.0 * np.sin(alpha))
    return grads[0] if single else grads


# --- text format -----------------------------------------------------------


def _fmt_pauli(p: PauliString) -> str:
    return "*".join(f"{a}{q}" for q, a in p.sparse())


def serialize_circuit(circuit: Circuit) -> str:
    lines = [f"qubits {circuit.n_qubits} slots {circuit.n_slots}"]
    for g in circuit.gates:
        if g.kind == "ROT":
            if g.slot is not None:
                src = f"slot:{g.slot}" if g.scale == 1.0 else f"slot:{g.slot}*{g.scale!r}"
            else:
                src = f"const:{g.angle!r}"
            lines.append(f"ROT {_fmt_pauli(g.pauli)} {src}")
        else:
            lines.append(" ".join([g.kind, *map(str, g.qubits)]))
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> Circuit:
    """Parse the line-oriented circuit format (see ``serialize_circuit``)."""
    header = None
    gates = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 4 or parts[0] != "qubits" or parts[2] != "slots":
                raise CircuitFormatError("expected header 'qubits N slots d'", lineno)
            try:
                header = (int(parts[1]), int(parts[3]))
            except ValueError:
                raise CircuitFormatError("non-integer header value", lineno) from None
            continue
        n = header[0]
        try:
            gates.append(_parse_gate(parts, n))
        except (ValueError, IndexError) as exc:
            raise CircuitFormatError(str(exc) or "malformed gate", lineno) from None
    if header is None:
        raise CircuitFormatError("missing header")
    try:
        return Circuit(header[0], header[1], tuple(gates))
    except ValueError as exc:
        raise CircuitFormatError(str(exc)) from None


def _parse_gate(parts, n):
    kind = parts[0]
    if kind in ("H", "S"):
        if len(parts) != 2:
            raise ValueError(f"{kind} takes one qubit")
        return Gate(kind, (int(parts[1]),))
    if kind == "CNOT":
        if len(parts) != 3:
            raise ValueError("CNOT takes two qubits")
        return Gate(kind, (int(parts[1]), int(parts[2])))
    if kind == "ROT":
        if len(parts) != 3:
            raise ValueError("ROT takes a Pauli string and an angle source")
        factors = []
        for f in parts[1].split("*"):
            if len(f) < 2 or f[0] not in "XYZ":
                raise ValueError(f"bad Pauli factor {f!r}")
            factors.append((int(f[1:]), f[0]))
        pauli = PauliString.from_sparse(n, factors)
        src, _, val = parts[2].partition(":")
        if src == "slot":
            slot, _, scale = val.partition("*")
            return ROT(pauli, slot=int(slot), scale=float(scale) if scale else 1.0)
        if src == "const":
            return ROT(pauli, angle=float(val))
        raise ValueError(f"bad angle source {parts[2]!r}")
    raise ValueError(f"unknown gate {kind!r}")
