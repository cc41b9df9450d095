"""Pauli classical shadows: snapshot sampling, estimation and dataset files.

A snapshot stores, per qubit, the measured basis (0=X, 1=Y, 2=Z) and the
outcome bit. Its inverse-channel image is the product of ``3 U^dag|b><b|U - I``
over qubits, so a Pauli string is estimated by a product of per-qubit factors
(see :func:`snapshot_factor`) and never needs a dense matrix.

Random streams are counter based: record ``i`` of a dataset draws its input
from ``SeedSequence(seed, spawn_key=(i, 0))`` and all of its shots from
``SeedSequence(seed, spawn_key=(i, 1))``. Records can therefore be generated
in any order, or in parallel, with identical output.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, simulate
from .pauli import Observable

BASES = "XYZ"
FORMAT_VERSION = 1

# basis-change unitaries: measuring U psi in Z equals measuring psi in the basis
_ROTATIONS = np.array(
    [
        np.array([[1, 1], [1, -1]]) / np.sqrt(2),  # X: H
        np.array([[1, -1j], [1, 1j]]) / np.sqrt(2),  # Y: H S^dag
        np.eye(2),  # Z
    ],
    dtype=complex,
)


class DatasetFormatError(ValueError):
    """Malformed dataset file; ``record_index`` names the failing record if known."""

    def __init__(self, message: str, record_index: int | None = None):
        self.record_index = record_index
        if record_index is not None:
            message = f"record {record_index}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Snapshot:
    bases: str
    bits: str

    def __post_init__(self):
        if len(self.bases) != len(self.bits):
            raise ValueError("bases and bits must have equal length")
        if set(self.bases) - set(BASES) or set(self.bits) - set("01"):
            raise ValueError("invalid snapshot characters")


@dataclass(frozen=True, eq=False)
class ShadowRecord:
    """One training input and its ``T`` snapshots as ``(T, N)`` code arrays."""

    x: np.ndarray
    bases: np.ndarray
    bits: np.ndarray

    @property
    def shots(self) -> int:
        return self.bases.shape[0]

    def snapshots(self) -> list[Snapshot]:
        return [
            Snapshot("".join(BASES[b] for b in bb), "".join(map(str, tt)))
            for bb, tt in zip(self.bases, self.bits)
        ]


@dataclass(eq=False)
class ShadowDataset:
    n_qubits: int
    n_slots: int
    shots: int
    seed: int
    circuit_digest: str
    xs: np.ndarray  # (n, d)
    bases: np.ndarray  # (n, T, N) uint8
    bits: np.ndarray  # (n, T, N) uint8

    def __post_init__(self):
        n = self.xs.shape[0]
        if self.xs.shape != (n, self.n_slots):
            raise ValueError("input array does not match (size, slots)")
        expected = (n, self.shots, self.n_qubits)
        if self.bases.shape != expected or self.bits.shape != expected:
            raise ValueError(f"snapshot arrays must have shape {expected}")

    @property
    def size(self) -> int:
        return self.xs.shape[0]

    def __len__(self):
        return self.size

    def __getitem__(self, i) -> ShadowRecord:
        return ShadowRecord(self.xs[i], self.bases[i], self.bits[i])

    def subset(self, n: int | None = None, shots: int | None = None, indices=None) -> ShadowDataset:
        """Leading ``n`` records (or the given indices) with the first ``shots`` shots."""
        idx = slice(0, n) if indices is None else np.asarray(indices)
        t = self.shots if shots is None else shots
        if t > self.shots:
            raise ValueError("cannot take more shots than recorded")
        return ShadowDataset(
            self.n_qubits,
            self.n_slots,
            t,
            self.seed,
            self.circuit_digest,
            self.xs[idx],
            self.bases[idx, :t],
            self.bits[idx, :t],
        )

    def __eq__(self, other):
        if not isinstance(other, ShadowDataset):
            return NotImplemented
        return (
            (self.n_qubits, self.n_slots, self.shots, self.seed, self.circuit_digest)
            == (other.n_qubits, other.n_slots, other.shots, other.seed, other.circuit_digest)
            and np.array_equal(self.xs, other.xs)
            and np.array_equal(self.bases, other.bases)
            and np.array_equal(self.bits, other.bits)
        )


def record_rng(master_seed: int, record: int, stream: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(record, stream)))
    )


def _rotate_rows(psi: np.ndarray, bases: np.ndarray, first: int = 0) -> np.ndarray:
    """Apply row ``s``'s basis change ``bases[s, q - first]`` on qubits ``first..N-1``."""
    m, dim = psi.shape
    n = first + bases.shape[1]
    for q in range(first, n):
        v = psi.reshape(m, 2**q, 2, 2 ** (n - q - 1))
        u = _ROTATIONS[bases[:, q - first]][:, :, :, None, None]  # (m, 2, 2, 1, 1)
        v0 = v[:, :, 0, :]
        v1 = v[:, :, 1, :]
        out = np.empty(v.shape, dtype=complex)
        out[:, :, 0, :] = u[:, 0, 0] * v0 + u[:, 0, 1] * v1
        out[:, :, 1, :] = u[:, 1, 0] * v0 + u[:, 1, 1] * v1
        psi = out.reshape(m, dim)
    return psi


def _rotated_probs(states: np.ndarray, bases: np.ndarray) -> np.ndarray:
    """Born probabilities after rotating ``states[s]`` into product basis ``bases[s]``."""
    return np.abs(_rotate_rows(states, bases)) ** 2


def _basis_amplitudes(states: np.ndarray, n: int, k: int) -> np.ndarray:
    """Amplitudes for all ``3^k`` basis assignments of the first ``k`` qubits: ``(m, 3^k, 2^N)``."""
    m, dim = states.shape
    psi = states[:, None, :]
    for q in range(k):
        v = psi.reshape(m, psi.shape[1], 2**q, 2, 2 ** (n - q - 1))
        psi = np.einsum("cij,mkajb->mkcaib", _ROTATIONS, v).reshape(m, psi.shape[1] * 3, dim)
    return psi


def _basis_table(states: np.ndarray, n: int) -> np.ndarray:
    """Probabilities for all ``3^N`` basis assignments: shape ``(m, 3^N, 2^N)``."""
    return np.abs(_basis_amplitudes(states, n, n)) ** 2


def _table_depth(n: int, shots: int) -> int:
    """Number of leading qubits rotated once per record rather than once per shot.

    Minimizes the rough cost ``1.5 * 3^k + shots * (N - k)`` in units of one
    single-qubit rotation of a ``2^N`` vector.
    """
    return min(range(n + 1), key=lambda k: (1.5 * 3**k + shots * (n - k), -k))


def _draw_outcomes(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    cum = np.cumsum(probs, axis=-1)
    idx = np.sum(cum < u[..., None] * cum[..., -1:], axis=-1)
    return np.minimum(idx, probs.shape[-1] - 1)


def _index_bits(idx: np.ndarray, n: int) -> np.ndarray:
    shifts = np.arange(n - 1, -1, -1)
    return ((idx[..., None] >> shifts) & 1).astype(np.uint8)


def sample_snapshots(state: np.ndarray, rng: np.random.Generator, shots: int, bases=None):
    """Draw ``shots`` snapshots of one state; returns ``(bases, bits)`` arrays ``(T, N)``.

    ``bases`` may be given explicitly (shape ``(T, N)`` or ``(N,)``) to force the
    measurement bases; otherwise each qubit's basis is uniform over X, Y, Z.
    """
    state = np.asarray(state, dtype=complex)
    n = int(np.log2(state.size))
    if bases is None:
        bases = rng.integers(0, 3, size=(shots, n), dtype=np.uint8)
    else:
        bases = np.broadcast_to(np.asarray(bases, dtype=np.uint8), (shots, n)).copy()
    u = rng.random(shots)
    probs = _rotated_probs(np.broadcast_to(state, (shots, state.size)), bases)
    return bases, _index_bits(_draw_outcomes(probs, u), n)


def sample_snapshot(state: np.ndarray, rng: np.random.Generator, bases=None) -> Snapshot:
    b, t = sample_snapshots(state, rng, 1, bases)
    return Snapshot("".join(BASES[k] for k in b[0]), "".join(map(str, t[0])))


def snapshot_factor(basis: str, bit: int, axis: str) -> float:
    """``Tr((3 U^dag|b><b|U - I) P)`` for one qubit."""
    if axis == "I":
        return 1.0
    if axis != basis:
        return 0.0
    return 3.0 if int(bit) == 0 else -3.0


def _term_values(bases: np.ndarray, bits: np.ndarray, pauli) -> np.ndarray:
    """Per-shot estimator of one Pauli string; ``bases``/``bits`` are ``(..., N)``."""
    out = np.ones(bases.shape[:-1])
    for q, a in pauli.sparse():
        code = BASES.index(a)
        out = out * np.where(bases[..., q] == code, 3.0 - 6.0 * bits[..., q], 0.0)
    return out


def shadow_estimate(record: ShadowRecord, obs: Observable) -> float:
    """Mean over snapshots of the inverse-channel estimate of ``Tr(rho O)``."""
    if record.bases.shape[-1] != obs.n_qubits:
        raise ValueError("record and observable qubit counts differ")
    total = 0.0
    for c, p in obs.terms:
        total += c * float(np.mean(_term_values(record.bases, record.bits, p)))
    return total


def shadow_labels(ds: ShadowDataset, obs: Observable, chunk: int = 4096) -> np.ndarray:
    """Shadow estimates for every record of a dataset, shape ``(n,)``."""
    if ds.n_qubits != obs.n_qubits:
        raise ValueError("dataset and observable qubit counts differ")
    out = np.zeros(ds.size)
    for lo in range(0, ds.size, chunk):
        hi = min(lo + chunk, ds.size)
        b = ds.bases[lo:hi]
        t = ds.bits[lo:hi]
        acc = np.zeros(hi - lo)
        for c, p in obs.terms:
            acc += c * np.mean(_term_values(b, t, p), axis=1)
        out[lo:hi] = acc
    return out


def _collect_block(circuit, initial, lo, hi, shots, seed):
    n = circuit.n_qubits
    d = circuit.n_slots
    xs = np.empty((hi - lo, d))
    bases = np.empty((hi - lo, shots, n), dtype=np.uint8)
    u = np.empty((hi - lo, shots))
    for j, i in enumerate(range(lo, hi)):
        xs[j] = record_rng(seed, i, 0).uniform(-np.pi, np.pi, size=d)
        rng = record_rng(seed, i, 1)
        bases[j] = rng.integers(0, 3, size=(shots, n), dtype=np.uint8)
        u[j] = rng.random(shots)
    states = simulate(circuit, xs, initial)
    m = hi - lo
    k = _table_depth(n, shots)
    amps = _basis_amplitudes(states, n, k)
    code = np.zeros((m, shots), dtype=np.int64)
    for q in range(k):
        code = code * 3 + bases[:, :, q]
    rows = np.take_along_axis(amps, code[:, :, None], axis=1)  # (m, T, 2^N)
    if k < n:
        rows = _rotate_rows(rows.reshape(m * shots, 2**n), bases[:, :, k:].reshape(m * shots, n - k), k)
    probs = (np.abs(rows) ** 2).reshape(m, shots, 2**n)
    bits = _index_bits(_draw_outcomes(probs, u), n)
    return xs, bases, bits


def default_threads() -> int:
    return max(1, int(os.environ.get("BOUNDEDGATE_THREADS", "1")))


def collect_dataset(
    circuit: Circuit,
    n: int,
    shots: int,
    master_seed: int,
    initial=None,
    threads: int | None = None,
    block: int | None = None,
) -> ShadowDataset:
    """Simulate ``n`` random inputs and record ``shots`` Pauli snapshots of each."""
    if n < 1 or shots < 1:
        raise ValueError("need at least one record and one shot")
    if block is None:
        block = max(1, min(512, (1 << 21) // (shots * 2**circuit.n_qubits)))
    spans = [(lo, min(lo + block, n)) for lo in range(0, n, block)]
    threads = default_threads() if threads is None else threads

    def work(span):
        return _collect_block(circuit, initial, span[0], span[1], shots, master_seed)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(work, spans))
    else:
        parts = [work(s) for s in spans]
    xs = np.concatenate([p[0] for p in parts])
    bases = np.concatenate([p[1] for p in parts])
    bits = np.concatenate([p[2] for p in parts])
    return ShadowDataset(
        circuit.n_qubits, circuit.n_slots, shots, int(master_seed), circuit.digest(), xs, bases, bits
    )


# --- file format -----------------------------------------------------------

_HEADER_KEYS = ("qubits", "slots", "shots", "size", "seed", "circuit_digest", "version")


def _format_record(x, bases, bits) -> str:
    xs = ",".join(repr(float(v)) for v in x)
    shots = " ".join(
        "".join(BASES[k] for k in bb) + ":" + "".join("1" if t else "0" for t in tt)
        for bb, tt in zip(bases, bits)
    )
    return f"x= {xs} ; shots= {shots}"


def save_dataset(ds: ShadowDataset, path) -> None:
    header = {
        "qubits": ds.n_qubits,
        "slots": ds.n_slots,
        "shots": ds.shots,
        "size": ds.size,
        "seed": ds.seed,
        "circuit_digest": ds.circuit_digest,
        "version": FORMAT_VERSION,
    }
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(" ".join(f"{k}={v}" for k, v in header.items()) + "\n")
        for i in range(ds.size):
            fh.write(_format_record(ds.xs[i], ds.bases[i], ds.bits[i]) + "\n")


def _parse_header(line: str) -> dict:
    fields = {}
    for item in line.split():
        key, sep, val = item.partition("=")
        if not sep:
            raise DatasetFormatError(f"malformed header item {item!r}")
        fields[key] = val
    missing = [k for k in _HEADER_KEYS if k not in fields]
    if missing:
        raise DatasetFormatError(f"header is missing {', '.join(missing)}")
    try:
        out = {k: int(fields[k]) for k in _HEADER_KEYS if k != "circuit_digest"}
    except ValueError:
        raise DatasetFormatError("non-integer header value") from None
    out["circuit_digest"] = fields["circuit_digest"]
    if out["version"] != FORMAT_VERSION:
        raise DatasetFormatError(f"unsupported dataset version {out['version']}")
    if min(out["qubits"], out["shots"], out["size"]) < 1 or out["slots"] < 0:
        raise DatasetFormatError("header counts must be positive")
    return out


def load_dataset(path, circuit: Circuit | None = None) -> ShadowDataset:
    """Read a dataset file, validating it against its header.

    If ``circuit`` is given and its digest differs from the recorded one, a
    warning is issued (the data are still returned).
    """
    with open(path, encoding="ascii") as fh:
        first = fh.readline()
        if not first.strip():
            raise DatasetFormatError("missing header")
        h = _parse_header(first)
        n, d, t, nq = h["size"], h["slots"], h["shots"], h["qubits"]
        xs = np.empty((n, d))
        bases = np.empty((n, t, nq), dtype=np.uint8)
        bits = np.empty((n, t, nq), dtype=np.uint8)
        lut = np.full(256, 255, dtype=np.uint8)
        for k, ch in enumerate(BASES):
            lut[ord(ch)] = k
        count = 0
        for i, line in enumerate(fh):
            line = line.rstrip("\n")
            if not line:
                continue
            if i >= n:
                raise DatasetFormatError(f"more records than the header size {n}", i)
            xpart, sep, spart = line.partition(" ; shots= ")
            if not sep or not xpart.startswith("x= "):
                raise DatasetFormatError("malformed record line", i)
            try:
                vals = [float(v) for v in xpart[3:].split(",")] if d else []
            except ValueError:
                raise DatasetFormatError("non-numeric input value", i) from None
            if len(vals) != d:
                raise DatasetFormatError(f"expected {d} input values, got {len(vals)}", i)
            shots = spart.split()
            if len(shots) != t:
                raise DatasetFormatError(f"expected {t} shots, got {len(shots)}", i)
            joined = "".join(shots)
            raw = np.frombuffer(joined.encode("ascii"), dtype=np.uint8).reshape(t, 2 * nq + 1) if len(joined) == t * (2 * nq + 1) else None
            if raw is None or np.any(raw[:, nq] != ord(":")):
                raise DatasetFormatError("malformed shot", i)
            b = lut[raw[:, :nq]]
            o = raw[:, nq + 1 :] - ord("0")
            if np.any(b == 255) or np.any(o > 1):
                raise DatasetFormatError("invalid basis or bit character", i)
            xs[i] = vals
            bases[i] = b
            bits[i] = o
            count = i + 1
        if count != n:
            raise DatasetFormatError(f"header declares {n} records, found {count}", count)
    if circuit is not None and circuit.digest() != h["circuit_digest"]:
        warnings.warn("dataset circuit digest does not match the given circuit", stacklevel=2)
    return ShadowDataset(nq, d, t, h["seed"], h["circuit_digest"], xs, bases, bits)
