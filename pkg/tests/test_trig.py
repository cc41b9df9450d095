import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boundedgate import trig
from boundedgate.pauli import PauliString
from boundedgate.trig import (
    TrigExpansion,
    cardinality,
    enumerate_frequencies,
    evaluate_expansion,
    extract_coefficients,
    kernel,
    kernel_naive,
    phi,
    pauli_rot_ptm_class,
    rz_ptm,
)


@pytest.mark.parametrize(
    "omega, x, expected",
    [
        ((0, 0, 0), (0.3, -1.2, 2.0), 1.0),
        ((1, 0, 0), (0.0, 0.5, 0.7), 1.0),
        ((-1, 1), (np.pi / 2, 0.0), 1.0),
        ((1, -1), (0.4, 1.1), np.cos(0.4) * np.sin(1.1)),
    ],
)
def test_phi(omega, x, expected):
    assert phi(omega, x) == pytest.approx(expected, abs=1e-15)


def test_phi_length_mismatch():
    with pytest.raises(ValueError):
        phi((1, 0), (0.1, 0.2, 0.3))


@pytest.mark.parametrize(
    "d, lam, size",
    [(3, 1, 7), (3, 2, 19), (3, 3, 27), (30, 1, 61), (30, 2, 1801), (30, 3, 34281), (30, 4, 472761), (5, 0, 1)],
)
def test_cardinality(d, lam, size):
    assert cardinality(d, lam) == size


@given(st.integers(1, 40).flatmap(lambda d: st.tuples(st.just(d), st.integers(1, d))))
def test_cardinality_recurrence(args):
    d, lam = args
    assert cardinality(d, lam) == cardinality(d, lam - 1) + comb(d, lam) * 2**lam


def test_cardinality_rejects_large_truncation():
    with pytest.raises(ValueError):
        cardinality(3, 4)
    with pytest.raises(ValueError):
        enumerate_frequencies(3, 4)


@pytest.mark.parametrize("d, lam", [(1, 1), (3, 2), (4, 4), (6, 3)])
def test_enumeration_is_complete_and_ordered(d, lam):
    freqs = list(enumerate_frequencies(d, lam))
    assert len(freqs) == len(set(freqs)) == cardinality(d, lam)
    brute = {w for w in itertools.product((0, 1, -1), repeat=d) if sum(map(bool, w)) <= lam}
    assert set(freqs) == brute
    supports = [sum(map(bool, w)) for w in freqs]
    assert supports == sorted(supports)


def test_enumeration_order_example():
    assert list(enumerate_frequencies(2, 2)) == [
        (0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1),
    ]


def test_monomial_paths_agree(rng):
    x = rng.uniform(-np.pi, np.pi, (5, 4))
    for lam in range(5):
        freqs = enumerate_frequencies(4, lam)
        want = np.array([[phi(w, xi) for w in freqs] for xi in x])
        assert np.allclose(trig.monomials(x, freqs), want, atol=1e-15)
        assert np.allclose(trig.full_features(x)[:, freqs.full_index()], want, atol=1e-15)


def test_kernel_trivial_values(rng):
    x, xp = rng.uniform(-np.pi, np.pi, (2, 5))
    assert kernel(x, xp, 0) == 1.0
    for d in range(1, 11):
        v = rng.uniform(-np.pi, np.pi, d)
        assert kernel(v, v, d) == pytest.approx(3.0**d, rel=1e-14)


@pytest.mark.parametrize("d", [1, 2, 5, 8, 10])
def test_kernel_dp_matches_naive(d, rng):
    for lam in range(min(d, 4) + 1):
        for _ in range(10):
            x, xp = rng.uniform(-np.pi, np.pi, (2, d))
            assert abs(kernel(x, xp, lam) - kernel_naive(x, xp, lam)) <= 1e-10


@given(st.integers(1, 8), st.integers(0, 2**31))
def test_kernel_symmetry(d, seed):
    rng = np.random.default_rng(seed)
    x, xp = rng.uniform(-np.pi, np.pi, (2, d))
    lam = int(rng.integers(0, d + 1))
    assert kernel(x, xp, lam) == kernel(xp, x, lam)


def test_kernel_broadcasts(rng):
    X = rng.uniform(-np.pi, np.pi, (4, 3))
    Y = rng.uniform(-np.pi, np.pi, (6, 3))
    K = kernel(X[:, None, :], Y[None, :, :], 2)
    assert K.shape == (4, 6)
    assert K[2, 5] == pytest.approx(kernel(X[2], Y[5], 2), abs=1e-14)


def test_kernel_length_mismatch():
    with pytest.raises(ValueError):
        kernel(np.zeros(3), np.zeros(2), 1)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_grid_orthogonality(d):
    grid = trig.quadrature_grid(d)
    freqs = enumerate_frequencies(d, d)
    F = trig.monomials(grid, freqs)
    gram = F.T @ F / grid.shape[0]
    assert np.allclose(gram, np.diag(2.0 ** -freqs.support), atol=1e-12)


def test_extract_single_cosine():
    exp = extract_coefficients(lambda X: np.cos(X[:, 0]), 2, 2)
    assert exp.coeffs == pytest.approx({(1, 0): 1.0})


def test_extract_constant():
    exp = extract_coefficients(lambda X: np.full(X.shape[0], -0.7), 3)
    assert list(exp.coeffs) == [(0, 0, 0)]
    assert exp.coeffs[(0, 0, 0)] == pytest.approx(-0.7)


def test_extract_guard():
    with pytest.raises(ValueError):
        extract_coefficients(lambda X: X[:, 0], 13)


@given(st.integers(1, 4), st.integers(0, 2**31))
def test_extraction_round_trip(d, seed):
    rng = np.random.default_rng(seed)
    freqs = enumerate_frequencies(d, d)
    true = rng.normal(size=len(freqs))
    target = TrigExpansion.from_vector(freqs, true)
    exp = extract_coefficients(lambda X: evaluate_expansion(target, X), d)
    assert np.allclose(exp.to_vector(freqs), true, atol=1e-10)
    xs = rng.uniform(-np.pi, np.pi, (100, d))
    assert np.allclose(evaluate_expansion(exp, xs), evaluate_expansion(target, xs), atol=1e-10)


def test_expansion_constant_and_truncation():
    e = TrigExpansion(2, {(0, 0): 2.5, (1, -1): 1e-13, (1, 1): 0.5})
    assert list(e.coeffs) == [(0, 0), (1, 1)]
    assert evaluate_expansion(e, np.array([0.2, 0.3])) == pytest.approx(2.5 + 0.5 * np.cos(0.2) * np.cos(0.3))
    assert evaluate_expansion(e.truncate(1), np.array([0.2, 0.3])) == 2.5


def test_expansion_text_round_trip():
    e = TrigExpansion(3, {(1, -1, 0): -1.0, (0, 0, 0): 0.25, (-1, -1, 1): 3.5})
    text = e.to_text()
    assert text.splitlines()[1] == "+-0 -1.0"
    back = TrigExpansion.from_text(text)
    assert back.coeffs == e.coeffs


def test_expansion_rejects_bad_frequency():
    with pytest.raises(ValueError):
        TrigExpansion(2, {(2, 0): 1.0})


def test_expansion_length_mismatch():
    with pytest.raises(ValueError):
        evaluate_expansion(TrigExpansion(2, {(0, 0): 1.0}), np.zeros(3))


def test_gradient_constant_formula(rng):
    """Coefficient formula against a Monte-Carlo gradient average of the same expansion."""
    exp = TrigExpansion(2, {(1, 0): 1.0, (-1, 1): 0.5, (0, 0): 3.0})
    x = rng.uniform(-np.pi, np.pi, (200000, 2))
    c1, s1, c2, s2 = np.cos(x[:, 0]), np.sin(x[:, 0]), np.cos(x[:, 1]), np.sin(x[:, 1])
    g0 = -s1 + 0.5 * c1 * c2
    g1 = -0.5 * s1 * s2
    mc = np.mean(g0**2 + g1**2)
    assert trig.gradient_constant_from_expansion(exp) == pytest.approx(0.5 + 2 * 0.25 * 0.25)
    assert mc == pytest.approx(trig.gradient_constant_from_expansion(exp), rel=0.02)


# --- Pauli transfer matrices -------------------------------------------------------

PAULIS = [PauliString(a).matrix() for a in "IXYZ"]


def _rz(x):
    return np.diag([np.exp(-0.5j * x), np.exp(0.5j * x)])


def test_rz_ptm_at_zero_is_identity():
    D0, D1, _ = rz_ptm()
    assert np.array_equal(D0 + D1, np.eye(4))


@pytest.mark.parametrize("x", [0.3, 1.1, -2.0])
def test_rz_ptm_matches_conjugation(x):
    D0, D1, D2 = rz_ptm()
    U = _rz(x)
    ptm = np.array([[np.trace(Pi @ U @ Pj @ U.conj().T).real / 2 for Pj in PAULIS] for Pi in PAULIS])
    assert np.allclose(D0 + np.cos(x) * D1 + np.sin(x) * D2, ptm, atol=1e-12)


def test_rz_ptm_sine_block_sign():
    _, _, D2 = rz_ptm()
    assert D2[1, 2] == -1.0 and D2[2, 1] == 1.0


def _brute_class(p_rot, p_i, p_k):
    P = p_rot.matrix()
    dim = P.shape[0]
    xs = np.linspace(-3, 3, 7)
    vals = []
    for x in xs:
        U = np.cos(x / 2) * np.eye(dim) - 1j * np.sin(x / 2) * P
        vals.append(np.trace(p_i.matrix() @ U @ p_k.matrix() @ U.conj().T).real / dim)
    vals = np.array(vals)
    if np.allclose(vals, vals[0]):
        return "constant" if np.isclose(vals[0], float(p_i == p_k)) else "?"
    if np.allclose(np.abs(vals), np.abs(np.cos(xs))):
        return "cosine"
    if np.allclose(np.abs(vals), np.abs(np.sin(xs))):
        return "sine"
    return "?"


@pytest.mark.parametrize("n", [1, 2])
def test_ptm_classification_matches_brute_force(n):
    labels = ["".join(t) for t in itertools.product("IXYZ", repeat=n)]
    for r in labels:
        if set(r) == {"I"}:
            continue
        for i in labels:
            for k in labels:
                got = pauli_rot_ptm_class(PauliString(r), PauliString(i), PauliString(k))
                want = _brute_class(PauliString(r), PauliString(i), PauliString(k))
                if got == "zero":
                    assert want == "constant" and i != k
                else:
                    assert got == want, (r, i, k)


@pytest.mark.parametrize(
    "r, i, k, expected",
    [("Z", "Z", "Z", "constant"), ("Z", "X", "X", "cosine"), ("Z", "X", "Y", "sine"), ("Z", "I", "X", "constant")],
)
def test_ptm_class_examples(r, i, k, expected):
    assert pauli_rot_ptm_class(PauliString(r), PauliString(i), PauliString(k)) == expected
