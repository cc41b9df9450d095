import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from boundedgate.pauli import (
    Observable,
    ObservableParseError,
    PauliString,
    apply_pauli,
    expectation_exact,
    parse_observable,
    pauli_expectation,
    serialize_observable,
)

from conftest import random_state

axes_strings = st.integers(1, 4).flatmap(lambda n: st.text("IXYZ", min_size=n, max_size=n))


def observables(n):
    term = st.tuples(
        st.floats(-5, 5, allow_nan=False).filter(lambda c: abs(c) > 1e-3),
        st.text("IXYZ", min_size=n, max_size=n).filter(lambda s: set(s) != {"I"}),
    )
    return st.lists(term, min_size=1, max_size=5).map(
        lambda ts: Observable(n, tuple((c, PauliString(a)) for c, a in ts))
    )


@pytest.mark.parametrize(
    "text, n, n_terms, B, K",
    [
        ("0.5*X0 + 0.5*X1", 2, 2, 1.0, 1),
        ("0.3333*X0*X1 + 0.3333*Y0*Y1 + 0.3333*Z0*Z1", 2, 3, 0.9999, 2),
        ("-0.1*Z0*Z1 - 0.1*Z1*Z2 + 0.5*X0 + 0.5*X1 + 0.5*X2", 3, 5, 1.7, 2),
        ("Z0", 1, 1, 1.0, 1),
        ("1e-1*Y2", 3, 1, 0.1, 1),
    ],
)
def test_parse_examples(text, n, n_terms, B, K):
    obs = parse_observable(text, n)
    assert obs.n_terms == n_terms
    assert obs.norm_bound == pytest.approx(B)
    assert obs.locality == K


def test_parse_merges_duplicates_and_drops_zeros():
    obs = parse_observable("0.5*Z0 + 0.25*Z0 - 1*X1 + 1*X1", 2)
    assert obs.terms == ((0.75, PauliString("ZI")),)


def test_correlator_matches_dense_operator():
    obs = parse_observable("0.3333*X0*X1 + 0.3333*Y0*Y1 + 0.3333*Z0*Z1", 2)
    X = np.array([[0, 1], [1, 0]])
    Y = np.array([[0, -1j], [1j, 0]])
    Z = np.diag([1, -1])
    dense = 0.3333 * (np.kron(X, X) + np.kron(Y, Y) + np.kron(Z, Z))
    assert np.allclose(obs.matrix(), dense)


@pytest.mark.parametrize(
    "text, position",
    [
        ("", 0),
        ("0.5*X0 +", 8),
        ("0.5*X0 + 0.5*Q1", 13),
        ("0.5*X5", 4),
        ("0.5*X0*Z0", 7),
        ("0.5 X0", 4),
        ("X0 X1", 3),
    ],
)
def test_parse_errors_report_position(text, position):
    with pytest.raises(ObservableParseError) as info:
        parse_observable(text, 2)
    assert info.value.position == position


def test_identity_term_extension():
    obs = parse_observable("2.5*I + Z0", 1)
    assert expectation_exact(np.array([0, 1], dtype=complex), obs) == pytest.approx(1.5)


@pytest.mark.parametrize(
    "state, text, expected",
    [
        (np.array([1, 0, 0, 0], dtype=complex), "0.5*Z0 + 0.5*Z1", 1.0),
        (np.array([1, 1], dtype=complex) / np.sqrt(2), "Z0", 0.0),
        (np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2), "Z0*Z1", 1.0),
        (np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2), "X0*X1", 1.0),
        (np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2), "Y0*Y1", -1.0),
        (np.array([1, 1j], dtype=complex) / np.sqrt(2), "Y0", 1.0),
    ],
)
def test_expectation_examples(state, text, expected):
    n = int(np.log2(state.size))
    assert expectation_exact(state, parse_observable(text, n)) == pytest.approx(expected, abs=1e-12)


def test_expectation_dimension_mismatch():
    with pytest.raises(ValueError):
        expectation_exact(np.ones(4) / 2, parse_observable("Z0", 3))


@given(axes_strings, st.integers(0, 2**32 - 1))
def test_apply_pauli_matches_dense_matrix(axes, seed):
    p = PauliString(axes)
    psi = random_state(np.random.default_rng(seed), p.n_qubits)
    assert np.allclose(apply_pauli(psi, p), p.matrix() @ psi, atol=1e-12)


@given(axes_strings, st.integers(0, 2**32 - 1))
def test_pauli_expectation_bounded(axes, seed):
    p = PauliString(axes)
    psi = random_state(np.random.default_rng(seed), p.n_qubits)
    assert -1 - 1e-12 <= pauli_expectation(psi, p) <= 1 + 1e-12


@given(st.integers(1, 4).flatmap(lambda n: st.tuples(st.just(n), st.text("IXYZ", min_size=n, max_size=n), st.text("IXYZ", min_size=n, max_size=n))))
def test_commutation_matches_matrices(args):
    _, a, b = args
    pa, pb = PauliString(a), PauliString(b)
    A, B = pa.matrix(), pb.matrix()
    assert pa.commutes_with(pb) == np.allclose(A @ B, B @ A)


@given(observables(3), observables(3), st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**32 - 1))
def test_expectation_is_linear(o1, o2, a, b, seed):
    psi = random_state(np.random.default_rng(seed), 3)
    try:
        combo = a * o1 + b * o2
    except ValueError:  # everything cancelled
        return
    lhs = expectation_exact(psi, combo)
    rhs = a * expectation_exact(psi, o1) + b * expectation_exact(psi, o2)
    assert lhs == pytest.approx(rhs, abs=1e-12 * (1 + abs(a) + abs(b)) * 10)


@given(observables(4))
def test_serialize_parse_round_trip(obs):
    back = parse_observable(serialize_observable(obs), 4)
    assert back == obs


def test_serialization_order_is_canonical():
    obs = parse_observable("Z1 + X0*X1 + X1 + Z0", 2)
    assert serialize_observable(obs) == "1.0*X1 + 1.0*X0*X1 + 1.0*Z0 + 1.0*Z1"


def test_batched_expectation(rng):
    states = np.stack([random_state(rng, 2) for _ in range(5)])
    obs = parse_observable("0.3*X0*Y1 - 0.7*Z1", 2)
    batched = expectation_exact(states, obs)
    assert batched.shape == (5,)
    assert np.allclose(batched, [expectation_exact(s, obs) for s in states])


def test_from_sparse_rejects_duplicates():
    with pytest.raises(ValueError):
        PauliString.from_sparse(3, [(0, "X"), (0, "Z")])
