"""
Mean values of rotation circuits are trigonometric polynomials
==============================================================

A circuit whose only parametrized gates are Pauli rotations produces a mean
value that is a polynomial in ``cos x_i`` and ``sin x_i`` with degree at most
one per coordinate. This script extracts those coefficients exactly and shows
how the truncated kernel relates to them.
"""

# %%
# Build the rotational GHZ circuit on 8 qubits. Its three slots rotate
# qubits 0, N/2 and N-1 about Y.
import numpy as np

from boundedgate import trig
from boundedgate.circuit import expectation
from boundedgate.experiments import build_ghz_rotational, ghz_zz_observable

circuit, _ = build_ghz_rotational(8)
obs = ghz_zz_observable(8)
print(circuit.to_text())

# %%
# Sampling the function on the 3-point grid in every coordinate determines the
# polynomial exactly. Only one monomial survives: cos x_0 cos x_2.
f = lambda X: expectation(circuit, X, obs)
expansion = trig.extract_coefficients(f, 3)
print(expansion.to_text())
print("gradient constant C =", trig.gradient_constant_from_expansion(expansion))

# %%
# The truncated kernel weights each monomial by 2^|w| and sums them in closed
# form through elementary symmetric polynomials. Its value at x = x' counts
# the retained frequencies with their weights.
x = np.random.default_rng(0).uniform(-np.pi, np.pi, 3)
for lam in range(4):
    print(f"lambda={lam}  |C|={trig.cardinality(3, lam):3d}  k(x, x)={trig.kernel(x, x, lam):g}")

# %%
# Frequency-set sizes grow polynomially in d for fixed truncation.
for d in (3, 10, 30):
    print(d, [trig.cardinality(d, lam) for lam in range(min(d, 4) + 1)])
