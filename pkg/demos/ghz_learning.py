"""
Learning a GHZ correlator from classical shadows
================================================

Collect randomized single-qubit measurements of the rotational GHZ circuit at
random inputs, then predict the two-point correlator at unseen inputs with the
truncated trigonometric kernel. No circuit is run at prediction time.
"""

# %%
import numpy as np

from boundedgate.circuit import expectation
from boundedgate.experiments import build_ghz_rotational, ghz_zz_observable
from boundedgate.learner import Predictor, rms_error
from boundedgate.pauli import parse_observable
from boundedgate.shadow import collect_dataset

circuit, _ = build_ghz_rotational(8)
obs = ghz_zz_observable(8)

# %%
# 500 random inputs with 1000 snapshots each. Every record draws its own
# input and measurement stream from the master seed, so the dataset does not
# depend on how the work is split across threads.
ds = collect_dataset(circuit, 500, 1000, master_seed=1234)
print(ds.size, "records of", ds.shots, "snapshots")

# %%
# Held-out inputs and their exact values from the simulator.
x_test = np.random.default_rng(123).uniform(-np.pi, np.pi, (10, 3))
truth = expectation(circuit, x_test, obs)

# %%
# Prediction error for several truncations. Once the truncation covers the
# support of the target (two here) adding more frequencies changes little.
for lam in (1, 2, 3):
    pred = Predictor.from_shadow(ds, lam)
    print(f"lambda={lam}  rms={rms_error(pred, obs, x_test, truth):.4f}")

# %%
# The same predictor answers any other observable supported on the snapshots.
pred = Predictor.from_shadow(ds, 2)
for text in ("Z0", "Z0*Z4", "X0*X7"):
    o = parse_observable(text, 8)
    print(f"<{text}> at x=0: predicted {pred.predict(np.zeros(3), o):+.3f}, exact {expectation(circuit, np.zeros(3), o):+.3f}")
