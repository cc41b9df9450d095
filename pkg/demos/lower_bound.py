"""
A hard family for incoherent learning
=====================================

The functions f_a(x) = sqrt(2 eps) B cos(sum of the unmasked coordinates)
are pairwise separated by exactly 2 eps B^2 in mean squared distance, while
each has small norm. Telling them apart from data needs many samples.
"""

# %%
import numpy as np

from boundedgate import trig
from boundedgate.experiments import LowerBoundFamily, lowerbound_distance_mc, lowerbound_f, lowerbound_pairs
from boundedgate.learner import lower_bound_sample_size

d, eps, B = 6, 0.04, 1.0

# %%
# Monte-Carlo distances for a few random pairs of masks.
for k, (a, b) in enumerate(lowerbound_pairs(d, 5, seed=1)):
    fa, fb = LowerBoundFamily(d, eps, B, a), LowerBoundFamily(d, eps, B, b)
    print(fa.label(), fb.label(), round(lowerbound_distance_mc(fa, fb, 200_000, k), 5), "target", 2 * eps * B**2)

# %%
# Each member spreads its weight over many monomials of high support, which is
# what defeats low-degree truncation.
fam = LowerBoundFamily(d, eps, B, (0, 0, 0, 1, 1, 1))
expansion = trig.extract_coefficients(lambda X: lowerbound_f(fam, X), d)
print(expansion.to_text())

# %%
# The resulting sample-size bound carries an unspecified constant c1 in (0, 1);
# 0.5 here is only for illustration.
for T in (1, 10, 100):
    print("T =", T, "n >=", round(lower_bound_sample_size(30, eps, T, 0.5), 1))
