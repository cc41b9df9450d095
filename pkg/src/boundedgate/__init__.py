"""Learning mean values of parameterized circuits with few non-Clifford rotations.

Modules
-------
pauli        Pauli strings, observables, exact expectation values.
circuit      Clifford + Pauli-rotation circuits and a state-vector simulator.
shadow       Pauli classical shadows and dataset files.
trig         Trigonometric monomials, the truncated kernel, coefficient extraction.
learner      Kernel-mean predictors, risk and sample-size planning.
vqa          Offline VQE and binary classification through a predictor.
experiments  Reference circuits and seeded numerical studies.
"""

from .circuit import Circuit, Gate, parse_circuit, simulate, expectation
from .learner import Predictor, rms_error, sample_size, exact_label_sample_size
from .pauli import Observable, PauliString, parse_observable, expectation_exact
from .shadow import ShadowDataset, collect_dataset, load_dataset, save_dataset
from .trig import TrigExpansion, enumerate_frequencies, extract_coefficients, kernel

__version__ = "0.1.0"

__all__ = [
    "Circuit", "Gate", "parse_circuit", "simulate", "expectation",
    "Predictor", "rms_error", "sample_size", "exact_label_sample_size",
    "Observable", "PauliString", "parse_observable", "expectation_exact",
    "ShadowDataset", "collect_dataset", "load_dataset", "save_dataset",
    "TrigExpansion", "enumerate_frequencies", "extract_coefficients", "kernel",
]
