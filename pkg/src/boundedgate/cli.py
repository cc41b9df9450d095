"""Command-line front end.

Subcommands: ``collect``, ``predict``, ``experiment``, ``vqe``, ``classify``, ``plan``.
Every subcommand accepts ``--config FILE`` with flat ``key=value`` lines whose keys
mirror the long flag names; flags given on the command line win. The effective
configuration is logged to stderr before the run.

Exit codes: 0 success, 2 usage or parse error, 3 data or format error,
4 numeric guard (for example the frequency-set cap).
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys

import numpy as np

from . import experiments as ex
from .circuit import CircuitFormatError, expectation, parse_circuit
from .learner import (
    FrequencyCapError,
    Predictor,
    SampleSizePlan,
    estimate_gradient_constant,
)
from .pauli import ObservableParseError, parse_observable
from .shadow import DatasetFormatError, collect_dataset, default_threads, load_dataset, save_dataset
from .vqa import OptimizerConfig, classifier_accuracy, offline_classifier_train, offline_vqe, synth_classification_dataset

log = logging.getLogger("boundedgate")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def fmt(v) -> str:
    return f"{float(v):.12g}"


# --- circuits -------------------------------------------------------------------


def resolve_circuit(spec: str):
    """A circuit file path or a builtin: ``ghz:N``, ``ising:N:d``, ``hea3q``, ``biqc9``."""
    parts = spec.split(":")
    try:
        if parts[0] == "ghz" and len(parts) == 2:
            return ex.build_ghz_rotational(int(parts[1]))[0]
        if parts[0] == "ising" and len(parts) == 3:
            return ex.build_trotter_ising(int(parts[1]), int(parts[2]))[0]
    except ValueError as exc:
        raise UsageError(f"bad builtin circuit {spec!r}: {exc}") from None
    if spec == "hea3q":
        return ex.build_hea_3q()
    if spec == "biqc9":
        return ex.build_biqc9()
    try:
        with open(spec, encoding="ascii") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read circuit {spec!r}: {exc}") from None
    return parse_circuit(text)


# --- config handling --------------------------------------------------------------


def read_config(path) -> dict:
    values = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read config {path!r}: {exc}") from None
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            values[key.strip().replace("-", "_")] = val.strip()
    return values


def merge_config(args, parser, defaults) -> dict:
    """Flags override config-file values, which override ``defaults``.

    Config-file keys must name a flag of the subcommand.
    """
    merged = dict(defaults)
    if getattr(args, "config", None):
        known = set(vars(args)) - {"command", "config", "quiet"}
        values = read_config(args.config)
        unknown = sorted(set(values) - known)
        if unknown:
            raise UsageError(f"{args.config}: unknown setting(s) {', '.join(unknown)}")
        merged.update(values)
    for key, val in vars(args).items():
        if key in ("command", "config", "func") or val is None:
            continue
        merged[key] = val
    return merged


def log_config(cmd, cfg):
    log.info("%s %s", cmd, " ".join(f"{k}={cfg[k]}" for k in sorted(cfg)))


def _int(cfg, key, minimum=None):
    try:
        v = int(cfg[key])
    except KeyError:
        raise UsageError(f"missing required setting --{key.replace('_', '-')}") from None
    except (TypeError, ValueError):
        raise UsageError(f"--{key.replace('_', '-')} must be an integer") from None
    if minimum is not None and v < minimum:
        raise UsageError(f"--{key.replace('_', '-')} must be at least {minimum}")
    return v


def _float(cfg, key):
    try:
        return float(cfg[key])
    except KeyError:
        raise UsageError(f"missing required setting --{key.replace('_', '-')}") from None
    except (TypeError, ValueError):
        raise UsageError(f"--{key.replace('_', '-')} must be a number") from None


def _req(cfg, key):
    if cfg.get(key) in (None, ""):
        raise UsageError(f"missing required setting --{key.replace('_', '-')}")
    return cfg[key]


def _load(path):
    try:
        return load_dataset(path)
    except OSError as exc:
        raise DataError(f"cannot read dataset {path!r}: {exc}") from None


def _observable(text, n_qubits):
    obs = parse_observable(text, n_qubits)
    return obs


def _write(path, text, out):
    if path:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    else:
        out.write(text)


# --- commands ---------------------------------------------------------------------


def cmd_collect(cfg, out):
    circuit = resolve_circuit(_req(cfg, "circuit"))
    if cfg.get("qubits") is not None and int(cfg["qubits"]) != circuit.n_qubits:
        raise UsageError(f"--qubits {cfg['qubits']} does not match the circuit ({circuit.n_qubits})")
    n = _int(cfg, "examples", 1)
    shots = _int(cfg, "shots", 1)
    seed = _int(cfg, "seed", 0)
    threads = _int(cfg, "threads", 1) if cfg.get("threads") is not None else default_threads()
    path = _req(cfg, "out")
    ds = collect_dataset(circuit, n, shots, seed, threads=threads)
    save_dataset(ds, path)
    with open(path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    out.write(
        f"qubits={ds.n_qubits} slots={ds.n_slots} examples={ds.size} shots={ds.shots} "
        f"circuit_digest={ds.circuit_digest} dataset_sha256={digest}\n"
    )


def _query_points(cfg, d):
    if cfg.get("x") is not None:
        try:
            xs = np.array([[float(v) for v in str(cfg["x"]).split(",")]])
        except ValueError:
            raise UsageError("--x must be comma-separated numbers") from None
    elif cfg.get("x_file"):
        try:
            xs = np.loadtxt(cfg["x_file"], delimiter=",", ndmin=2)
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot read {cfg['x_file']!r}: {exc}") from None
    else:
        raise UsageError("give --x or --x-file")
    if xs.shape[1] != d:
        raise UsageError(f"query points have {xs.shape[1]} coordinates, the dataset has {d} slots")
    return xs


def _predictor(cfg, ds, lam_key="lambda"):
    lam = _int(cfg, lam_key, 0)
    if lam > ds.n_slots:
        raise UsageError(f"--lambda {lam} exceeds d={ds.n_slots}")
    return Predictor.from_shadow(ds, lam, mode=cfg.get("mode", "kernel"))


def cmd_predict(cfg, out):
    ds = _load(_req(cfg, "dataset"))
    pred = _predictor(cfg, ds)
    obs = _observable(_req(cfg, "observable"), ds.n_qubits)
    xs = _query_points(cfg, ds.n_slots)
    vals = np.atleast_1d(pred.predict(xs, obs))
    if cfg.get("exact_circuit"):
        circuit = resolve_circuit(cfg["exact_circuit"])
        truth = np.atleast_1d(expectation(circuit, xs, obs))
        for p, t in zip(vals, truth):
            out.write(f"{fmt(p)} {fmt(t)} {fmt(abs(p - t))}\n")
    else:
        for p in vals:
            out.write(fmt(p) + "\n")


def cmd_experiment(cfg, out):
    import os

    name = _req(cfg, "name")
    keys = {f for f in ex.ExperimentConfig.__dataclass_fields__}
    settings = {k: v for k, v in cfg.items() if k in keys and v is not None}
    if "lambdas" in cfg:
        settings["lams"] = cfg["lambdas"]
    settings["name"] = name
    if cfg.get("threads") is not None:
        settings["threads"] = cfg["threads"]
    settings.pop("out", None)
    try:
        ecfg = ex.ExperimentConfig.from_mapping(settings)
    except KeyError as exc:
        raise UsageError(str(exc)) from None
    result = ex.run_experiment(ecfg)
    out_dir = cfg.get("out")
    if out_dir:
        for p in result.write(out_dir, name):
            out.write(os.path.relpath(p, out_dir) + "\n")
    else:
        out.write(result.to_csv())
        for fname, text in result.extra.items():
            out.write(f"# {fname}\n{text}")


def _optimizer(cfg, eta_default, iters_default):
    try:
        return OptimizerConfig(
            learning_rate=float(cfg.get("eta", eta_default)),
            max_iters=int(cfg.get("iters", iters_default)),
            shift=float(cfg.get("shift", np.pi / 2)),
            seed=int(cfg.get("seed", 0)),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_vqe(cfg, out):
    ds = _load(_req(cfg, "dataset"))
    cfg.setdefault("mode", "features")
    pred = _predictor(cfg, ds)
    ham = _observable(_req(cfg, "hamiltonian"), ds.n_qubits)
    opt = _optimizer(cfg, 0.3, 200)
    trace = offline_vqe(pred, ham, opt)
    _write(cfg.get("out"), trace.to_csv(), out)
    out.write("final_params " + ",".join(fmt(v) for v in trace.final_params) + "\n")
    out.write(f"surrogate {fmt(trace.final_objective)}\n")
    if cfg.get("exact_circuit"):
        circuit = resolve_circuit(cfg["exact_circuit"])
        out.write(f"exact {fmt(expectation(circuit, trace.final_params, ham))}\n")


def cmd_classify(cfg, out):
    ds = _load(_req(cfg, "dataset"))
    if ds.n_slots != 9 or ds.n_qubits != 3:
        raise DataError("the classifier needs a dataset of the 3-qubit, 9-slot circuit")
    if cfg.get("examples") is not None:
        ds = ds.subset(_int(cfg, "examples", 1))
    cfg.setdefault("mode", "features")
    pred = _predictor(cfg, ds)
    obs = _observable(cfg.get("observable", "X0"), 3)
    data_seed = int(cfg.get("data_seed", 123))
    data = synth_classification_dataset(data_seed, int(cfg.get("n_pos", 500)), int(cfg.get("n_neg", 500)))
    train, test = data.split(float(cfg.get("test_fraction", 0.2)), data_seed)
    opt = _optimizer(cfg, 0.5, 140)
    trace = offline_classifier_train(pred, obs, train, opt)
    _write(cfg.get("out"), trace.to_csv(), out)
    theta = trace.final_params
    out.write("final_params " + ",".join(fmt(v) for v in theta) + "\n")
    out.write(f"train_accuracy {fmt(classifier_accuracy(pred, obs, theta, train))}\n")
    out.write(f"test_accuracy {fmt(classifier_accuracy(pred, obs, theta, test))}\n")


def cmd_plan(cfg, out):
    eps = _float(cfg, "epsilon")
    delta = _float(cfg, "delta")
    B = _float(cfg, "B")
    K = _int(cfg, "K", 0)
    if cfg.get("estimate_C"):
        circuit = resolve_circuit(_req(cfg, "circuit"))
        obs = _observable(_req(cfg, "observable"), circuit.n_qubits)
        C, se = estimate_gradient_constant(
            circuit, None, obs, int(cfg.get("samples", 2000)), int(cfg.get("seed", 0))
        )
        d = int(cfg.get("d", circuit.n_slots))
        out.write(f"C_estimate {fmt(C)} stderr {fmt(se)}\n")
    else:
        C = _float(cfg, "C")
        d = _int(cfg, "d", 1)
    try:
        plan = SampleSizePlan.build(eps, delta, B, K, C, d)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out.write(
        f"lambda={plan.lam} frequencies={plan.n_frequencies} n={plan.n} "
        f"n_exact_labels={plan.n_exact}\n"
    )


COMMANDS = {
    "collect": cmd_collect,
    "predict": cmd_predict,
    "experiment": cmd_experiment,
    "vqe": cmd_vqe,
    "classify": cmd_classify,
    "plan": cmd_plan,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boundedgate", description=__doc__.split("\n")[0])
    p.add_argument("-q", "--quiet", action="store_true", help="do not log the effective config to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="key=value file; flags override it")
        sp.add_argument("--threads", type=int, help="worker cap (default: $BOUNDEDGATE_THREADS or 1)")
        return sp

    sp = add("collect", "simulate a circuit and record shadow snapshots")
    sp.add_argument("--circuit", help="circuit file or builtin (ghz:N, ising:N:d, hea3q, biqc9)")
    sp.add_argument("--qubits", type=int)
    sp.add_argument("--examples", type=int, help="number of training inputs n")
    sp.add_argument("--shots", type=int, help="snapshots per input T")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="dataset file to write")

    sp = add("predict", "predict mean values from a dataset")
    sp.add_argument("--dataset")
    sp.add_argument("--lambda", dest="lambda", type=int)
    sp.add_argument("--observable")
    sp.add_argument("--x", help="comma-separated query point")
    sp.add_argument("--x-file", help="one comma-separated query point per line")
    sp.add_argument("--exact-circuit", help="also print the simulator value and the error")
    sp.add_argument("--mode", choices=("kernel", "features"))

    sp = add("experiment", "run a configured study and write CSV")
    sp.add_argument("--name", choices=sorted(ex.RUNNERS))
    sp.add_argument("--out", help="output directory (default: stdout)")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--N", type=int)
    sp.add_argument("--d", type=int)
    sp.add_argument("--ns", help="comma-separated training-set sizes")
    sp.add_argument("--shots", type=int)
    sp.add_argument("--lambdas", help="comma-separated truncations")
    sp.add_argument("--n-test", type=int)
    sp.add_argument("--repeats", help="comma-separated subsampling seeds")
    sp.add_argument("--test-seed", type=int)
    sp.add_argument("--observable")
    sp.add_argument("--eps", type=float)
    sp.add_argument("--B", type=float)
    sp.add_argument("--pairs", type=int)
    sp.add_argument("--samples", type=int)

    for name, help_ in (("vqe", "offline VQE through the surrogate"), ("classify", "offline binary classifier")):
        sp = add(name, help_)
        sp.add_argument("--dataset")
        sp.add_argument("--lambda", dest="lambda", type=int)
        sp.add_argument("--eta", type=float)
        sp.add_argument("--iters", type=int)
        sp.add_argument("--shift", type=float)
        sp.add_argument("--seed", type=int, help="parameter initialization seed")
        sp.add_argument("--out", help="trace CSV path (default: stdout)")
        sp.add_argument("--mode", choices=("kernel", "features"))
        if name == "vqe":
            sp.add_argument("--hamiltonian")
            sp.add_argument("--exact-circuit")
        else:
            sp.add_argument("--examples", type=int, help="use the first n records")
            sp.add_argument("--data-seed", type=int)
            sp.add_argument("--n-pos", type=int)
            sp.add_argument("--n-neg", type=int)
            sp.add_argument("--test-fraction", type=float)
            sp.add_argument("--observable")

    sp = add("plan", "sample-size plan for a target error")
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--B", type=float)
    sp.add_argument("--K", type=int)
    sp.add_argument("--d", type=int)
    sp.add_argument("--C", type=float)
    sp.add_argument("--estimate-C", action="store_true", default=None)
    sp.add_argument("--circuit")
    sp.add_argument("--observable")
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seed", type=int)
    return p


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        cfg = merge_config(args, parser, {})
        cfg.pop("quiet", None)
        log_config(args.command, cfg)
        COMMANDS[args.command](cfg, out)
    except (UsageError, ObservableParseError, CircuitFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DatasetFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FrequencyCapError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
