import io
import re

import numpy as np
import pytest

from boundedgate.cli import main
from boundedgate.shadow import load_dataset


def run(*argv):
    buf = io.StringIO()
    code = main(["-q", *map(str, argv)], out=buf)
    return code, buf.getvalue()


@pytest.fixture(scope="module")
def ghz_dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("ghz") / "ghz.ds"
    code, _ = run("collect", "--circuit", "ghz:8", "--examples", 60, "--shots", 200, "--seed", 7, "--out", path)
    assert code == 0
    return path


@pytest.fixture(scope="module")
def hea_dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("hea") / "hea.ds"
    code, _ = run("collect", "--circuit", "hea3q", "--examples", 40, "--shots", 20, "--seed", 3, "--out", path)
    assert code == 0
    return path


def test_collect_summary(tmp_path):
    path = tmp_path / "d.ds"
    code, text = run("collect", "--circuit", "ghz:8", "--qubits", 8, "--examples", 10, "--shots", 100, "--seed", 1, "--out", path)
    assert code == 0
    assert re.fullmatch(r"qubits=8 slots=3 examples=10 shots=100 circuit_digest=[0-9a-f]{64} dataset_sha256=[0-9a-f]{64}\n", text)
    assert "size=10" in path.read_text().splitlines()[0]
    ds = load_dataset(path)
    assert ds.size == 10 and ds.shots == 100


@pytest.mark.parametrize("threads", [1, 2, 3])
def test_collect_digest_independent_of_threads(tmp_path, threads):
    _, ref = run("collect", "--circuit", "ghz:4", "--examples", 12, "--shots", 30, "--seed", 9, "--out", tmp_path / "a.ds")
    _, text = run(
        "collect", "--circuit", "ghz:4", "--examples", 12, "--shots", 30, "--seed", 9, "--threads", threads, "--out", tmp_path / "b.ds"
    )
    assert text == ref
    assert (tmp_path / "a.ds").read_bytes() == (tmp_path / "b.ds").read_bytes()


@pytest.mark.parametrize(
    "args",
    [
        ("--examples", 0, "--shots", 10),
        ("--examples", 5, "--shots", 0),
        ("--examples", 5),
    ],
)
def test_collect_usage_errors(tmp_path, args):
    code, _ = run("collect", "--circuit", "ghz:4", "--seed", 1, "--out", tmp_path / "x.ds", *args)
    assert code == 2


def test_collect_bad_builtin_and_missing_file(tmp_path):
    assert run("collect", "--circuit", "ghz:3", "--examples", 1, "--shots", 1, "--seed", 1, "--out", tmp_path / "x")[0] == 2
    assert run("collect", "--circuit", tmp_path / "nope.txt", "--examples", 1, "--shots", 1, "--seed", 1, "--out", tmp_path / "x")[0] == 3


def test_collect_qubit_mismatch(tmp_path):
    code, _ = run("collect", "--circuit", "ghz:4", "--qubits", 5, "--examples", 1, "--shots", 1, "--seed", 1, "--out", tmp_path / "x")
    assert code == 2


def test_collect_circuit_file(tmp_path):
    circ = tmp_path / "c.txt"
    circ.write_text("qubits 1 slots 1\nROT Y0 slot:0\n")
    code, text = run("collect", "--circuit", circ, "--examples", 3, "--shots", 5, "--seed", 1, "--out", tmp_path / "c.ds")
    assert code == 0, text
    assert text.startswith("qubits=1 slots=1 examples=3 shots=5")


def test_predict_single_point(ghz_dataset):
    code, text = run("predict", "--dataset", ghz_dataset, "--lambda", 2, "--observable", "Z0*Z7", "--x", "0,0,0")
    assert code == 0
    assert len(text.splitlines()) == 1
    float(text)


def test_predict_x_file(ghz_dataset, tmp_path):
    xs = np.random.default_rng(0).uniform(-np.pi, np.pi, (10, 3))
    xf = tmp_path / "x.csv"
    np.savetxt(xf, xs, delimiter=",")
    code, text = run("predict", "--dataset", ghz_dataset, "--lambda", 2, "--observable", "Z0*Z7", "--x-file", xf)
    assert code == 0 and len(text.splitlines()) == 10
    code, text = run(
        "predict", "--dataset", ghz_dataset, "--lambda", 2, "--observable", "Z0*Z7", "--x-file", xf, "--exact-circuit", "ghz:8"
    )
    rows = np.array([[float(v) for v in line.split()] for line in text.splitlines()])
    assert rows.shape == (10, 3)
    assert np.allclose(rows[:, 1], np.cos(xs[:, 0]) * np.cos(xs[:, 2]), atol=1e-10)
    assert np.allclose(rows[:, 2], np.abs(rows[:, 0] - rows[:, 1]), atol=1e-10)


def test_predict_modes_agree(ghz_dataset):
    a = run("predict", "--dataset", ghz_dataset, "--lambda", 2, "--observable", "Z0*Z7", "--x", "0.3,-1,2", "--mode", "kernel")[1]
    b = run("predict", "--dataset", ghz_dataset, "--lambda", 2, "--observable", "Z0*Z7", "--x", "0.3,-1,2", "--mode", "features")[1]
    assert float(a) == pytest.approx(float(b), abs=1e-9)


def test_predict_errors(ghz_dataset, capsys):
    base = ("predict", "--dataset", ghz_dataset, "--x", "0,0,0")
    code, _ = run(*base, "--lambda", 2, "--observable", "Z0*Q7")
    assert code == 2
    assert "position" in capsys.readouterr().err
    assert run(*base, "--lambda", 4, "--observable", "Z0")[0] == 2
    assert run(*base, "--lambda", 1, "--observable", "Z9")[0] == 2
    assert run("predict", "--dataset", ghz_dataset, "--lambda", 1, "--observable", "Z0", "--x", "0,0")[0] == 2


def test_predict_bad_dataset(tmp_path):
    bad = tmp_path / "bad.ds"
    bad.write_text("garbage\n")
    assert run("predict", "--dataset", bad, "--lambda", 1, "--observable", "Z0", "--x", "0")[0] == 3
    assert run("predict", "--dataset", tmp_path / "missing", "--lambda", 1, "--observable", "Z0", "--x", "0")[0] == 3


def test_plan_output():
    code, text = run("plan", "--epsilon", 0.1, "--delta", 0.05, "--B", 1, "--K", 2, "--d", 3, "--C", 0.5)
    assert code == 0
    m = re.fullmatch(r"lambda=(\d+) frequencies=(\d+) n=(\d+) n_exact_labels=(\d+)\n", text)
    assert m and m.group(1) == "3" and m.group(2) == "27"


def test_plan_rejects_bad_values():
    assert run("plan", "--epsilon", 0, "--delta", 0.05, "--B", 1, "--K", 2, "--d", 3, "--C", 0.5)[0] == 2
    assert run("plan", "--epsilon", 0.1, "--delta", 0.05, "--B", 1, "--K", 2, "--d", 3)[0] == 2


def test_plan_estimate_c():
    code, text = run("plan", "--epsilon", 0.1, "--delta", 0.05, "--B", 1, "--K", 2, "--estimate-C",
                     "--circuit", "ghz:4", "--observable", "Z0*Z3", "--samples", 500, "--seed", 2)
    assert code == 0
    first, second = text.splitlines()
    assert first.startswith("C_estimate ")
    assert second.startswith("lambda=")


def test_config_file_is_overridden_by_flags(tmp_path):
    cfg = tmp_path / "plan.cfg"
    cfg.write_text("# sample plan\nepsilon=0.1\ndelta=0.05\nB=1\nK=2\nd=3\nC=0.5\n")
    _, from_file = run("plan", "--config", cfg)
    _, direct = run("plan", "--epsilon", 0.1, "--delta", 0.05, "--B", 1, "--K", 2, "--d", 3, "--C", 0.5)
    assert from_file == direct
    _, overridden = run("plan", "--config", cfg, "--d", 2)
    assert "frequencies=9 " in overridden


def test_config_file_errors(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("epsilon 0.1\n")
    assert run("plan", "--config", cfg)[0] == 2
    assert run("plan", "--config", tmp_path / "missing.cfg")[0] == 3


def test_effective_config_is_logged(capsys, tmp_path):
    main(["plan", "--epsilon", "0.1", "--delta", "0.05", "--B", "1", "--K", "2", "--d", "3", "--C", "0.5"], out=io.StringIO())
    err = capsys.readouterr().err
    assert "plan" in err and "epsilon=0.1" in err


def test_experiment_lowerbound_stdout():
    code, text = run("experiment", "--name", "lowerbound", "--d", 4, "--seed", 1)
    assert code == 0
    assert text.splitlines()[0] == "d,eps,B,a,a_prime,mc_distance,target"


def test_experiment_writes_files(tmp_path):
    code, text = run("experiment", "--name", "ising", "--N", 3, "--d", 1, "--ns", "10,20", "--shots", 20,
                     "--lambdas", 1, "--seed", 4, "--out", tmp_path)
    assert code == 0
    names = text.split()
    assert len(names) == 2
    for name in names:
        assert (tmp_path / name).read_text().count("\n") > 1


def test_experiment_unknown_key(tmp_path):
    cfg = tmp_path / "e.cfg"
    cfg.write_text("name=ghz\nbogus=1\n")
    assert run("experiment", "--config", cfg)[0] == 2


def test_vqe_command(hea_dataset, tmp_path):
    trace = tmp_path / "trace.csv"
    code, text = run("vqe", "--dataset", hea_dataset, "--lambda", 2, "--hamiltonian", "-1*Z0*Z1 - 1*Z1*Z2 - 0.5*X0 - 0.5*X1 - 0.5*X2",
                     "--iters", 5, "--seed", 1, "--out", trace, "--exact-circuit", "hea3q")
    assert code == 0, text
    lines = text.splitlines()
    assert [line.split()[0] for line in lines] == ["final_params", "surrogate", "exact"]
    csv = trace.read_text().splitlines()
    assert csv[0].startswith("iter,objective,theta_0") and len(csv) == 7


def test_classify_command(hea_dataset):
    code, text = run("classify", "--dataset", hea_dataset, "--lambda", 2, "--iters", 3, "--seed", 1,
                     "--n-pos", 20, "--n-neg", 20, "--examples", 30)
    assert code == 0, text
    lines = text.splitlines()
    assert lines[0].startswith("iter,objective")
    assert lines[-2].startswith("train_accuracy ") and lines[-1].startswith("test_accuracy ")


def test_classify_rejects_wrong_circuit(ghz_dataset):
    assert run("classify", "--dataset", ghz_dataset, "--lambda", 1)[0] == 3


def test_frequency_cap_exit_code(monkeypatch, ghz_dataset):
    from boundedgate import learner

    orig = learner.Predictor.from_shadow

    def tiny_cap(*a, **k):
        p = orig(*a, **k)
        p.feature_cap = 2
        return p

    monkeypatch.setattr(learner.Predictor, "from_shadow", staticmethod(tiny_cap))
    code, _ = run("predict", "--dataset", ghz_dataset, "--lambda", 2, "--observable", "Z0", "--x", "0,0,0", "--mode", "features")
    assert code == 4


def test_argparse_errors():
    assert run("nope")[0] == 2
    assert run("predict", "--mode", "bogus")[0] == 2
