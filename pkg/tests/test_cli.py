import json
import subprocess
import sys

import pytest

from wealthshare import __version__
from wealthshare.cli import main
from wealthshare.ensembles import RNG_ALGORITHM


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_version(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == 0
    assert __version__ in out and RNG_ALGORITHM in out


@pytest.mark.parametrize(
    "argv,flag",
    [
        (["pdf", "--kind", "bounded", "--alpha", "0", "--delta", "0.1"], "--alpha"),
        (["pdf", "--kind", "bounded", "--alpha", "1", "--delta", "1.0"], "--delta"),
        (["pdf", "--kind", "bounded", "--alpha", "1"], "--delta"),
        (["pdf", "--kind", "bounded", "--alpha", "1", "--delta", "0.1", "--L", "0.1"], "--delta"),
        (["pdf", "--kind", "bounded", "--alpha", "1", "--L", "2", "--H", "1"], "--L"),
        (["pdf", "--kind", "gamma", "--alpha", "1", "--delta", "0.1"], "--kind"),
        (["sample", "--kind", "exp", "--alpha", "1", "--delta", "0.1", "--n", "0"], "--n"),
        (["sample", "--kind", "exp", "--alpha", "1", "--delta", "0.1", "--n", "5", "--seed", "-1"], "--seed"),
        (["validate", "--kind", "exp", "--alpha", "1", "--delta", "0.1", "--n", "100"], "--n"),
        (["sweep", "--kind", "exp", "--delta-min", "0", "--out", "x"], "--delta-min"),
    ],
)
def test_usage_errors_exit_1_and_name_flag(capsys, argv, flag):
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert flag in err


def test_missing_subcommand(capsys):
    assert run(capsys)[0] == 1


def test_delta_equals_explicit_cutoffs(capsys):
    base = ["sample", "--kind", "exp", "--alpha", "2", "--n", "50", "--seed", "4"]
    _, a, _ = run(capsys, *base, "--delta", "0.1")
    _, b, _ = run(capsys, *base, "--L", "0.1", "--H", "1")
    assert a == b


def test_sample_is_deterministic(capsys):
    argv = ["sample", "--kind", "bounded", "--alpha", "1", "--delta", "0.1", "--n", "20", "--seed", "5"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b
    lines = a.splitlines()
    assert lines[0].startswith("# ensemble=bounded") and "seed=5" in lines[0]
    assert lines[1] == "omega" and len(lines) == 22


def test_pdf_json(capsys):
    code, out, _ = run(capsys, "pdf", "--kind", "exp", "--alpha", "2", "--delta", "0.1",
                       "--grid", "9", "--format", "json", "--oracle")
    d = json.loads(out)
    assert code == 0 and len(d["omega"]) == 9
    for p, q in zip(d["p_omega"], d["p_omega_oracle"]):
        assert p == pytest.approx(q, rel=1e-9)


def test_classify_and_critical(capsys):
    _, out, _ = run(capsys, "classify", "--kind", "exp", "--alpha", "0.5", "--delta", "0.01")
    assert json.loads(out)["modal_class"] == "MShaped"
    _, out, _ = run(capsys, "critical", "--kind", "exp", "--alpha", "0.5")
    assert json.loads(out)["delta_c"] == pytest.approx(0.110819, rel=1e-5)
    _, out, _ = run(capsys, "critical", "--kind", "bounded", "--alpha", "2")
    d = json.loads(out)
    assert d["delta_c"] is None and d["delta_cc"] is None


def test_out_file(capsys, tmp_path):
    path = tmp_path / "p.csv"
    code, out, _ = run(capsys, "pdf", "--kind", "bounded", "--alpha", "0.5", "--delta", "0.1",
                       "--grid", "5", "--out", str(path))
    assert code == 0 and out == ""
    assert path.read_text().splitlines()[1] == "omega,p_omega"


def test_unwritable_out_is_not_usage_error(capsys, tmp_path):
    code, _, err = run(capsys, "pdf", "--kind", "bounded", "--alpha", "0.5", "--delta", "0.1",
                       "--out", str(tmp_path / "no" / "p.csv"))
    assert code == 2 and "cannot write" in err


def test_validate_json(capsys):
    code, out, _ = run(capsys, "validate", "--kind", "bounded", "--alpha", "1", "--delta", "0.1",
                       "--n", "20000", "--bins", "20", "--seed", "1")
    d = json.loads(out)
    assert code == 0 and d["n_samples"] == 20000 and d["rng"] == RNG_ALGORITHM


def test_sweep_writes_files(capsys, tmp_path):
    prefix = str(tmp_path / "pd")
    code, out, _ = run(capsys, "sweep", "--kind", "exp", "--alpha-min", "1.2", "--alpha-max", "2",
                       "--delta-min", "0.01", "--delta-max", "0.5", "--alpha-steps", "2",
                       "--delta-steps", "2", "--resolution", "512", "--out", prefix)
    assert code == 0
    assert out.split() == [prefix + "_cells.csv", prefix + "_boundaries.csv"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "wealthshare", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and __version__ in proc.stdout


def test_numerical_failure_exits_2(capsys, monkeypatch):
    from wealthshare import cli
    from wealthshare.errors import ConvergenceError

    def boom(*args, **kwargs):
        raise ConvergenceError("did not converge", estimate=0.0, error=1.0)

    monkeypatch.setattr(cli, "classify", boom)
    code, _, err = run(capsys, "classify", "--kind", "exp", "--alpha", "1", "--delta", "0.1")
    assert code == 2 and "did not converge" in err
