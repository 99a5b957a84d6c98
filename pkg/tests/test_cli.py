import json
import shutil

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crlevi import asym, cli, corpus, levi
from crlevi.errors import NearSingularFrame, QuadratureNotConverged
from crlevi.sampling import sphere_samples


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_analyze_example3(capsys):
    code, out, _ = run(capsys, "analyze", "--manifest", "example3")
    rep = json.loads(out)
    assert code == 0
    assert rep["schema"] == 1
    assert rep["scan"]["signatures"] == [[1, 1, 1]]
    assert rep["failures"]["degrees"][0]["status"] == "FAILS_STRONG"


def test_analyze_heisenberg_both_signs(capsys):
    code, out, _ = run(capsys, "analyze", "--manifest", "heisenberg", "--lambda", "-1")
    rep = json.loads(out)
    assert code == 0
    assert rep["scan"]["signatures"] == [[1, 0, 0], [0, 1, 0]]
    assert rep["levi"]["signature"] == [0, 1, 0]


def test_analyze_accepts_a_path(capsys):
    path = corpus.bundled_dir() / "example5.json"
    code, out, _ = run(capsys, "analyze", "--manifest", str(path), "--format", "text")
    assert code == 0 and "FAILS_WEAK" in out


def test_malformed_manifest_writes_nothing(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    outdir = tmp_path / "out"
    code, out, err = run(capsys, "analyze", "--manifest", str(bad), "--out", str(outdir))
    assert code == 1
    assert out == "" and not outdir.exists()
    assert "malformed JSON" in err


def test_single_tau_is_insufficient(capsys):
    code, out, err = run(capsys, "asymptotics", "--manifest", "heisenberg", "--tau-grid", "0.001")
    assert code == 1 and out == ""
    assert "need at least 5 samples" in err


def test_frame_needs_graph_mode(capsys):
    code, _, err = run(capsys, "frame", "--manifest", "example6_local")
    assert code == 1 and "NotGraphMode" in err
    code, out, _ = run(capsys, "frame", "--manifest", "heisenberg")
    assert code == 0 and json.loads(out)["cond"] == 1.0


def test_normalize_command(capsys):
    code, out, _ = run(capsys, "normalize", "--manifest", "example3", "--lambda", "1,0")
    rep = json.loads(out)
    assert code == 0
    assert rep["normal_form"]["q"] == 1
    assert rep["nu_threshold"] == 2.0


def test_bad_lambda_length(capsys):
    code, _, err = run(capsys, "analyze", "--manifest", "example3", "--lambda", "1")
    assert code == 1 and "--lambda" in err


def test_empty_corpus_dir(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv(corpus.ENV_VAR, str(tmp_path))
    code, _, err = run(capsys, "corpus")
    assert code == 1 and "no manifests" in err


def test_corpus_mismatch_exits_nonzero(capsys, tmp_path, monkeypatch):
    m = corpus.load("heisenberg", corpus.bundled_dir())
    m.expressions = ["2*abs2(z1)^2"]  # flat at the origin: signature (0, 0, 1)
    (tmp_path / "heisenberg.json").write_text(m.dumps())
    monkeypatch.setenv(corpus.ENV_VAR, str(tmp_path))
    code, out, _ = run(capsys, "corpus")
    rep = json.loads(out)
    assert code == 1
    assert rep["entries"][0]["status"] == "FAIL"


def test_corpus_subset_from_env(capsys, tmp_path, monkeypatch):
    for name in ("example3", "example5"):
        shutil.copy(corpus.bundled_dir() / f"{name}.json", tmp_path)
    monkeypatch.setenv(corpus.ENV_VAR, str(tmp_path))
    code, out, err = run(capsys, "corpus")
    assert code == 0
    assert json.loads(out)["checked"] == 2 and "2/2 pass" in err


def test_corpus_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["corpus", "--seed", "7", "--out", str(a)]) == 0
    assert cli.main(["corpus", "--seed", "7", "--out", str(b)]) == 0
    assert (a / "corpus.corpus.json").read_bytes() == (b / "corpus.corpus.json").read_bytes()


def _fake_pairing(fail_taus):
    def fake(pp, cutoff, tau, **kw):
        if tau in fail_taus:
            raise QuadratureNotConverged("injected", estimate=0.9 * tau ** 1.5 + 0j)
        return asym.PairingResult(tau, 0.98 * tau ** 1.5 + 0j, 3, True, "hermite")
    return fake


def test_asymptotics_writes_data_files(capsys, tmp_path, monkeypatch):
    monkeypatch.setattr(asym, "pairing_integral", _fake_pairing(set()))
    code, out, _ = run(capsys, "asymptotics", "--manifest", "heisenberg", "--out", str(tmp_path),
                       "--format", "text", "--R-grid", "10,20,40")
    assert code == 0
    assert "exponent 1.5" in out and "c1 0.8" in out
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["heisenberg.asymptotics.annulus.dat", "heisenberg.asymptotics.boundary.dat",
                     "heisenberg.asymptotics.pairing.dat", "heisenberg.asymptotics.phi_bound.dat",
                     "heisenberg.asymptotics.txt"]
    rows = np.loadtxt(tmp_path / "heisenberg.asymptotics.pairing.dat")
    assert rows.shape == (9, 3)


@settings(max_examples=8)
@given(st.sets(st.sampled_from(list(asym.TAU_GRID)), max_size=4))
def test_asymptotics_exit_codes_under_fault_injection(failing):
    args = cli.build_parser().parse_args(
        ["asymptotics", "--manifest", "heisenberg", "--r-grid", "0.2,0.1", "--R-grid", "10,20"])
    with pytest.MonkeyPatch.context() as mp:
        mp.setattr(asym, "pairing_integral", _fake_pairing(failing))
        report, code, _ = cli.cmd_asymptotics(args)
    assert code == (2 if failing else 0)
    flagged = [it for it in report["integrals"] if not it["converged"]]
    assert len(flagged) == len(failing)
    assert report["complete"] is (not failing)


def test_asymptotics_fault_that_breaks_the_fit_is_partial(capsys, monkeypatch):
    window = [t for t in asym.TAU_GRID if t <= asym.FIT_MAX_TAU * (1 + 1e-9)]
    monkeypatch.setattr(asym, "pairing_integral", _fake_pairing(set(window[:4])))
    code, out, err = run(capsys, "asymptotics", "--manifest", "heisenberg", "--R-grid", "10,20")
    rep = json.loads(out)
    assert code == 2 and rep["fit"] is None
    assert any(e.startswith("fit:") for e in rep["errors"])


@settings(max_examples=10)
@given(st.sets(st.integers(0, 63), max_size=6))
def test_analyze_exit_codes_under_fault_injection(failing):
    lams = sphere_samples(2, 64, 0)
    bad = lams[sorted(failing)]
    real = levi.levi_matrix

    def flaky(ds, xi):
        if len(bad) and np.any(np.all(np.isclose(bad, xi.lam, rtol=0, atol=1e-12), axis=1)):
            raise NearSingularFrame("injected")
        return real(ds, xi)

    args = cli.build_parser().parse_args(["analyze", "--manifest", "example3"])
    with pytest.MonkeyPatch.context() as mp:
        mp.setattr(levi, "levi_matrix", flaky)
        report, code, _ = cli.cmd_analyze(args)
    assert code == (2 if failing else 0)
    assert len(report["errors"]) == len(failing)
    assert sum(s["signature"] is None for s in report["scan"]["samples"]) == len(failing)
