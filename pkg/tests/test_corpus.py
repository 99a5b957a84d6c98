import itertools
import json

import numpy as np
import pytest
import sympy

from crlevi import corpus
from crlevi import expr as ex
from crlevi.errors import ManifestError
from crlevi.manifest import Manifest


def test_bundled_files_match_builders():
    for m in corpus.build_manifests():
        path = corpus.bundled_dir() / f"{m.name}.json"
        assert path.read_text() == m.dumps(), m.name


def test_every_expectation_has_a_manifest():
    names = {p.stem for p in corpus.manifest_paths(corpus.bundled_dir())}
    assert set(corpus.EXPECTED) == names


@pytest.mark.parametrize("name", sorted(corpus.EXPECTED))
def test_entry_passes(manifests, name):
    res = corpus.check_manifest(manifests[name])
    assert res["status"] == "PASS", res["checks"]


def test_block_pairing_signature(manifests):
    res = corpus.check_manifest(manifests["example2_l2_m12"])
    assert res["signatures"] == [[3, 3, 2]]
    assert manifests["example2_l2_m12"].n == 8


def test_env_var_overrides_directory(tmp_path, monkeypatch):
    monkeypatch.setenv(corpus.ENV_VAR, str(tmp_path))
    assert corpus.manifest_paths() == []
    (tmp_path / "x.json").write_text("{}")
    assert corpus.manifest_paths() == [tmp_path / "x.json"]


def test_quaternionic_determinant_against_sympy(rng):
    z = sympy.symbols("z1:6")
    c = [sympy.conjugate(s) for s in z]
    M = sympy.Matrix([[1, 0, 0, -c[0]], [z[0], 1, 0, 1], [z[1], 0, 1, -c[2]], [z[2], z[3], z[4], c[1]]])
    det = sympy.lambdify(z, M.det(method="berkowitz"), "numpy")
    e = ex.parse(corpus.quaternionic_flag_determinant())
    for _ in range(10):
        pt = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        ours = ex.evaluate(e, {f"z{i + 1}": pt[i] for i in range(5)})
        assert complex(ours) == pytest.approx(complex(det(*pt)), rel=1e-12, abs=1e-12)


def test_manifest_validation(manifests):
    good = manifests["heisenberg"].to_dict()
    with pytest.raises(ManifestError, match="missing"):
        Manifest.from_dict({k: v for k, v in good.items() if k != "n"})
    with pytest.raises(ManifestError, match="unknown"):
        Manifest.from_dict({**good, "extra": 1})
    with pytest.raises(ManifestError, match="expressions"):
        Manifest.from_dict({**good, "expressions": ["abs2(z1)", "abs2(z1)"]})
    with pytest.raises(ManifestError, match="real"):
        Manifest.from_dict({**good, "expressions": ["z1"]}).system()
    with pytest.raises(ManifestError, match="not on the manifold"):
        Manifest.from_dict({**good, "mode": "implicit", "expressions": ["abs2(z1) - 1"]}).system()


def test_malformed_json_reports_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"name": "x",,}')
    with pytest.raises(ManifestError, match="line 1, column"):
        Manifest.load(p)


def test_manifest_round_trip(manifests):
    for m in manifests.values():
        assert Manifest.from_dict(json.loads(m.dumps())) == m
