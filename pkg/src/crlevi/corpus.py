"""Bundled corpus of manifolds with known Levi signatures.

Manifest JSON files live in ``crlevi/corpus``; ``CRLEVI_CORPUS_DIR``
overrides the location.  Expected results are kept here rather than in the
manifests so that manifests carry only the manifest fields.
"""

from __future__ import annotations

import itertools
import os
from pathlib import Path

from .manifest import Manifest

ENV_VAR = "CRLEVI_CORPUS_DIR"

# name -> expectations checked by the corpus runner.
#   signatures: set of signatures that every scan sample must belong to
#   lam: codirection for single-codirection checks; levi: its signature
#   regularity / failures: expected regularity status at lam, and degree -> allowed statuses
EXPECTED = {
    "heisenberg": {
        "signatures": {(1, 0, 0), (0, 1, 0)},
        "lam": [1.0],
        "levi": (1, 0, 0),
        "failures": {1: {"FAILS_STRONG"}},
    },
    "example1": {
        "signatures": {(1, 1, 1)},
        "failures": {1: {"FAILS_STRONG", "FAILS_WEAK"}, 2: {"NO_WITNESS"}, 3: {"NO_WITNESS"}},
    },
    "example2": {
        "signatures": {(1, 1, 1)},
        "failures": {1: {"FAILS_STRONG"}, 2: {"NO_WITNESS"}, 3: {"NO_WITNESS"}},
    },
    "example2_l2_m12": {
        "signatures": {(3, 3, 2)},
        "failures": {3: {"FAILS_STRONG"}},
    },
    "example3": {
        "signatures": {(1, 1, 1)},
        "lam": [1.0, 0.0],
        "levi": (1, 1, 1),
        "failures": {1: {"FAILS_STRONG"}, 2: {"NO_WITNESS"}, 3: {"NO_WITNESS"}},
    },
    "example5": {
        "signatures": {(1, 0, 1), (0, 1, 1)},
        "lam": [1.0],
        "levi": (1, 0, 1),
        "regularity": "INCONCLUSIVE",
        "nearby_rank": 2,
        "failures": {1: {"FAILS_WEAK"}, 2: {"NO_WITNESS"}},
    },
    "example6_local": {
        "signatures": {(2, 0, 1), (0, 2, 1)},
        "lam": [1.0],
        "levi": (2, 0, 1),
        "failures": {2: {"FAILS_STRONG", "FAILS_WEAK"}},
    },
    "closing_example": {
        "signatures": {(1, 0, 1), (0, 1, 1)},
        "lam": [1.0],
        "levi": (1, 0, 1),
        "failures": {1: {"FAILS_STRONG", "FAILS_WEAK"}, 2: {"NO_WITNESS"}},
    },
}


def bundled_dir() -> Path:
    return Path(__file__).with_name("corpus")


def corpus_dir() -> Path:
    env = os.environ.get(ENV_VAR)
    return Path(env) if env else bundled_dir()


def manifest_paths(directory=None):
    d = Path(directory) if directory else corpus_dir()
    if not d.is_dir():
        return []
    return sorted(d.glob("*.json"))


def load(name, directory=None) -> Manifest:
    d = Path(directory) if directory else corpus_dir()
    return Manifest.load(d / f"{name}.json")


# --------------------------------------------------------------- builders
def _leibniz(matrix):
    """Determinant of a square matrix of grammar strings, as a grammar string."""
    size = len(matrix)
    terms = []
    for perm in itertools.permutations(range(size)):
        inversions = sum(1 for a in range(size) for b in range(a + 1, size) if perm[a] > perm[b])
        factors = [matrix[r][perm[r]] for r in range(size)]
        if any(f == "0" for f in factors):
            continue
        negative = inversions % 2 == 1
        for f in factors:
            if f.startswith("-"):
                negative = not negative
        factors = [f.lstrip("-") for f in factors if f != "1"]
        terms.append(("-" if negative else "+", "*".join(factors) or "1"))
    text = ""
    for sign, body in terms:
        text += (" - " if sign == "-" else " + ") + body if text else ("-" if sign == "-" else "") + body
    return text


def quaternionic_flag_determinant():
    """Chart equation of the quaternionic flag example as a complex grammar expression."""
    rows = [
        ["1", "0", "0", "-conj(z1)"],
        ["z1", "1", "0", "1"],
        ["z2", "0", "1", "-conj(z3)"],
        ["z3", "z4", "z5", "conj(z2)"],
    ]
    return _leibniz(rows)


def block_pairing(blocks):
    """Graph functions Im w1 = Im sum z_j^h conj(zeta_j^h), Im w2 = Im sum z_j^{h+1} conj(zeta_j^h).

    ``blocks`` lists m_1..m_l; variables are numbered block by block as
    z_j^1..z_j^{m_j+1} followed by zeta_j^1..zeta_j^{m_j}.
    """
    first, second = [], []
    idx = 1
    for m in blocks:
        zs = list(range(idx, idx + m + 1))
        zetas = list(range(idx + m + 1, idx + 2 * m + 1))
        idx += 2 * m + 1
        for h in range(m):
            first.append(f"z{zs[h]}*conj(z{zetas[h]})")
            second.append(f"z{zs[h + 1]}*conj(z{zetas[h]})")
    n = idx - 1
    return n, [f"Im({' + '.join(first)})", f"Im({' + '.join(second)})"]


def build_manifests():
    """The bundled corpus, as Manifest objects."""
    out = []

    def add(name, n, k, mode, exprs, base, meta):
        out.append(Manifest(name, n, k, mode, exprs, base or ["0"] * (n + k), meta))

    add("heisenberg", 1, 1, "graph", ["abs2(z1)"], None,
        "Heisenberg hypersurface Im w = |z|^2; strictly pseudoconvex.")
    D = quaternionic_flag_determinant()
    add("example1", 3, 2, "implicit", [f"Re({D})", f"Im({D})"], None,
        "Quaternionic flag manifold in the chart (z1..z5) of pairs L1 in L3 of C^4, "
        "written as Re/Im of the 4x4 determinant; slow.")
    n, hs = block_pairing([1])
    add("example2", n, 2, "graph", hs, None, "Block pairing manifold with l=1, m=(1).")
    n, hs = block_pairing([1, 2])
    add("example2_l2_m12", n, 2, "graph", hs, None, "Block pairing manifold with l=2, m=(1,2).")
    add("example3", 3, 2, "graph",
        ["z1*conj(z2) + z2*conj(z1)", "z1*conj(z3) + z3*conj(z1)"], None,
        "Quadric Im w1 = 2 Re(z1 conj(z2)), Im w2 = 2 Re(z1 conj(z3)) in C^5.")
    add("example5", 2, 1, "graph", ["z1*conj(z1) + (z1 + conj(z1))^2*z2*conj(z2)"], None,
        "Hypersurface Im z3 = |z1|^2 + (z1 + conj(z1))^m |z2|^2 with m=2; "
        "the codirection d Re z3 at 0 is regular although the Levi rank jumps nearby.")
    add("example6_local", 3, 1, "implicit", ["abs2(z1) + abs2(z2) + abs2(z3) - 1"],
        ["1", "0", "0", "0"],
        "Convex hypersurface |z|^2 + chi(|w|^2) = 1 in C^3 x C^1 near a point with |w|<1, "
        "where chi vanishes, so the local model |z|^2 = 1 is exact.")
    add("closing_example", 2, 1, "implicit", ["abs2(z1) + abs2(z2) + abs2(z3)^2 - 1"],
        ["1", "0", "0"],
        "Hypersurface |z1|^2 + |z2|^2 + |z3|^(2m) = 1 with m=2 at (1,0,0).")
    return out


def write_bundled(directory=None):
    d = Path(directory) if directory else bundled_dir()
    d.mkdir(parents=True, exist_ok=True)
    for m in build_manifests():
        (d / f"{m.name}.json").write_text(m.dumps())


# ----------------------------------------------------------------- runner
def check_manifest(m: Manifest, samples=64, seed=0):
    """Scan one manifest and compare with EXPECTED. Returns a JSON-ready dict."""
    from .crgeom import characteristic_codirection
    from .levi import failure_report, levi_matrix, regularity_check

    ds = m.system()
    rep = failure_report(ds, N=samples, seed=seed)
    exp = EXPECTED.get(m.name)
    found = {tuple(s) for s in rep.scan.achieved}
    out = {
        "name": m.name,
        "n": m.n,
        "k": m.k,
        "signatures": [list(s) for s in sorted(found, reverse=True)],
        "failures": {str(d.q): d.status for d in rep.degrees},
        "sample_errors": rep.scan.n_errors,
        "checks": {},
    }
    if exp is None:
        out["status"] = "UNCHECKED"
        return out
    checks = out["checks"]
    checks["signatures"] = bool(found) and found <= exp["signatures"] and rep.scan.n_errors == 0
    if "lam" in exp:
        xi = characteristic_codirection(ds, ds.basepoint, exp["lam"])
        sig = levi_matrix(ds, xi).signature
        out["levi"] = list(sig)
        checks["levi"] = sig == exp["levi"]
        if "regularity" in exp or "nearby_rank" in exp:
            reg = regularity_check(ds, xi, seed=seed)
            out["regularity"] = reg.to_dict()
            if "regularity" in exp:
                checks["regularity"] = reg.status == exp["regularity"]
            if "nearby_rank" in exp:
                checks["nearby_rank"] = reg.max_nearby_rank == exp["nearby_rank"]
    for q, allowed in exp.get("failures", {}).items():
        checks[f"degree_{q}"] = rep.status(q) in allowed
    out["status"] = "PASS" if all(checks.values()) else "FAIL"
    return out
