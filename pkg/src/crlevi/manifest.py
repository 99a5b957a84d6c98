"""Manifest files and the in-memory defining system built from them.

Coordinates
-----------
Ambient points are always stored as ``n + k`` complex numbers
``(z1, ..., z_{n+k})``.  In graph mode the last ``k`` coordinates are
``w_j = t_j + i s_j`` and the manifold is ``s_j = h_j(z1..zn, t)``; the
implicit defining functions are ``rho_j = h_j - Im w_j``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import expr as ex
from .errors import CRLeviError, ManifestError, NotGraphMode
from .poly import HALF, GaussianRational, Poly, tvar, zbar, zvar

BASEPOINT_TOL = 1e-10
MANIFEST_FIELDS = ("name", "n", "k", "mode", "expressions", "basepoint", "metadata")


@dataclass
class Manifest:
    name: str
    n: int
    k: int
    mode: str
    expressions: list
    basepoint: list
    metadata: str = ""

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ManifestError("manifest must be a JSON object")
        missing = [f for f in MANIFEST_FIELDS if f not in data and f != "metadata"]
        if missing:
            raise ManifestError(f"manifest is missing fields: {', '.join(missing)}")
        extra = sorted(set(data) - set(MANIFEST_FIELDS))
        if extra:
            raise ManifestError(f"unknown manifest fields: {', '.join(extra)}")
        m = cls(
            name=str(data["name"]),
            n=data["n"],
            k=data["k"],
            mode=data["mode"],
            expressions=list(data["expressions"]),
            basepoint=[str(b) for b in data["basepoint"]],
            metadata=str(data.get("metadata", "")),
        )
        m.check_shape()
        return m

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as err:
            raise ManifestError(f"{path}: malformed JSON at line {err.lineno}, column {err.colno}: {err.msg}") from None
        except OSError as err:
            raise ManifestError(f"{path}: {err.strerror}") from None
        try:
            return cls.from_dict(data)
        except CRLeviError as err:
            raise ManifestError(f"{path}: {err}") from None

    def to_dict(self):
        return {f: getattr(self, f) for f in MANIFEST_FIELDS}

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def check_shape(self):
        if not (isinstance(self.n, int) and isinstance(self.k, int)) or self.n < 1 or self.k < 1:
            raise ManifestError("n and k must be integers >= 1")
        if self.mode not in ("implicit", "graph"):
            raise ManifestError(f"mode must be 'implicit' or 'graph', got {self.mode!r}")
        if len(self.expressions) != self.k:
            raise ManifestError(f"expected {self.k} expressions, got {len(self.expressions)}")
        if len(self.basepoint) != self.n + self.k:
            raise ManifestError(f"basepoint needs {self.n + self.k} complex coordinates")

    def system(self):
        return DefiningSystem.from_manifest(self)


def parse_constant(text):
    """Grammar constant (e.g. '1', '1/2 - 3*i') -> complex."""
    e = ex.parse(text)
    if ex.variables(e):
        raise ManifestError(f"basepoint entry {text!r} is not a constant")
    return complex(ex.evaluate(e, {}))


def restrict_graph(p, n, k):
    """Replace t_j by (w_j + conj(w_j))/2, turning a graph function into an ambient one."""
    mapping = {}
    for j in range(1, k + 1):
        mapping[tvar(j)] = (Poly.var(zvar(n + j)) + Poly.var(zbar(n + j))) * HALF
    return p.substitute(mapping)


def im_of_var(idx):
    """Im z_idx as a polynomial."""
    return (Poly.var(zvar(idx)) - Poly.var(zbar(idx))) * GaussianRational(0, -HALF.re)


class DefiningSystem:
    """k real defining polynomials on C^{n+k}, with cached derivative polynomials."""

    def __init__(self, n, k, rho, basepoint, h=None, name="", check=True):
        self.n, self.k = n, k
        self.name = name
        self.rho = list(rho)
        self.h = list(h) if h is not None else None
        self.basepoint = np.asarray(basepoint, dtype=complex)
        N = n + k
        self._d = [[r.diff(zvar(a + 1)) for a in range(N)] for r in self.rho]
        self._dd = [[[d.diff(zbar(b + 1)) for b in range(N)] for d in row] for row in self._d]
        if self.h is not None:
            self._hz = [[p.diff(zvar(a + 1)) for a in range(n)] for p in self.h]
            self._hzb = [[p.diff(zbar(a + 1)) for a in range(n)] for p in self.h]
            self.dh_dt = [[p.diff(tvar(j + 1)) for j in range(k)] for p in self.h]
        if check:
            self._validate()

    # construction -------------------------------------------------------
    @classmethod
    def from_graph(cls, h, n, k, basepoint=None, name="", check=True):
        h = list(h)
        for p in h:
            for kind, idx, _ in p.variables():
                if kind == "z" and idx > n or kind == "t" and idx > k or kind == "s":
                    raise ManifestError(f"graph function mentions a variable outside z1..z{n}, t1..t{k}")
        rho = [restrict_graph(p, n, k) - im_of_var(n + j + 1) for j, p in enumerate(h)]
        if basepoint is None:
            basepoint = np.zeros(n + k, dtype=complex)
        return cls(n, k, rho, basepoint, h=h, name=name, check=check)

    @classmethod
    def from_manifest(cls, m: Manifest):
        m.check_shape()
        polys = []
        for text in m.expressions:
            e = ex.parse(text)
            p = ex.expand(e)
            if not p.is_real(1e-12):
                raise ManifestError(f"expression is not real-valued: {text!r}")
            polys.append(p)
        base = [parse_constant(b) for b in m.basepoint]
        if m.mode == "graph":
            return cls.from_graph(polys, m.n, m.k, base, name=m.name)
        for p in polys:
            for kind, idx, _ in p.variables():
                if kind != "z" or idx > m.n + m.k:
                    raise ManifestError(f"implicit expressions may only use z1..z{m.n + m.k}")
        return cls(m.n, m.k, polys, base, name=m.name)

    def _validate(self):
        for p in self.rho:
            if not p.is_real(1e-12):
                raise ManifestError("defining functions must be real-valued")
        vals = self.rho_values(self.basepoint)
        if np.max(np.abs(vals)) > BASEPOINT_TOL:
            raise ManifestError(f"basepoint is not on the manifold (|rho| = {np.max(np.abs(vals)):.3g})")

    @property
    def is_graph(self):
        return self.h is not None

    def require_graph(self):
        if not self.is_graph:
            raise NotGraphMode("operation requires a graph-mode system")

    # evaluation ---------------------------------------------------------
    def env(self, x):
        x = np.asarray(x)
        return {("z", a + 1): x[..., a] for a in range(self.n + self.k)}

    def graph_env(self, zeta, t):
        zeta = np.asarray(zeta)
        t = np.asarray(t)
        env = {("z", a + 1): zeta[..., a] for a in range(self.n)}
        env.update({("t", j + 1): t[..., j] for j in range(self.k)})
        return env

    def rho_values(self, x):
        env = self.env(x)
        return np.real(np.stack([np.broadcast_to(p(env), np.shape(x)[:-1]) for p in self.rho], axis=-1))

    def holo_gradient(self, x):
        """k x (n+k) matrix of d rho_j / d z^a at x."""
        env = self.env(x)
        return np.array([[complex(d(env)) for d in row] for row in self._d])

    def complex_hessian(self, x, j):
        """H[a, b] = d^2 rho_j / dz^a dconj(z^b) at x."""
        env = self.env(x)
        return np.array([[complex(d(env)) for d in row] for row in self._dd[j]])

    def real_jacobian(self, x):
        """k x 2(n+k) Jacobian of rho in the real coordinates (Re z, Im z)."""
        G = self.holo_gradient(x)
        return np.hstack([2 * G.real, -2 * G.imag])

    def h_values(self, zeta, t):
        self.require_graph()
        env = self.graph_env(zeta, t)
        shape = np.shape(zeta)[:-1]
        return np.real(np.stack([np.broadcast_to(p(env), shape) for p in self.h], axis=-1))

    def h_derivatives(self, zeta, t):
        """(dh/dz, dh/dconj(z), dh/dt) at one graph point: shapes k x n, k x n, k x k."""
        self.require_graph()
        env = self.graph_env(zeta, t)
        ev = lambda rows: np.array([[complex(d(env)) for d in row] for row in rows])
        return ev(self._hz), ev(self._hzb), np.real(ev(self.dh_dt))

    def graph_point(self, zeta, t):
        """Ambient point (zeta, t + i h(zeta, t))."""
        zeta = np.asarray(zeta, dtype=complex)
        t = np.asarray(t, dtype=float)
        w = t + 1j * self.h_values(zeta, t)
        return np.concatenate([zeta, w], axis=-1)

    def graph_coords(self, x):
        """Inverse of graph_point: ambient point -> (zeta, t)."""
        x = np.asarray(x, dtype=complex)
        return x[..., : self.n], x[..., self.n:].real

    def project(self, x, tol=1e-13, maxiter=50):
        """Newton projection onto M with the min-norm pseudo-inverse of the real Jacobian."""
        x = np.asarray(x, dtype=complex).copy()
        N = self.n + self.k
        for _ in range(maxiter):
            r = self.rho_values(x)
            if np.max(np.abs(r)) < tol:
                break
            J = self.real_jacobian(x)
            step = np.linalg.pinv(J) @ r
            x = x - (step[:N] + 1j * step[N:])
        return x
