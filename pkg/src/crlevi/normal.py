"""Coordinate normalization at a characteristic codirection.

Pipeline (each stage is skipped, i.e. exactly the identity, when its goal
already holds):

1. translate the basepoint to 0;
2. mix the defining functions by an orthogonal matrix whose first row is
   lambda, so that the codirection becomes d^c rho_1;
3. complex-linear change making d rho_j(0) = (i/2) dw_j;
4. re-solve the equations as a graph Im w_j = h_j(zeta, Re w);
5. remove the holomorphic quadratic and (zeta, t), (t, t) terms of h_1 by
   w_1 -> w_1 - i P(zeta, w);
6. diagonalize the Hermitian quadratic part of h_1 to diag(1,..,1, eps).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .crgeom import Codirection, characteristic_codirection, holo_tangent_basis
from .errors import GenericityFailure, NotAtOrigin, NotGraphMode
from .manifest import DefiningSystem
from .poly import I, ONE, Poly, svar, tvar, zbar, zvar

ORDER = 3
COEFF_TOL = 1e-10
CHOP = 1e-14


def _chop(p):
    scale = max(1.0, p.max_abs_coeff())
    if p.is_exact():
        return p
    return p.chop(CHOP * scale)


def _real(p):
    return p if p.is_exact() and p.is_real() else _chop(p.real_part())


def linear_substitution(p, M, offset=None):
    """p(z) with z = M z' (+ offset); conj(z) follows by conjugation."""
    N = M.shape[0]
    mapping = {}
    for a in range(N):
        lin = Poly({((zvar(b + 1), 1),): M[a, b] for b in range(N) if M[a, b] != 0})
        if offset is not None and offset[a] != 0:
            lin = lin + complex(offset[a])
        mapping[zvar(a + 1)] = lin
        mapping[zbar(a + 1)] = lin.conj()
    return _chop(p.substitute(mapping))


def householder_mix(lam):
    """Orthogonal symmetric O with first row lam (identity when lam = e1)."""
    k = len(lam)
    e1 = np.zeros(k)
    e1[0] = 1.0
    if np.array_equal(lam, e1):
        return np.eye(k)
    v = e1 - lam
    return np.eye(k) - 2.0 * np.outer(v, v) / (v @ v)


def resolve_graph(rho, n, k, order=ORDER):
    """Graph functions h_j(zeta, t) from rho_j = -Im w_j + O(2).

    Solves s = G(zeta, t, s) by iteration; exact when G does not involve s.
    Returns (h, exact).
    """
    mapping = {}
    for j in range(k):
        tj, sj = Poly.var(tvar(j + 1)), Poly.var(svar(j + 1))
        mapping[zvar(n + j + 1)] = tj + sj * I
        mapping[zbar(n + j + 1)] = tj - sj * I
    G = []
    for j, r in enumerate(rho):
        g = _chop(r.substitute(mapping) + Poly.var(svar(j + 1)))
        lin = g.truncate(1)
        if lin.max_abs_coeff() > COEFF_TOL * max(1.0, g.max_abs_coeff()):
            raise GenericityFailure("defining functions are not in normal linear position")
        G.append(g - lin)
    uses_s = any(v[0] == "s" for g in G for v in g.variables())
    if not uses_s:
        return [_real(g) for g in G], True
    s = [Poly.zero() for _ in range(k)]
    for _ in range(order):
        sub = {svar(j + 1): s[j] for j in range(k)}
        s = [_chop(g.substitute(sub, truncate=order)) for g in G]
    return [_real(x) for x in s], False


def _quadratic_split(h1, n, k):
    """(Hermitian matrix H[a, b] of zeta_a conj(zeta_b), non-Hermitian quadratic monomials)."""
    H = np.zeros((n, n), dtype=complex)
    other = {}
    for m, c in h1.homogeneous(2).terms.items():
        vars_ = [v for v, e in m for _ in range(e)]
        zs = [v for v in vars_ if v[0] == "z" and v[2] == 0]
        zbs = [v for v in vars_ if v[0] == "z" and v[2] == 1]
        if len(zs) == 1 and len(zbs) == 1:
            H[zs[0][1] - 1, zbs[0][1] - 1] += complex(c)
        else:
            other[m] = c
    return H, other


def holomorphic_correction(h1, n, k):
    """Holomorphic quadratic P(zeta, w) with Re P(zeta, t) = non-Hermitian quadratic part of h1."""
    _, other = _quadratic_split(h1, n, k)
    terms = {}
    for m, c in other.items():
        if any(v[2] == 1 for v, _ in m):
            continue  # conjugate partner of a holomorphic term
        ts = all(v[0] == "t" for v, _ in m)
        mono = tuple(sorted(((zvar(n + v[1]) if v[0] == "t" else v), e) for v, e in m))
        terms[mono] = c.real if ts else 2 * c
    return Poly(terms)


@dataclass
class NormalizedSystem:
    original: DefiningSystem
    codirection: Codirection
    system: DefiningSystem  # final graph system at 0
    mix: np.ndarray  # k x k orthogonal
    linear: np.ndarray  # forward (n+k) x (n+k): new = linear @ (z - x0)
    linear_inverse: np.ndarray
    correction: Poly  # P(zeta, w): w_1 -> w_1 - i P
    diag: np.ndarray  # zeta = diag @ zeta''
    q: int
    eps: np.ndarray
    order: int = ORDER
    exact: bool = True
    steps: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.system.n

    @property
    def k(self):
        return self.system.k

    @property
    def h(self):
        return self.system.h

    @property
    def composed_linear(self):
        """Linear part of the map from final coordinates to the original ones."""
        N = self.n + self.k
        B = np.eye(N, dtype=complex)
        B[: self.n, : self.n] = self.diag
        return self.linear_inverse @ B

    @property
    def cond(self):
        return float(np.linalg.cond(self.composed_linear))

    def is_identity(self):
        return not any(self.steps.values())

    def hermitian_part(self):
        H, _ = _quadratic_split(self.h[0], self.n, self.k)
        return H

    def back_map(self, zeta, t):
        """Point of the original ambient space corresponding to final graph coordinates."""
        y = self.system.graph_point(zeta, t)
        n = self.n
        zeta1 = self.diag @ y[:n]
        w = y[n:].copy()
        if not self.correction.is_zero():
            wt = w.copy()
            for _ in range(50):
                env = {("z", a + 1): zeta1[a] for a in range(n)}
                env.update({("z", n + j + 1): w[j] for j in range(self.k)})
                new = wt[0] + 1j * complex(self.correction(env))
                if abs(new - w[0]) < 1e-15:
                    break
                w[0] = new
        local = self.linear_inverse @ np.concatenate([zeta1, w])
        return self.codirection.point + local

    def to_dict(self):
        cpx = lambda a: [[float(z.real), float(z.imag)] for z in np.ravel(a)]
        return {
            "n": self.n,
            "k": self.k,
            "q": self.q,
            "eps": self.eps.tolist(),
            "order": self.order,
            "exact": self.exact,
            "steps": dict(sorted(self.steps.items())),
            "basepoint": cpx(self.codirection.point),
            "lambda": self.codirection.lam.tolist(),
            "mix": self.mix.tolist(),
            "linear": cpx(self.linear),
            "linear_shape": list(self.linear.shape),
            "diag": cpx(self.diag),
            "correction": ex.to_string(ex.from_poly(self.correction)),
            "h": [ex.to_string(ex.from_poly(p)) for p in self.h],
            "cond": self.cond,
        }


def _require_graph_origin(ds):
    if not ds.is_graph:
        raise NotGraphMode("expected a graph-mode system")
    if np.any(ds.basepoint != 0):
        raise NotAtOrigin("expected the basepoint at the origin")


def eliminate_holomorphic_quadratic(ds, order=ORDER):
    """Remove zeta zeta, conj-zeta conj-zeta, zeta t and t t terms from the quadratic part of h_1.

    Returns (new graph system, P, exact) where the substitution is
    w_1 -> w_1 - i P(zeta, w).
    """
    _require_graph_origin(ds)
    n, k = ds.n, ds.k
    for p in ds.h:
        if p.truncate(1).max_abs_coeff() > COEFF_TOL:
            raise NotAtOrigin("graph functions must vanish to second order at 0")
    P = holomorphic_correction(ds.h[0], n, k)
    P = P.chop(COEFF_TOL) if not P.is_exact() else P
    if P.is_zero():
        return ds, P, True
    # invert w~_1 = w_1 - i P(zeta, w): w_1 = w~_1 + i P(zeta, w)
    w1 = Poly.var(zvar(n + 1))
    for _ in range(order):
        w1 = Poly.var(zvar(n + 1)) + P.substitute({zvar(n + 1): w1}, truncate=order) * I
    w1 = w1.truncate(order)
    mapping = {zvar(n + 1): w1, zbar(n + 1): w1.conj()}
    rho = [r.substitute(mapping, truncate=order + 1) for r in ds.rho]
    h, _ = resolve_graph(rho, n, k, order)
    h = [p.truncate(order) for p in h]
    return DefiningSystem.from_graph(h, n, k, name=ds.name, check=False), P, False


def sylvester_transform(H):
    """(S, eps, q): zeta = S zeta'' turns sum H[a,b] zeta_a conj(zeta_b) into sum eps_a |zeta''_a|^2.

    Ordering is positives, negatives, zeros; positives become exactly 1.
    """
    n = H.shape[0]
    K = H.T
    K = 0.5 * (K + K.conj().T)
    mu, V = np.linalg.eigh(K)
    tol = 1e-8 * (1.0 + float(np.max(np.abs(mu), initial=0.0)))
    pos = [i for i in np.argsort(-mu) if mu[i] > tol]
    neg = [i for i in np.argsort(mu) if mu[i] < -tol]
    zer = [i for i in range(n) if abs(mu[i]) <= tol]
    order = pos + neg + zer
    eps = np.array([1.0] * len(pos) + [-1.0] * len(neg) + [0.0] * len(zer))
    target = np.diag(eps).astype(complex)
    if np.max(np.abs(H - target), initial=0.0) <= 1e-12:
        return np.eye(n, dtype=complex), eps, len(pos)
    scale = np.array([1.0 / np.sqrt(abs(mu[i])) if abs(mu[i]) > tol else 1.0 for i in order])
    S = V[:, order] * scale
    return S, eps, len(pos)


def diagonalize_hermitian(ds):
    """Apply zeta = S zeta'' to every graph function. Returns (system, S, eps, q)."""
    _require_graph_origin(ds)
    n, k = ds.n, ds.k
    H, _ = _quadratic_split(ds.h[0], n, k)
    S, eps, q = sylvester_transform(H)
    if np.array_equal(S, np.eye(n)):
        return ds, S, eps, q
    M = np.eye(n + k, dtype=complex)
    M[:n, :n] = S
    h = []
    for p in ds.h:
        mapping = {}
        for a in range(n):
            lin = Poly({((zvar(b + 1), 1),): S[a, b] for b in range(n) if S[a, b] != 0})
            mapping[zvar(a + 1)] = lin
            mapping[zbar(a + 1)] = lin.conj()
        h.append(_real(p.substitute(mapping)))
    return DefiningSystem.from_graph(h, n, k, name=ds.name, check=False), S, eps, q


def normalize(ds, xi: Codirection = None, lam=None, order=ORDER) -> NormalizedSystem:
    if xi is None:
        xi = characteristic_codirection(ds, ds.basepoint, lam if lam is not None else np.eye(ds.k)[0])
    n, k = ds.n, ds.k
    N = n + k
    holo_tangent_basis(ds, xi.point)  # genericity check
    x0 = np.asarray(xi.point, dtype=complex)
    O = householder_mix(xi.lam)
    steps = {"translate": bool(np.any(x0 != 0)), "mix": not np.array_equal(O, np.eye(k))}
    exact = True
    if ds.is_graph and not steps["translate"] and not steps["mix"]:
        graph = ds
        P_fwd = P_inv = np.eye(N, dtype=complex)
        steps.update(linear=False, resolve=False)
    else:
        rho = [linear_substitution(r, np.eye(N), x0) if steps["translate"] else r for r in ds.rho]
        if steps["mix"]:
            rho = [_chop(sum((r * float(O[i, j]) for j, r in enumerate(rho) if O[i, j] != 0), Poly.zero()))
                   for i in range(k)]
        A = np.array([[complex(r.coeff([(zvar(a + 1), 1)])) for a in range(N)] for r in rho])
        wblock = A[:, n:]
        if np.linalg.svd(wblock, compute_uv=False)[-1] > 1e-6:
            P_fwd = np.vstack([np.hstack([np.eye(n), np.zeros((n, k))]), -2j * A]).astype(complex)
        else:
            U = holo_tangent_basis(ds, x0).basis  # kernel of A as well (mixing is invertible)
            P_fwd = np.vstack([U.conj().T, -2j * A])
        steps["linear"] = not np.array_equal(P_fwd, np.eye(N))
        P_inv = np.linalg.inv(P_fwd) if steps["linear"] else np.eye(N, dtype=complex)
        if steps["linear"]:
            rho = [linear_substitution(r, P_inv) for r in rho]
        h, exact = resolve_graph(rho, n, k, order)
        if not exact:
            h = [p.truncate(order) for p in h]
        steps["resolve"] = True
        graph = DefiningSystem.from_graph(h, n, k, name=ds.name, check=False)
    graph2, P, exact2 = eliminate_holomorphic_quadratic(graph, order)
    steps["eliminate"] = not P.is_zero()
    graph3, S, eps, q = diagonalize_hermitian(graph2)
    steps["diagonalize"] = not np.array_equal(S, np.eye(n))
    return NormalizedSystem(
        original=ds, codirection=xi, system=graph3, mix=O, linear=P_fwd, linear_inverse=P_inv,
        correction=P, diag=S, q=q, eps=eps[q:], order=order, exact=exact and exact2, steps=steps,
    )
