"""Pointwise CR geometry: holomorphic tangent spaces, codirections, the CR frame."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import expr as ex
from .errors import GenericityFailure, NearSingularFrame, ZeroCodirection
from .poly import I, Poly, tvar, zbar, zvar

RANK_TOL = 1e-8
FRAME_COND_MAX = 1e8
FD_STEP = 1e-5


@dataclass
class TangentBasis:
    point: np.ndarray
    basis: np.ndarray  # (n+k) x n, orthonormal columns
    residual: float


@dataclass
class Codirection:
    point: np.ndarray
    lam: np.ndarray

    def negated(self):
        return Codirection(self.point, -self.lam)


@dataclass
class CrFrame:
    zeta: np.ndarray
    t: np.ndarray
    C: np.ndarray  # n x k
    residual: float
    cond: float


def holo_tangent_basis(ds, x=None) -> TangentBasis:
    """Orthonormal basis of the kernel of the k x (n+k) matrix d rho_j / dz^a at x."""
    x = ds.basepoint if x is None else np.asarray(x, dtype=complex)
    A = ds.holo_gradient(x)
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= RANK_TOL:
        raise GenericityFailure(
            f"d rho_1 ^ ... ^ d rho_k vanishes at the point (smallest singular value {sv[-1]:.3g})"
        )
    # Householder QR of A^H with column pivoting; trailing columns of Q span ker A.
    Q, _, _ = scipy.linalg.qr(A.conj().T, pivoting=True)
    U = Q[:, ds.k:]
    residual = float(np.max(np.abs(A @ U))) if U.size else 0.0
    return TangentBasis(point=x, basis=U, residual=residual)


def characteristic_codirection(ds, x, lam) -> Codirection:
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if lam.shape != (ds.k,):
        raise ValueError(f"lambda needs {ds.k} components")
    norm = np.linalg.norm(lam)
    if norm == 0:
        raise ZeroCodirection("lambda must be nonzero")
    x = ds.basepoint if x is None else np.asarray(x, dtype=complex)
    return Codirection(point=x, lam=lam / norm)


def cr_frame(ds, zeta, t) -> CrFrame:
    """Coefficients C with conj-L_a = d/dconj(z^a) + sum_j C[a, j] d/dt^j (graph mode).

    C is pinned by requiring conj-L_a (t^j + i h_j) = 0, i.e.
    (I + i dh/dt) C[a, :] = -i dh/dconj(z^a).
    """
    ds.require_graph()
    zeta = np.asarray(zeta, dtype=complex)
    t = np.asarray(t, dtype=float)
    _, hzb, ht = ds.h_derivatives(zeta, t)
    A = np.eye(ds.k) + 1j * ht
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond >= FRAME_COND_MAX:
        raise NearSingularFrame(f"I + i dh/dt is ill-conditioned (cond {cond:.3g})")
    C = np.linalg.solve(A, -1j * hzb).T
    residual = float(np.max(np.abs(A @ C.T + 1j * hzb)))
    return CrFrame(zeta=zeta, t=t, C=C, residual=residual, cond=cond)


def restrict_to_graph(p: Poly, ds) -> Poly:
    """Pull an ambient polynomial back to M: w_j -> t_j + i h_j."""
    mapping = {}
    for j in range(ds.k):
        tj = Poly.var(tvar(j + 1))
        ih = ds.h[j] * I
        mapping[zvar(ds.n + j + 1)] = tj + ih
        mapping[zbar(ds.n + j + 1)] = tj - ih
    return p.substitute(mapping)


def cr_apply(frame: CrFrame, f, alpha: int, ds=None):
    """Value of conj-L_alpha f at the frame point (alpha is 1-based).

    ``f`` may be grammar text, an Expr or a Poly (ambient variables are first
    restricted to M, which needs ``ds``), or a callable ``f(zeta, t)``, which
    is differentiated with 4th-order central differences.
    """
    n, k = frame.C.shape
    a = alpha - 1
    if callable(f) and not isinstance(f, Poly):
        return _cr_apply_numeric(frame, f, a)
    p = ex.expand(ex.as_expr(f)) if not isinstance(f, Poly) else f
    if any(kind == "z" and idx > n for kind, idx, _ in p.variables()):
        if ds is None:
            raise ValueError("ambient expression needs the defining system to restrict to M")
        p = restrict_to_graph(p, ds)
    env = {("z", b + 1): frame.zeta[b] for b in range(n)}
    env.update({("t", j + 1): frame.t[j] for j in range(k)})
    val = complex(p.diff(zbar(alpha))(env))
    for j in range(k):
        val += frame.C[a, j] * complex(p.diff(tvar(j + 1))(env))
    return val


def _d4(g, h):
    """4th-order central difference of a scalar function of one real variable at 0."""
    return (-g(2 * h) + 8 * g(h) - 8 * g(-h) + g(-2 * h)) / (12 * h)


def _cr_apply_numeric(frame, f, a, step=FD_STEP):
    zeta, t = frame.zeta, frame.t
    scale = max(1.0, float(np.max(np.abs(np.concatenate([zeta, t])))) if zeta.size else 1.0)
    h = step * scale
    e = np.zeros_like(zeta)
    e[a] = 1
    dx = _d4(lambda s: f(zeta + s * e, t), h)
    dy = _d4(lambda s: f(zeta + 1j * s * e, t), h)
    val = 0.5 * (dx + 1j * dy)
    for j in range(len(t)):
        ej = np.zeros_like(t)
        ej[j] = 1
        val += frame.C[a, j] * _d4(lambda s: f(zeta, t + s * ej), h)
    return complex(val)
