"""Independent reference computations used by the tests."""

import numpy as np

from crlevi.manifest import DefiningSystem
from crlevi.poly import Poly, zbar, zvar


def fd_levi_matrix(ds, x, lam, U, h=1e-4):
    """Levi matrix on the columns of U from finite differences of rho_lam in real coordinates.

    L(u) = (D^2 rho(v, v) + D^2 rho(Jv, Jv)) / 4 with v = u as a real vector,
    and the Hermitian matrix follows by polarization.
    """
    x = np.asarray(x, dtype=complex)
    lam = np.asarray(lam, dtype=float)

    def rho(y):
        return float(lam @ ds.rho_values(y))

    def second(u):
        return (rho(x + h * u) - 2 * rho(x) + rho(x - h * u)) / h ** 2

    def L(c):
        u = U @ c
        return 0.25 * (second(u) + second(1j * u))

    m = U.shape[1]
    E = np.eye(m)
    M = np.zeros((m, m), dtype=complex)
    for a in range(m):
        for b in range(m):
            M[a, b] = 0.25 * sum((1j) ** (-s) * L(E[a] + (1j) ** s * E[b]) for s in range(4))
    return 0.5 * (M + M.conj().T)


def random_hermitian(rng, n):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (A + A.conj().T) / 2


def random_quadric(rng, n, k):
    """Graph quadric s_j = sum_ab H^j[a, b] z_a conj(z_b) with random Hermitian H^j."""
    hs = []
    for _ in range(k):
        H = random_hermitian(rng, n)
        p = Poly.zero()
        for a in range(n):
            for b in range(n):
                p = p + Poly.var(zvar(a + 1)) * Poly.var(zbar(b + 1)) * complex(H[a, b])
        hs.append(p.real_part())
    return DefiningSystem.from_graph(hs, n, k)


def linear_change(ds, A):
    """The same manifold in coordinates z = A z'."""
    N = ds.n + ds.k
    mapping = {}
    for a in range(N):
        lin = Poly({((zvar(b + 1), 1),): complex(A[a, b]) for b in range(N)})
        mapping[zvar(a + 1)] = lin
        mapping[zbar(a + 1)] = lin.conj()
    rho = [r.substitute(mapping).real_part() for r in ds.rho]
    base = np.linalg.solve(A, ds.basepoint)
    return DefiningSystem(ds.n, ds.k, rho, base, name=ds.name, check=False)


def smooth_step(x):
    x = np.clip(x, 0.0, 1.0)
    a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
    b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


def heisenberg_pairing_2d(tau, nu=4.0, R=2.0, inner=0.5, outer=2.0 / 3.0, N=800):
    """|I(tau)| / (tau^(3/2) * 2) for the Heisenberg surface, as a 2-D integral.

    With h = |z|^2, z = sqrt(tau) u, t = sqrt(tau) v and rho = |u|, the integral
    reduces to 2 pi int int rho chi e^{-nu rho^2 - 2 nu v^2 - 4 i nu v sqrt(tau) rho^2
    + 2 nu tau rho^4} d rho dv; the |det| factor is 2 and cancels the 2^n.
    Tensor Gauss-Legendre on the cutoff support.
    """
    out = np.sqrt(outer / (R ** 2 * tau))
    x, w = np.polynomial.legendre.leggauss(N)
    r, wr = (x + 1) / 2 * out, w / 2 * out
    v, wv = x * out, w * out
    rr, vv = np.meshgrid(r, v, indexing="ij")
    chi = 1.0 - smooth_step((R ** 2 * tau * (rr ** 2 + vv ** 2) - inner) / (outer - inner))
    phase = -nu * rr ** 2 - 2 * nu * vv ** 2 - 4j * nu * vv * np.sqrt(tau) * rr ** 2 + 2 * nu * tau * rr ** 4
    f = chi * np.exp(phase) * 2 * np.pi * rr
    return abs(np.sum(np.outer(wr, wv) * f))
