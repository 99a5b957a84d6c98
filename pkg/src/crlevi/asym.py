"""Exponential test forms, the pairing integral and its tau-scaling, sup bounds, shrink law.

Everything here works on a normalized graph system (see ``normal``) in the
coordinates (zeta, t) at the origin, where

    phi   = -i t_1 + h_1 - nu sum_{a in P} |zeta_a|^2 - nu sum_j (t_j + i h_j)^2
    psi   =  i t_1 - h_1 - nu sum_{a not in P} |zeta_a|^2 - nu sum_j (t_j + i h_j)^2
    sigma = phi + psi = -nu |zeta|^2 - 2 nu sum_j (t_j + i h_j)^2

with P = {1..q} the positive directions of the Levi form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq, minimize

from . import expr as ex
from .crgeom import cr_apply, cr_frame
from .errors import DegenerateFit, InsufficientSpan, NuTooSmall, QuadratureNotConverged
from .poly import GaussianRational, I, Poly, tvar, zbar, zvar
from .quadrature import (PolarGrid, adaptive_gauss_weighted, adaptive_polar, monte_carlo_gauss_weighted,
                         qmc_gauss_weighted)

DEFAULT_NU = 4
TAU_GRID = tuple(10.0 ** (-1 - 0.25 * i) for i in range(9))
FIT_MAX_TAU = 10.0 ** -1.5
R_GRID = (0.2, 0.1, 0.05, 0.025)
BIG_R_GRID = (10.0, 20.0, 40.0, 80.0, 160.0)
R_LADDER = (1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0)
STARTS = 64


def _exact(x):
    if isinstance(x, (int, Fraction)):
        return GaussianRational(x)
    if isinstance(x, float) and x.is_integer():
        return GaussianRational(int(x))
    return x


def _abs2(a):
    return Poly.var(zvar(a)) * Poly.var(zbar(a))


@dataclass
class PhasePair:
    ns: object  # NormalizedSystem
    nu: float
    q: int
    p: int
    d: int
    phi: Poly
    psi: Poly
    sigma: Poly

    @property
    def n(self):
        return self.ns.n

    @property
    def k(self):
        return self.ns.k

    @property
    def h(self):
        return self.ns.h

    @property
    def positive(self):
        return list(range(self.d + 1, self.d + self.q + 1))

    def expressions(self):
        return {name: ex.from_poly(getattr(self, name)) for name in ("phi", "psi", "sigma")}

    def sigma_target(self):
        nu = _exact(self.nu)
        out = Poly.zero()
        for a in range(1, self.n + 1):
            out = out - _abs2(a) * nu
        for j, hj in enumerate(self.h):
            w = Poly.var(tvar(j + 1)) + hj * I
            out = out - w * w * (2 * nu)
        return out

    def sigma_identity_holds(self):
        """sigma == -nu |zeta|^2 - 2 nu sum (t + i h)^2, coefficient by coefficient."""
        return (self.sigma - self.sigma_target()).is_zero()


def nu_threshold(ns):
    eps = [1.0] * ns.q + [abs(float(e)) for e in ns.eps]
    return 1.0 + max(eps, default=0.0)


def build_phases(ns, nu=DEFAULT_NU, p=0, d=0) -> PhasePair:
    if nu <= nu_threshold(ns):
        raise NuTooSmall(f"nu must exceed {nu_threshold(ns):g}, got {nu:g}")
    n, k, q = ns.n, ns.k, ns.q
    nu_c = _exact(nu)
    gauss = Poly.zero()
    for j, hj in enumerate(ns.h):
        w = Poly.var(tvar(j + 1)) + hj * I
        gauss = gauss + w * w
    P = set(range(d + 1, d + q + 1))
    in_p = sum((_abs2(a) for a in sorted(P)), Poly.zero())
    out_p = sum((_abs2(a) for a in range(1, n + 1) if a not in P), Poly.zero())
    lead = Poly.var(tvar(1)) * I
    h1 = ns.h[0]
    phi = -lead + h1 - in_p * nu_c - gauss * nu_c
    psi = lead - h1 - out_p * nu_c - gauss * nu_c
    pp = PhasePair(ns, nu, q, p, d, phi, psi, phi + psi)
    if not pp.sigma_identity_holds():
        raise ArithmeticError("sigma identity failed")
    return pp


# ------------------------------------------------------------------ closure
def verify_form_closure(pp: PhasePair, tau, points=16, radius=0.2, seed=0):
    """Max relative |conj-L_b exp(phase/tau)| over the closure-relevant indices.

    f = exp(phi/tau) dzbar^P needs conj-L_b phi = 0 for b outside P, and
    g = exp(psi/tau) dzbar^{not P} needs conj-L_b psi = 0 for b in P.
    """
    n, k = pp.n, pp.k
    ds = pp.ns.system
    P = set(pp.positive)
    checks = [(pp.phi, [b for b in range(1, n + 1) if b not in P]),
              (pp.psi, sorted(P))]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for phase, idx in checks:
        if not idx:
            continue
        for _ in range(points):
            v = rng.standard_normal(2 * n + k)
            v *= radius * rng.uniform() / np.linalg.norm(v)
            zeta, t = v[:n] + 1j * v[n:2 * n], v[2 * n:]
            frame = cr_frame(ds, zeta, t)
            env = ds.graph_env(zeta, t)
            val = complex(phase(env))
            size = np.exp(val.real / tau)
            grad = max(abs(complex(phase.diff(var)(env))) for var in phase.variables()) if phase.variables() else 0.0
            scale = size * (1.0 + grad / tau)
            for b in idx:
                lb = cr_apply(frame, phase, b)
                worst = max(worst, abs(lb) / tau * size / scale)
    return worst


# ------------------------------------------------------------------- cutoff
def _smooth_step(x):
    """0 for x <= 0, 1 for x >= 1, C-infinity in between (exp(-1/x) gluing)."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
    return a / (a + b)


@dataclass
class CutoffSpec:
    R: float
    inner: float = 0.5
    outer: float = 2.0 / 3.0

    def __call__(self, r2):
        """chi(R zeta, R t) given r2 = |zeta|^2 + |t|^2."""
        s = (self.R ** 2 * np.asarray(r2) - self.inner) / (self.outer - self.inner)
        return 1.0 - _smooth_step(s)

    def support_radius(self):
        return np.sqrt(self.outer) / self.R


# ---------------------------------------------------------- maximization
class _RealPoly:
    """Real part of a polynomial in (zeta, t) as a function on R^{2n+k} with gradient."""

    def __init__(self, poly, n, k):
        self.p = poly
        self.n, self.k = n, k
        self.dz = [poly.diff(zvar(a + 1)) for a in range(n)]
        self.dzb = [poly.diff(zbar(a + 1)) for a in range(n)]
        self.dt = [poly.diff(tvar(j + 1)) for j in range(k)]

    def env(self, x):
        n = self.n
        e = {("z", a + 1): x[..., a] + 1j * x[..., n + a] for a in range(n)}
        e.update({("t", j + 1): x[..., 2 * n + j] for j in range(self.k)})
        return e

    def __call__(self, x):
        return float(np.real(self.p(self.env(x))))

    def values(self, X):
        return np.real(np.broadcast_to(self.p(self.env(X)), X.shape[:-1]))

    def grad(self, x):
        e = self.env(x)
        gz = [complex(d(e)) for d in self.dz]
        gzb = [complex(d(e)) for d in self.dzb]
        gx = [(a + b).real for a, b in zip(gz, gzb)]
        gy = [(1j * (a - b)).real for a, b in zip(gz, gzb)]
        gt = [complex(d(e)).real for d in self.dt]
        return np.array(gx + gy + gt)


@dataclass
class SupResult:
    value: float
    point: list


def maximize_on_shell(poly, n, k, rmax, rmin=0.0, starts=STARTS, seed=0) -> SupResult:
    """Multistart SLSQP maximum of Re(poly) over rmin <= |(zeta, t)| <= rmax."""
    f = _RealPoly(poly, n, k)
    dim = 2 * n + k
    if rmax <= 0:
        return SupResult(f(np.zeros(dim)), [0.0] * dim)
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((starts, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = rmin + (rmax - rmin) * rng.uniform(size=starts) ** (1.0 / dim)
    x0s = dirs * radii[:, None]
    if rmin == 0:
        x0s = np.vstack([np.zeros(dim), x0s])
    cons = [{"type": "ineq", "fun": lambda x: rmax ** 2 - x @ x, "jac": lambda x: -2 * x}]
    if rmin > 0:
        cons.append({"type": "ineq", "fun": lambda x: x @ x - rmin ** 2, "jac": lambda x: 2 * x})
    best_val, best_x = -np.inf, None
    for x0 in x0s:
        cand = [x0]
        try:
            res = minimize(lambda x: -f(x), x0, jac=lambda x: -f.grad(x), method="SLSQP",
                           constraints=cons, options={"maxiter": 200, "ftol": 1e-15})
            cand.append(res.x)
        except (ValueError, np.linalg.LinAlgError):
            pass
        for x in cand:
            r = np.linalg.norm(x)
            if r > rmax:
                x = x * (rmax / r)
            elif r < rmin:
                x = x * (rmin / r) if r > 0 else dirs[0] * rmin
            val = f(x)
            if val > best_val:
                best_val, best_x = val, x
    return SupResult(float(best_val), [float(v) for v in best_x])


def re_phi(pp):
    return pp.phi.real_part()


def re_psi(pp):
    return pp.psi.real_part()


def sup_re_phi(pp: PhasePair, r, starts=STARTS, seed=0) -> SupResult:
    """sup of Re phi over the ball of radius r in graph coordinates."""
    return maximize_on_shell(re_phi(pp), pp.n, pp.k, r, 0.0, starts, seed)


def phi_remainder_bound(pp: PhasePair, r, starts=STARTS, seed=0) -> float:
    """sup over B(r) of |Re phi - (quadratic Taylor part of Re phi)|.

    The quadratic part is <= 0 for nu above threshold, so this bounds sup Re phi.
    """
    rp = re_phi(pp)
    rem = rp - rp.truncate(2)
    if rem.is_zero():
        return 0.0
    hi = maximize_on_shell(rem, pp.n, pp.k, r, 0.0, starts, seed).value
    lo = maximize_on_shell(-rem, pp.n, pp.k, r, 0.0, starts, seed).value
    return max(hi, lo, 0.0)


def sup_re_psi_annulus(pp: PhasePair, R, r=None, cutoff=None, starts=STARTS, seed=0) -> SupResult:
    """sup of Re psi over the transition shell R^-2/2 <= |zeta|^2 + |t|^2 <= (2/3) R^-2."""
    if r is not None and not 1.0 / R < r:
        raise ValueError("need 1/R < r")
    c = cutoff or CutoffSpec(R)
    rmin = np.sqrt(c.inner) / R
    rmax = np.sqrt(c.outer) / R
    return maximize_on_shell(re_psi(pp), pp.n, pp.k, rmax, rmin, starts, seed)


def choose_cutoff(pp: PhasePair, ladder=R_LADDER, starts=STARTS, seed=0) -> CutoffSpec:
    """Smallest R on the ladder with Re sigma <= -(nu/2)|zeta|^2 - nu|t|^2 on the support."""
    nu = _exact(pp.nu)
    margin = pp.sigma.real_part()
    for a in range(1, pp.n + 1):
        margin = margin + _abs2(a) * (nu / 2)
    for j in range(pp.k):
        margin = margin + Poly.var(tvar(j + 1)) * Poly.var(tvar(j + 1)) * nu
    for R in ladder:
        c = CutoffSpec(R)
        top = maximize_on_shell(margin, pp.n, pp.k, c.support_radius(), 0.0, starts, seed).value
        if top <= 1e-12:
            return c
    raise DegenerateFit("no cutoff scale on the ladder keeps the Gaussian bound")


# ---------------------------------------------------------------- pairing
def jacobian_constant(n, k, p, q):
    """Orientation constant of dz^1..dz^{n+k} ^ dzbar^1..dzbar^n restricted to the graph."""
    sign = (-1) ** (n * k) * (-1) ** (n * (n - 1) // 2) * (-1) ** ((n + k - p) * q)
    return sign * (-2j) ** n


def _graph_arrays(pp, X, scale):
    """h and dh/dt at zeta = scale*(x + i y), t = scale*v for rows X = (x, y, v)."""
    n, k = pp.n, pp.k
    zeta = scale * (X[:, :n] + 1j * X[:, n:2 * n])
    t = scale * X[:, 2 * n:]
    env = {("z", a + 1): zeta[:, a] for a in range(n)}
    env.update({("t", j + 1): t[:, j] for j in range(k)})
    m = len(X)
    h = np.stack([np.real(np.broadcast_to(p(env), (m,))) for p in pp.h], axis=1)
    ds = pp.ns.system
    T = np.empty((m, k, k))
    for l in range(k):
        for j in range(k):
            T[:, l, j] = np.real(np.broadcast_to(ds.dh_dt[l][j](env), (m,)))
    return h, T


def pairing_integrand(pp: PhasePair, cutoff: CutoffSpec, tau, with_cutoff=True):
    """g(x) such that I(tau) = tau^(n+k/2) int g(x) exp(-nu|x_zeta|^2 - 2nu|x_t|^2) dx.

    With ``with_cutoff=False`` the factor chi is left out (it is then supplied
    by the radial rule of a polar grid).
    """
    n, k = pp.n, pp.k
    nu = float(pp.nu)
    rt = np.sqrt(tau)
    const = jacobian_constant(n, k, pp.p, pp.q)

    def g(X):
        X = np.atleast_2d(X)
        r2 = tau * np.sum(X ** 2, axis=1)
        chi = cutoff(r2) if with_cutoff else np.ones(len(X))
        out = np.zeros(len(X), dtype=complex)
        live = chi > 0
        if not np.any(live):
            return out
        Xl = X[live]
        h, T = _graph_arrays(pp, Xl, rt)
        H = h / rt
        v = Xl[:, 2 * n:]
        # sigma/tau + nu|u|^2 + 2 nu|v|^2 = -2 nu sum (2 i v H - H^2)
        expo = -2.0 * nu * np.sum(2j * v * H - H ** 2, axis=1)
        det = np.linalg.det(np.eye(k)[None] + 1j * T) if k > 1 else 1 + 1j * T[:, 0, 0]
        out[live] = chi[live] * np.exp(expo) * det * const
        return out

    scales = [nu] * (2 * n) + [2 * nu] * k
    return g, scales


@dataclass
class PairingResult:
    tau: float
    value: complex
    level: int
    converged: bool
    method: str = "hermite"
    mc: tuple = None  # (estimate, standard error) of the same integral

    @property
    def magnitude(self):
        return abs(self.value)


def quadrature_method(pp, cutoff, tau, decay=20.0, max_polar_dim=4):
    """Pick the quadrature route for I(tau).

    After rescaling the cutoff shell starts at |x|^2 = inner / (R^2 tau).  When
    the Gaussian weight there is below exp(-decay) the shell is in the tail and
    sparse Gauss-Hermite is accurate ('hermite').  Otherwise the cutoff has to
    be resolved: a polar grid in low dimension ('polar'), randomized QMC
    above that ('qmc').
    """
    inner2 = cutoff.inner / (cutoff.R ** 2 * tau)
    if float(pp.nu) * inner2 >= decay:
        return "hermite"
    return "polar" if 2 * pp.n + pp.k <= max_polar_dim else "qmc"


def _coordinate_blocks(n, k):
    """(Re zeta_a, Im zeta_a) pairs, then the t coordinates two at a time."""
    blocks = [(a, n + a) for a in range(n)]
    j = 2 * n
    while j < 2 * n + k:
        blocks.append((j, j + 1) if j + 1 < 2 * n + k else (j,))
        j += len(blocks[-1])
    return blocks


def pairing_integral(pp: PhasePair, cutoff: CutoffSpec, tau, rtol=1e-4, mc_samples=0, seed=0,
                     max_points=1_500_000, method=None) -> PairingResult:
    """I(tau) = int chi(R zeta, R t) e^{sigma/tau} J dV, computed after zeta -> sqrt(tau) zeta.

    ``level`` of the result is the sparse-grid level, or log2 of the points per
    replicate for 'qmc'.  QuadratureNotConverged carries the scaled estimate.
    """
    if tau <= 0 or cutoff.R <= 0:
        raise ValueError("tau and R must be positive")
    pref = tau ** (pp.n + pp.k / 2)
    method = method or quadrature_method(pp, cutoff, tau)
    g, scales = pairing_integrand(pp, cutoff, tau)
    try:
        if method == "hermite":
            val, level, _ = adaptive_gauss_weighted(g, scales, rtol=rtol, max_points=max_points)
        elif method == "qmc":
            val, _, level = qmc_gauss_weighted(g, scales, rtol=rtol, seed=seed)
        elif method == "polar":
            core, _ = pairing_integrand(pp, cutoff, tau, with_cutoff=False)
            a = np.asarray(scales)
            grid = PolarGrid(_coordinate_blocks(pp.n, pp.k), lambda r: cutoff(tau * r ** 2),
                             np.sqrt(cutoff.inner / (cutoff.R ** 2 * tau)),
                             np.sqrt(cutoff.outer / (cutoff.R ** 2 * tau)), b=float(pp.nu) / 2)
            F = lambda X: core(X) * np.exp(-(X ** 2) @ a)
            val, level, _ = adaptive_polar(F, grid, rtol=rtol, max_points=max_points)
        else:
            raise ValueError(f"unknown quadrature method {method!r}")
    except QuadratureNotConverged as err:
        est = None if err.estimate is None else pref * err.estimate
        raise QuadratureNotConverged(f"tau={tau:.4g}: {err}", estimate=est) from None
    mc = None
    if mc_samples:
        est, se = monte_carlo_gauss_weighted(g, scales, mc_samples, seed)
        mc = (pref * est, pref * se)
    return PairingResult(tau, pref * val, level, True, method, mc)


def gaussian_limit(n, k, nu):
    """int exp(-nu|zeta|^2 - 2 nu|t|^2) over R^{2n+k}."""
    return (np.pi / nu) ** n * (np.pi / (2 * nu)) ** (k / 2)


# -------------------------------------------------------------------- fits
@dataclass
class FitResult:
    slope: float
    intercept: float
    residuals: list
    rms: float
    span_decades: float

    @property
    def constant(self):
        return float(np.exp(self.intercept))

    def to_dict(self):
        return {"slope": self.slope, "constant": self.constant, "rms_residual": self.rms,
                "span_decades": self.span_decades, "residuals": self.residuals}


def loglog_fit(xs, ys) -> FitResult:
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - A @ coef
    span = float((lx.max() - lx.min()) / np.log(10)) if len(lx) else 0.0
    return FitResult(float(coef[0]), float(coef[1]), res.tolist(), float(np.sqrt(np.mean(res ** 2))), span)


def exponent_fit(samples) -> FitResult:
    """Least-squares slope of log|I| against log tau; needs >= 5 samples over >= 1.5 decades."""
    samples = [(float(t), float(abs(v))) for t, v in samples]
    if len(samples) < 5:
        raise InsufficientSpan(f"need at least 5 samples, got {len(samples)}")
    taus = np.array([s[0] for s in samples])
    span = np.log10(taus.max() / taus.min())
    if span < 1.5 - 1e-9:
        raise InsufficientSpan(f"samples span {span:.3g} decades of tau, need 1.5")
    return loglog_fit(taus, [s[1] for s in samples])


# ---------------------------------------------------------------- reports
@dataclass
class ScalingReport:
    name: str
    n: int
    k: int
    nu: float
    q: int
    R: float
    taus: list
    integrals: list  # PairingResult or None
    fit: FitResult = None
    fit_taus: list = None
    r_grid: list = None
    sup_phi: list = None
    phi_bound: list = None
    c1: float = None
    phi_bound_exponent: float = None
    R_grid: list = None
    sup_psi: list = None
    c2: float = None
    annulus_slope: float = None
    errors: list = field(default_factory=list)

    @property
    def expected_exponent(self):
        return self.n + self.k / 2

    @property
    def complete(self):
        return not self.errors

    def normalized(self):
        """tau^-(n+k/2) |I(tau)| / |J(0)|, which tends to the Gaussian integral."""
        out = []
        for t, res in zip(self.taus, self.integrals):
            out.append(None if res is None else res.magnitude / t ** self.expected_exponent / 2 ** self.n)
        return out

    def to_dict(self):
        shrink = None
        if self.c1 is not None and self.c2 is not None and self.c2 > 0:
            C, expo, curve, slope = shrink_law(self)
            shrink = {"C": C, "exponent": expo, "boundary_slope": slope,
                      "boundary": [[float(a), float(b)] for a, b in curve]}
        return {
            "schema": 1,
            "name": self.name,
            "n": self.n,
            "k": self.k,
            "nu": self.nu,
            "q": self.q,
            "R": self.R,
            "expected_exponent": self.expected_exponent,
            "tau_grid": self.taus,
            "integrals": [
                None if r is None else {"tau": r.tau, "re": r.value.real, "im": r.value.imag,
                                        "abs": r.magnitude, "level": r.level, "method": r.method,
                                        "converged": r.converged}
                for r in self.integrals
            ],
            "normalized": self.normalized(),
            "gaussian_limit": gaussian_limit(self.n, self.k, self.nu),
            "fit_taus": self.fit_taus,
            "fit": self.fit.to_dict() if self.fit else None,
            "r_grid": self.r_grid,
            "sup_re_phi": self.sup_phi,
            "phi_remainder_bound": self.phi_bound,
            "c1": self.c1,
            "phi_bound_exponent": self.phi_bound_exponent,
            "R_grid": self.R_grid,
            "sup_re_psi_annulus": self.sup_psi,
            "c2": self.c2,
            "annulus_slope": self.annulus_slope,
            "shrink_law": shrink,
            "errors": self.errors,
        }


def phase_bounds(pp, r_grid=R_GRID, starts=STARTS, seed=0):
    """(sup Re phi per r, remainder bound per r, c1, log-log exponent of the bound)."""
    sups = [sup_re_phi(pp, r, starts, seed).value for r in r_grid]
    bounds = [phi_remainder_bound(pp, r, starts, seed) for r in r_grid]
    a = [max(s, b) for s, b in zip(sups, bounds)]
    c1 = max(x / r ** 3 for x, r in zip(a, r_grid))
    positive = [(r, x) for r, x in zip(r_grid, a) if x > 0]
    expo = loglog_fit(*zip(*positive)).slope if len(positive) >= 2 else None
    return sups, bounds, c1, expo


def annulus_bounds(pp, R_grid=BIG_R_GRID, starts=STARTS, seed=0):
    """(sup Re psi per R, c2 = min_R (-sup) R^2, log-log slope of -sup against R)."""
    sups = [sup_re_psi_annulus(pp, R, starts=starts, seed=seed).value for R in R_grid]
    c2 = min(-s * R ** 2 for s, R in zip(sups, R_grid))
    slope = loglog_fit(R_grid, [-s for s in sups]).slope if all(s < 0 for s in sups) else None
    return sups, c2, slope


def asymptotics(pp, tau_grid=TAU_GRID, r_grid=R_GRID, R_grid=BIG_R_GRID, cutoff=None, seed=0,
                fit_max_tau=FIT_MAX_TAU, rtol=1e-4, starts=STARTS, name="") -> ScalingReport:
    """Full scaling experiment: pairing integrals, exponent fit, sup bounds, c1 and c2."""
    cutoff = cutoff or choose_cutoff(pp, starts=starts, seed=seed)
    taus = sorted((float(t) for t in tau_grid), reverse=True)
    results, errors = [], []
    for t in taus:
        try:
            results.append(pairing_integral(pp, cutoff, t, rtol=rtol, seed=seed))
        except QuadratureNotConverged as err:
            method = quadrature_method(pp, cutoff, t)
            results.append(None if err.estimate is None else PairingResult(t, err.estimate, -1, False, method))
            errors.append(f"tau={t:.6g}: {err}")
    sr = ScalingReport(name or pp.ns.original.name, pp.n, pp.k, float(pp.nu), pp.q, cutoff.R, taus, results,
                       errors=errors)
    window = [(t, r.value) for t, r in zip(taus, results)
              if r is not None and r.converged and t <= fit_max_tau * (1 + 1e-9)]
    sr.fit_taus = [w[0] for w in window]
    try:
        sr.fit = exponent_fit(window)
    except InsufficientSpan as err:
        if not errors:
            raise
        sr.errors.append(f"fit: {err}")  # partial data; the unconverged points caused this
    if r_grid:
        sr.r_grid = list(r_grid)
        sr.sup_phi, sr.phi_bound, sr.c1, sr.phi_bound_exponent = phase_bounds(pp, r_grid, starts, seed)
    if R_grid:
        sr.R_grid = list(R_grid)
        sr.sup_psi, sr.c2, sr.annulus_slope = annulus_bounds(pp, R_grid, starts, seed)
    return sr


def shrink_law(sr: ScalingReport, points=41):
    """(C, 3/2, boundary curve [(r, r')], fitted boundary slope).

    C = sqrt(c1/c2).  The boundary r' = 1/R solves  b(R) = c1 r^3  where b is
    the measured annulus decay -sup Re psi, interpolated log-log in R.
    """
    if sr.c2 is None or sr.c2 <= 0:
        raise DegenerateFit("c2 must be positive")
    if sr.c1 is None or sr.c1 <= 0:
        raise DegenerateFit("c1 must be positive")
    C = float(np.sqrt(sr.c1 / sr.c2))
    logR = np.log(np.asarray(sr.R_grid, dtype=float))
    logb = np.log(-np.asarray(sr.sup_psi, dtype=float))
    order = np.argsort(logR)
    logR, logb = logR[order], logb[order]
    lo_slope = (logb[1] - logb[0]) / (logR[1] - logR[0])
    hi_slope = (logb[-1] - logb[-2]) / (logR[-1] - logR[-2])

    def log_b(x):
        if x < logR[0]:
            return logb[0] + lo_slope * (x - logR[0])
        if x > logR[-1]:
            return logb[-1] + hi_slope * (x - logR[-1])
        return float(np.interp(x, logR, logb))

    rs = np.geomspace(min(sr.r_grid), max(sr.r_grid), points)
    curve = []
    for r in rs:
        target = np.log(sr.c1 * r ** 3)
        f = lambda x: log_b(x) - target
        a, b = logR[0] - 20, logR[-1] + 20
        x = brentq(f, a, b, xtol=1e-14)
        curve.append((float(r), float(np.exp(-x))))
    slope = loglog_fit([c[0] for c in curve], [c[1] for c in curve]).slope
    return C, 1.5, curve, slope
