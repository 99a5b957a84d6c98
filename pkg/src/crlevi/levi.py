"""Levi forms, signature scans, rank-based regularity and failure reports."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .crgeom import Codirection, characteristic_codirection, holo_tangent_basis
from .errors import CRLeviError
from .sampling import sphere_samples

ZERO_TOL = 1e-8
REGULAR = "REGULAR_BY_RANK"
INCONCLUSIVE = "INCONCLUSIVE"
FAILS_STRONG = "FAILS_STRONG"
FAILS_WEAK = "FAILS_WEAK"
NO_WITNESS = "NO_WITNESS"


def _c(z):
    return [float(np.real(z)), float(np.imag(z))]


@dataclass
class LeviReport:
    codirection: Codirection
    matrix: np.ndarray
    eigenvalues: np.ndarray
    signature: tuple
    tol: float

    @property
    def rank(self):
        return self.signature[0] + self.signature[1]

    def to_dict(self):
        return {
            "point": [_c(z) for z in self.codirection.point],
            "lambda": self.codirection.lam.tolist(),
            "matrix": [[_c(z) for z in row] for row in self.matrix],
            "eigenvalues": self.eigenvalues.tolist(),
            "signature": list(self.signature),
            "zero_tol": self.tol,
        }


def signature_of(eigs, tol):
    pos = int(np.sum(eigs > tol))
    neg = int(np.sum(eigs < -tol))
    return pos, neg, len(eigs) - pos - neg


def levi_matrix(ds, xi: Codirection) -> LeviReport:
    """Levi form at xi on an orthonormal basis U of T^{1,0}.

    With H = sum_j lam_j d^2 rho_j / dz^a dconj(z^b), the form is
    L(u) = sum H[a, b] u^a conj(u^b), whose matrix on U is U^H H^T U.
    """
    U = holo_tangent_basis(ds, xi.point).basis
    H = sum(l * ds.complex_hessian(xi.point, j) for j, l in enumerate(xi.lam))
    L = U.conj().T @ H.T @ U
    L = 0.5 * (L + L.conj().T)
    eigs = np.linalg.eigvalsh(L)[::-1]
    tol = ZERO_TOL * (1.0 + float(np.max(np.abs(eigs), initial=0.0)))
    return LeviReport(xi, L, eigs, signature_of(eigs, tol), tol)


@dataclass
class ScanReport:
    point: np.ndarray
    seed: int
    lambdas: np.ndarray
    signatures: list  # tuple or None per sample
    errors: list  # str or None per sample

    @property
    def count(self):
        return len(self.lambdas)

    @property
    def ranks(self):
        return [s[0] + s[1] for s in self.signatures if s is not None]

    @property
    def min_rank(self):
        return min(self.ranks, default=None)

    @property
    def max_rank(self):
        return max(self.ranks, default=None)

    @property
    def achieved(self):
        return sorted({s for s in self.signatures if s is not None}, reverse=True)

    @property
    def n_errors(self):
        return sum(e is not None for e in self.errors)

    def to_dict(self):
        return {
            "point": [_c(z) for z in self.point],
            "seed": self.seed,
            "sample_count": self.count,
            "samples": [
                {"lambda": lam.tolist(), "signature": list(s) if s else None, "error": e}
                for lam, s, e in zip(self.lambdas, self.signatures, self.errors)
            ],
            "min_rank": self.min_rank,
            "max_rank": self.max_rank,
            "signatures": [list(s) for s in self.achieved],
        }


def signature_scan(ds, x=None, N=64, seed=0) -> ScanReport:
    x = ds.basepoint if x is None else np.asarray(x, dtype=complex)
    lams = sphere_samples(ds.k, N, seed)
    sigs, errs = [], []
    for lam in lams:
        try:
            rep = levi_matrix(ds, characteristic_codirection(ds, x, lam))
            sigs.append(rep.signature)
            errs.append(None)
        except CRLeviError as err:
            sigs.append(None)
            errs.append(f"{type(err).__name__}: {err}")
    return ScanReport(x, seed, lams, sigs, errs)


@dataclass
class RegularityReport:
    status: str
    rank: int
    max_nearby_rank: int
    nearby_ranks: list = field(default_factory=list)
    radius: float = 0.1

    def to_dict(self):
        return {
            "status": self.status,
            "rank": self.rank,
            "max_nearby_rank": self.max_nearby_rank,
            "radius": self.radius,
            "samples": len(self.nearby_ranks),
        }


def _ball(rng, dim, radius):
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    return v * radius * rng.uniform() ** (1.0 / dim)


def nearby_point(ds, x, radius, rng):
    """A point of M within roughly ``radius`` of x."""
    N = ds.n + ds.k
    if ds.is_graph:
        zeta, t = ds.graph_coords(x)
        d = _ball(rng, 2 * ds.n + ds.k, radius)
        dz = d[: ds.n] + 1j * d[ds.n: 2 * ds.n]
        return ds.graph_point(zeta + dz, t + d[2 * ds.n:])
    d = _ball(rng, 2 * N, radius)
    return ds.project(x + d[:N] + 1j * d[N:])


def regularity_check(ds, xi: Codirection, radius=0.1, N=32, seed=0) -> RegularityReport:
    """Sufficient rank test: rank at xi is at least the max rank at N nearby codirections."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    rng = np.random.default_rng(seed)
    base = levi_matrix(ds, xi).rank
    ranks = []
    for _ in range(N):
        y = nearby_point(ds, xi.point, radius, rng)
        lam = xi.lam + _ball(rng, ds.k, radius)
        try:
            ranks.append(levi_matrix(ds, characteristic_codirection(ds, y, lam)).rank)
        except CRLeviError:
            continue
    top = max(ranks, default=base)
    status = REGULAR if base >= top else INCONCLUSIVE
    return RegularityReport(status, base, top, ranks, radius)


@dataclass
class DegreeStatus:
    q: int
    status: str
    witness: list = None  # lambda
    signature: tuple = None
    regularity: RegularityReport = None

    @property
    def nu_lower_bound(self):
        return 1.5 if self.status in (FAILS_STRONG, FAILS_WEAK) else None

    def to_dict(self):
        return {
            "q": self.q,
            "status": self.status,
            "witness_lambda": self.witness,
            "signature": list(self.signature) if self.signature else None,
            "regularity": self.regularity.to_dict() if self.regularity else None,
            "nu_minus_lower_bound": self.nu_lower_bound,
        }


@dataclass
class FailureReport:
    point: np.ndarray
    degrees: list  # DegreeStatus for q = 1..n
    scan: ScanReport
    zero_degree_witnesses: int = 0

    def status(self, q):
        return self.degrees[q - 1].status

    def failing_degrees(self):
        return [d.q for d in self.degrees if d.status != NO_WITNESS]

    def to_dict(self):
        return {
            "point": [_c(z) for z in self.point],
            "degrees": [d.to_dict() for d in self.degrees],
            "q0_witnesses": self.zero_degree_witnesses,
        }


def failure_report(ds, x=None, N=64, seed=0, radius=0.1, reg_samples=32, max_checks=4) -> FailureReport:
    """Classify each degree 1..n by the witnesses found in a signature scan."""
    scan = signature_scan(ds, x, N, seed)
    degrees = []
    for q in range(1, ds.n + 1):
        idx = [i for i, s in enumerate(scan.signatures) if s is not None and s[0] == q]
        if not idx:
            degrees.append(DegreeStatus(q, NO_WITNESS))
            continue
        first = None
        chosen = None
        for i in idx[:max_checks]:
            xi = characteristic_codirection(ds, scan.point, scan.lambdas[i])
            reg = regularity_check(ds, xi, radius, reg_samples, seed)
            if first is None:
                first = (i, reg)
            if reg.status == REGULAR:
                chosen = (i, reg)
                break
        i, reg = chosen or first
        status = FAILS_STRONG if chosen else FAILS_WEAK
        degrees.append(DegreeStatus(q, status, scan.lambdas[i].tolist(), scan.signatures[i], reg))
    q0 = sum(1 for s in scan.signatures if s is not None and s[0] == 0)
    return FailureReport(scan.point, degrees, scan, q0)
