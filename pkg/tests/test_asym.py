import json

import numpy as np
import pytest
from scipy.integrate import quad

from crlevi import asym
from crlevi.errors import DegenerateFit, InsufficientSpan, NuTooSmall, QuadratureNotConverged
from crlevi.normal import normalize
from crlevi.poly import Poly, tvar, zbar, zvar
from oracles import heisenberg_pairing_2d, smooth_step

GRAPH = ["heisenberg", "example2", "example2_l2_m12", "example3", "example5"]


def phases(systems, name, nu=4.0):
    ds = systems[name]
    return asym.build_phases(normalize(ds, lam=np.eye(ds.k)[0]), nu=nu)


@pytest.fixture(scope="module")
def heis(systems):
    return phases(systems, "heisenberg")


@pytest.fixture(scope="module")
def heis_report(heis):
    return asym.asymptotics(heis)


@pytest.mark.parametrize("name", GRAPH + ["example6_local", "closing_example"])
def test_sigma_identity_is_exact(systems, name):
    pp = phases(systems, name)
    assert pp.sigma_identity_holds()
    assert (pp.phi + pp.psi - pp.sigma).is_zero()


def test_nu_threshold(systems):
    ns = normalize(systems["example3"], lam=[1.0, 0.0])
    assert asym.nu_threshold(ns) == 2.0
    with pytest.raises(NuTooSmall):
        asym.build_phases(ns, nu=2.0)


@pytest.mark.parametrize("name", ["heisenberg", "example3"])
def test_forms_are_cr_closed(systems, name):
    pp = phases(systems, name)
    assert asym.verify_form_closure(pp, tau=0.05) < 1e-10


def test_cutoff_shape():
    c = asym.CutoffSpec(2.0)
    r2 = np.linspace(0, 0.25, 501)
    vals = c(r2)
    assert np.all(vals[r2 * 4 <= 0.5] == 1.0)
    assert np.all(vals[r2 * 4 >= 2 / 3] == 0.0)
    assert np.all(np.diff(vals) <= 0)
    ref = 1 - smooth_step((4 * r2 - 0.5) / (2 / 3 - 0.5))
    assert np.allclose(vals, ref)


def test_maximize_on_shell_knows_the_answer():
    p = -(Poly.var(zvar(1)) * Poly.var(zbar(1))) - Poly.var(tvar(1)) * Poly.var(tvar(1)) * 3
    # max of -|z|^2 - 3t^2 on 0.2 <= r <= 0.5 is -0.04, attained with t = 0
    res = asym.maximize_on_shell(p, 1, 1, 0.5, 0.2, starts=16)
    assert res.value == pytest.approx(-0.04, abs=1e-9)


def test_gaussian_limit_matches_quadrature():
    one = quad(lambda x: np.exp(-4 * x * x), -np.inf, np.inf)[0]
    two = quad(lambda x: np.exp(-8 * x * x), -np.inf, np.inf)[0]
    assert asym.gaussian_limit(3, 2, 4.0) == pytest.approx(one ** 6 * two ** 2, rel=1e-10)


def test_jacobian_constant_modulus():
    for n, k in ((1, 1), (3, 2), (2, 3)):
        assert abs(asym.jacobian_constant(n, k, 0, 1)) == pytest.approx(2 ** n)


@pytest.mark.parametrize("tau", [0.1, 10 ** -1.25, 10 ** -1.5])
def test_heisenberg_matches_planar_oracle(heis, tau):
    cutoff = asym.choose_cutoff(heis)
    assert cutoff.R == 2.0
    res = asym.pairing_integral(heis, cutoff, tau, rtol=1e-6)
    normalized = res.magnitude / tau ** 1.5 / 2
    assert normalized == pytest.approx(heisenberg_pairing_2d(tau), rel=2e-6)


def test_quadrature_routes_agree(heis):
    cutoff = asym.CutoffSpec(2.0)
    tau = 10 ** -1.5
    polar = asym.pairing_integral(heis, cutoff, tau, method="polar")
    qmc = asym.pairing_integral(heis, cutoff, tau, method="qmc", seed=1)
    assert abs(qmc.value - polar.value) <= 3e-4 * abs(polar.value)
    tau = 0.01
    hermite = asym.pairing_integral(heis, cutoff, tau, method="hermite")
    polar = asym.pairing_integral(heis, cutoff, tau, method="polar")
    assert abs(hermite.value - polar.value) <= 2e-4 * abs(polar.value)


def test_monte_carlo_cross_check(heis):
    res = asym.pairing_integral(heis, asym.CutoffSpec(2.0), 0.1, mc_samples=1_000_000, seed=4)
    est, se = res.mc
    assert abs(est - res.value) <= 3 * se * np.sqrt(2)  # complex error, 3 sigma per component


def test_report_shape_and_monotonicity(heis_report):
    mags = [r.magnitude for r in heis_report.integrals]
    assert all(b < a for a, b in zip(mags, mags[1:]))
    assert heis_report.complete
    d = heis_report.to_dict()
    assert d["schema"] == 1
    assert json.loads(json.dumps(d)) == d
    assert d["fit_taus"] == [t for t in heis_report.taus if t <= 10 ** -1.5 * (1 + 1e-9)]


def test_doubling_the_cutoff_scale_keeps_the_exponent(heis, heis_report):
    other = asym.asymptotics(heis, cutoff=asym.CutoffSpec(4.0), r_grid=None, R_grid=None)
    assert other.fit.slope == pytest.approx(heis_report.fit.slope, abs=0.01)
    assert other.fit.slope == pytest.approx(1.5, abs=0.05)


def test_unconverged_points_are_flagged(heis, monkeypatch):
    real = asym.pairing_integral

    def flaky(pp, cutoff, tau, **kw):
        if tau == 0.01:
            raise QuadratureNotConverged("injected", estimate=1e-3 + 0j)
        return real(pp, cutoff, tau, **kw)

    monkeypatch.setattr(asym, "pairing_integral", flaky)
    sr = asym.asymptotics(heis, r_grid=None, R_grid=None)
    assert not sr.complete and "injected" in sr.errors[0]
    bad = sr.integrals[sr.taus.index(0.01)]
    assert not bad.converged and bad.level == -1
    assert 0.01 not in sr.fit_taus
    assert sr.fit.slope == pytest.approx(1.5, abs=0.05)


def test_exponent_fit_requirements():
    taus = np.geomspace(1e-3, 10 ** -1.5, 7)
    fit = asym.exponent_fit([(t, 3 * t ** 2.5) for t in taus])
    assert fit.slope == pytest.approx(2.5)
    assert fit.constant == pytest.approx(3.0)
    with pytest.raises(InsufficientSpan):
        asym.exponent_fit([(t, t) for t in taus[:4]])
    with pytest.raises(InsufficientSpan):
        asym.exponent_fit([(t, t) for t in np.geomspace(1e-2, 1e-1, 6)])


def _synthetic(c1, c2):
    R_grid = [10.0, 20.0, 40.0, 80.0]
    sr = asym.ScalingReport("synthetic", 1, 1, 4.0, 1, 2.0, [], [])
    sr.c1, sr.c2 = c1, c2
    sr.r_grid = [0.2, 0.1, 0.05, 0.025]
    sr.R_grid = R_grid
    sr.sup_psi = [-c2 / R ** 2 for R in R_grid]
    return sr


def test_shrink_law_on_exact_annulus_decay():
    C, expo, curve, slope = asym.shrink_law(_synthetic(0.8, 0.5))
    assert C == pytest.approx(np.sqrt(0.8 / 0.5))
    assert expo == 1.5
    assert slope == pytest.approx(1.5, abs=1e-9)
    for r, rp in curve:
        assert rp == pytest.approx(C * r ** 1.5, rel=1e-9)


def test_shrink_law_needs_positive_constants():
    with pytest.raises(DegenerateFit):
        asym.shrink_law(_synthetic(0.8, -0.1))
    with pytest.raises(DegenerateFit):
        asym.shrink_law(_synthetic(0.0, 0.5))
