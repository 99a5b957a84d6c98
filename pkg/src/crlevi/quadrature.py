"""Quadrature for Gaussian-weighted integrals over R^d with a radial cutoff.

Three routes, all adaptive:

* Smolyak sparse grids of Gauss-Hermite rules (2l - 1 nodes at level l) for
  int g(x) prod_i exp(-a_i x_i^2) dx when g is smooth where the weight lives.
* ``PolarGrid``: a Smolyak grid in polar coordinates whose radial rules are
  Gauss rules for profile(r) r^(d-1) exp(-b r^2), built numerically.  A
  radial cutoff that is smooth but not analytic then never reaches the
  sparse grid.  Efficient in low dimension.
* Randomized quasi-Monte Carlo (scrambled Sobol replicates), used in higher
  dimension when the cutoff sits inside the Gaussian bulk.

Plain Monte Carlo is provided as an independent cross-check.
"""

from __future__ import annotations

from functools import lru_cache
from math import comb

import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.legendre import leggauss
from scipy.special import ndtri, roots_jacobi
from scipy.stats import qmc

from .errors import QuadratureNotConverged


# ------------------------------------------------------------- Smolyak core
def _compositions(total, parts):
    """Tuples of ``parts`` integers >= 1 summing to ``total``."""
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def smolyak_combination(rules, level):
    """Smolyak combination of 1D rule families at ``level`` >= 0.

    ``rules`` holds one callable ``l -> (nodes, weights)`` (l >= 1) per
    dimension.  Returns (nodes, weights) with nodes of shape (N, dim);
    repeated nodes are merged.
    """
    dim = len(rules)
    q = dim + level
    all_nodes, all_weights = [], []
    for total in range(max(dim, q - dim + 1), q + 1):
        coef = (-1) ** (q - total) * comb(dim - 1, q - total)
        for levels in _compositions(total, dim):
            parts = [rule(l) for rule, l in zip(rules, levels)]
            grids = np.meshgrid(*[p[0] for p in parts], indexing="ij")
            wgrids = np.meshgrid(*[p[1] for p in parts], indexing="ij")
            all_nodes.append(np.stack([g.ravel() for g in grids], axis=1))
            all_weights.append(coef * np.prod([w.ravel() for w in wgrids], axis=0))
    nodes = np.concatenate(all_nodes)
    weights = np.concatenate(all_weights)
    keys, inverse = np.unique(np.round(nodes, 12), axis=0, return_inverse=True)
    merged = np.zeros(len(keys))
    np.add.at(merged, inverse.ravel(), weights)
    keep = merged != 0.0
    return keys[keep], merged[keep]


def combination_size(sizes, level):
    """Upper bound on the Smolyak node count; ``sizes`` holds one callable l -> count per dimension."""
    dim = len(sizes)
    q = dim + level
    total = 0
    for t in range(max(dim, q - dim + 1), q + 1):
        for levels in _compositions(t, dim):
            total += int(np.prod([f(l) for f, l in zip(sizes, levels)]))
    return total


def _adaptive(estimate, size, rtol, start, max_level, max_points, agree, label):
    """Raise the level until ``agree`` successive relative changes are <= rtol."""
    history = []
    streak = 0
    for level in range(start, max_level + 1):
        if size(level) > max_points:
            break
        val = estimate(level)
        if history:
            prev = history[-1][1]
            streak = streak + 1 if abs(val - prev) <= rtol * abs(val) else 0
        history.append((level, val))
        if streak >= agree:
            return val, level, history
    raise QuadratureNotConverged(
        f"{label} did not reach relative tolerance {rtol:g} "
        f"(last level {history[-1][0] if history else None})",
        estimate=history[-1][1] if history else None,
    )


# ------------------------------------------------------------ Gauss-Hermite
@lru_cache(maxsize=None)
def _hermite(level):
    return hermgauss(2 * level - 1)


@lru_cache(maxsize=32)
def smolyak_grid(dim, level):
    """Sparse Gauss-Hermite nodes (N x dim) and weights for the weight exp(-|x|^2)."""
    return smolyak_combination([_hermite] * dim, level)


def grid_size(dim, level):
    return len(smolyak_grid(dim, level)[1])


def grid_size_estimate(dim, level):
    """Upper bound on the sparse Gauss-Hermite node count without building the grid."""
    return combination_size([lambda l: 2 * l - 1] * dim, level)


def gauss_weighted(g, scales, level):
    """Smolyak estimate of int g(x) prod exp(-a_i x_i^2) dx with a = ``scales``."""
    a = np.asarray(scales, dtype=float)
    nodes, weights = smolyak_grid(len(a), level)
    return np.sum(weights / np.sqrt(np.prod(a)) * g(nodes / np.sqrt(a)))


def adaptive_gauss_weighted(g, scales, rtol=1e-4, start=2, max_level=40, max_points=1_500_000, agree=2):
    """Adaptive sparse Gauss-Hermite.

    Returns (estimate, level, history); raises QuadratureNotConverged with the
    last estimate attached when the point budget runs out first.
    """
    dim = len(scales)
    # the bound is loose for odd Gauss-Hermite rules (they share nodes); build only when it is close
    size = lambda l: grid_size(dim, l) if grid_size_estimate(dim, l) <= 4 * max_points else grid_size_estimate(dim, l)
    return _adaptive(lambda l: gauss_weighted(g, scales, l), size,
                     rtol, start, max_level, max_points, agree, "sparse Gauss-Hermite grid")


# ------------------------------------------------------------- polar grids
def gauss_from_discrete(x, w, m):
    """m-point Gauss rule for the discrete measure sum w_i delta(x_i) (Lanczos with reorthogonalization)."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    m = min(m, int(np.count_nonzero(w > 0)))
    total = w.sum()
    Q = np.zeros((len(x), m))
    q = np.sqrt(w / total)
    alpha, beta = np.zeros(m), np.zeros(m)
    for j in range(m):
        Q[:, j] = q
        v = x * q
        alpha[j] = q @ v
        for _ in range(2):
            v -= Q[:, : j + 1] @ (Q[:, : j + 1].T @ v)
        if j + 1 < m:
            beta[j] = np.linalg.norm(v)
            if beta[j] == 0:
                m = j + 1
                break
            q = v / beta[j]
    T = np.diag(alpha[:m]) + np.diag(beta[: m - 1], 1) + np.diag(beta[: m - 1], -1)
    nodes, vecs = np.linalg.eigh(T)
    return nodes, total * vecs[0] ** 2


@lru_cache(maxsize=None)
def _jacobi_unit(m, alpha, beta):
    """Gauss rule on [0, 1] for the weight (1 - c)^alpha c^beta."""
    x, w = roots_jacobi(m, alpha, beta)
    return (x + 1) / 2, w / 2 ** (alpha + beta + 1)


@lru_cache(maxsize=None)
def _circle(m):
    """m equispaced angles; m is even so the rule is invariant under theta -> theta + pi."""
    return np.arange(m) * (2 * np.pi / m) + np.pi / m, np.full(m, 2 * np.pi / m)


def _split(blocks):
    if len(blocks) == 1:
        return ("leaf", blocks[0])
    mid = len(blocks) // 2
    return ("split", _split(blocks[:mid]), _split(blocks[mid:]))


def _tree_dim(tree):
    return len(tree[1]) if tree[0] == "leaf" else _tree_dim(tree[1]) + _tree_dim(tree[2])


class PolarGrid:
    """Sparse grid for int F(x) profile(|x|) dx with profile = 0 beyond ``outer``.

    The direction is built from a balanced tree over coordinate blocks: a
    two-index block carries a circle angle (periodic trapezoid), a one-index
    block a sign, and each internal node an angle c = sin^2 with a Jacobi
    weight.  The sub-rules are symmetric under negation, so every tensor
    term sees integrands that are analytic in c.
    """

    def __init__(self, blocks, profile, inner, outer, b=1.0):
        self.blocks = [tuple(bl) for bl in blocks]
        self.dim = sum(len(bl) for bl in self.blocks)
        self.tree = _split(self.blocks)
        self.profile = profile
        self.inner, self.outer = float(inner), float(outer)
        self.b = float(b)
        self._measure = self._radial_measure()
        self.splits, self.circles, self.signs = [], [], []
        self._index(self.tree)
        rules = [self._radial_rule]
        for d1, d2 in self.splits:
            rules.append(lambda l, a=d1 / 2 - 1, c=d2 / 2 - 1: _jacobi_unit(2 * l - 1, a, c))
        rules += [lambda l: _circle(4 * l - 2)] * len(self.circles)
        self.rules = rules
        self._radial = {}

    def _index(self, tree):
        if tree[0] == "leaf":
            (self.circles if len(tree[1]) == 2 else self.signs).append(tree[1])
            return
        self.splits.append((_tree_dim(tree[1]), _tree_dim(tree[2])))
        self._index(tree[1])
        self._index(tree[2])

    def _radial_measure(self, panels=200, order=20):
        """Composite Gauss-Legendre discretization of profile(r) r^(d-1) exp(-b r^2)."""
        cap = np.sqrt((80.0 + self.dim * np.log(self.dim)) / self.b)
        inner, outer = min(self.inner, cap), min(self.outer, cap)
        gx, gw = leggauss(order)
        xs, ws = [], []
        for lo, hi in ((0.0, inner), (inner, outer)):
            if hi <= lo:
                continue
            edges = np.linspace(lo, hi, panels + 1)
            mid, half = (edges[1:] + edges[:-1]) / 2, (edges[1:] - edges[:-1]) / 2
            xs.append((mid[:, None] + half[:, None] * gx).ravel())
            ws.append((half[:, None] * gw).ravel())
        x, w = np.concatenate(xs), np.concatenate(ws)
        w = w * self.profile(x) * x ** (self.dim - 1) * np.exp(-self.b * x ** 2)
        keep = w > 0
        return x[keep], w[keep]

    def _radial_rule(self, level):
        if level not in self._radial:
            self._radial[level] = gauss_from_discrete(*self._measure, 2 * level - 1)
        return self._radial[level]

    def size(self, level):
        sizes = [lambda l: 2 * l - 1] * (1 + len(self.splits)) + [lambda l: 4 * l - 2] * len(self.circles)
        return combination_size(sizes, level) * 2 ** len(self.signs)

    def points(self, level):
        """Cartesian nodes (N x dim) and weights; the weights include exp(-b r^2)."""
        nodes, weights = smolyak_combination(self.rules, level)
        X = np.zeros((len(nodes), self.dim))
        cols = {"split": 1, "circle": 1 + len(self.splits)}

        def fill(tree, scale):
            if tree[0] == "leaf":
                idx = tree[1]
                if len(idx) == 2:
                    th = nodes[:, cols["circle"]]
                    cols["circle"] += 1
                    X[:, idx[0]] = scale * np.cos(th)
                    X[:, idx[1]] = scale * np.sin(th)
                else:
                    X[:, idx[0]] = scale
                return
            c = nodes[:, cols["split"]]
            cols["split"] += 1
            fill(tree[1], scale * np.sqrt(1 - c))
            fill(tree[2], scale * np.sqrt(c))

        fill(self.tree, nodes[:, 0])
        # dphi = dc / (2 sqrt(c(1-c))) contributes 1/2 per internal node
        weights = weights * 0.5 ** len(self.splits)
        for idx in self.signs:
            flip = np.where(np.arange(self.dim) == idx[0], -1.0, 1.0)
            X = np.concatenate([X, X * flip])
            weights = np.concatenate([weights, weights])
        return X, weights

    def integrate(self, F, level):
        """Estimate of int F(x) profile(|x|) dx."""
        X, w = self.points(level)
        return np.sum(w * F(X) * np.exp(self.b * np.sum(X ** 2, axis=1)))


def adaptive_polar(F, grid: PolarGrid, rtol=1e-4, start=2, max_level=40, max_points=500_000, agree=2):
    """Adaptive polar sparse grid; same contract as adaptive_gauss_weighted."""
    return _adaptive(lambda l: grid.integrate(F, l), grid.size, rtol, start, max_level, max_points,
                     agree, "polar sparse grid")


# ------------------------------------------------------------ random rules
def qmc_gauss_weighted(g, scales, rtol=1e-4, seed=0, replicates=8, start=14, max_log2=22,
                       chunk=1 << 16):
    """Randomized QMC for int g(x) prod exp(-a_i x_i^2) dx.

    Each replicate is an independently scrambled Sobol sequence of 2^m points
    pushed through the normal quantile.  m grows until the standard error of
    the replicate mean is at most rtol/2 relative.  Returns
    (estimate, standard_error, log2_points).
    """
    a = np.asarray(scales, dtype=float)
    dim = len(a)
    norm = np.prod(np.sqrt(np.pi / a))
    sd = 1.0 / np.sqrt(2.0 * a)
    seeds = np.random.SeedSequence(seed).spawn(replicates)
    engines = [qmc.Sobol(dim, scramble=True, seed=np.random.default_rng(s)) for s in seeds]
    sums = np.zeros(replicates, dtype=complex)
    done = 0
    est = se = None
    for m in range(start, max_log2 + 1):
        todo = (1 << m) - done
        for r, eng in enumerate(engines):
            left = todo
            while left > 0:
                u = eng.random(min(chunk, left))
                sums[r] += np.sum(g(ndtri(u) * sd))
                left -= len(u)
        done = 1 << m
        reps = norm * sums / done
        est = reps.mean()
        se = np.std(reps, ddof=1) / np.sqrt(replicates)
        if se <= 0.5 * rtol * abs(est):
            return est, se, m
    raise QuadratureNotConverged(
        f"randomized QMC did not reach relative tolerance {rtol:g} "
        f"(standard error {se / abs(est):.2g} relative at 2^{max_log2} points)",
        estimate=est,
    )


def monte_carlo_gauss_weighted(g, scales, samples=1_000_000, seed=0, chunk=200_000):
    """Plain Monte Carlo for the same integral: (estimate, standard error)."""
    a = np.asarray(scales, dtype=float)
    dim = len(a)
    rng = np.random.default_rng(seed)
    norm = np.prod(np.sqrt(np.pi / a))
    sd = 1.0 / np.sqrt(2.0 * a)
    s1 = 0.0
    s2 = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        v = g(rng.standard_normal((m, dim)) * sd)
        s1 = s1 + np.sum(v)
        s2 = s2 + np.sum(np.abs(v) ** 2)
        done += m
    mean = s1 / samples
    var = max(s2 / samples - abs(mean) ** 2, 0.0)
    return norm * mean, norm * np.sqrt(var / samples)
