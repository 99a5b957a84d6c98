"""Deterministic quasi-uniform samples on the unit sphere S^{k-1}, antipodes paired."""

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc


def sphere_samples(k: int, N: int, seed: int = 0) -> np.ndarray:
    """N unit vectors in R^k (rows); row 2i+1 is the antipode of row 2i.

    k=1 always gives exactly [+1, -1].  k=2 uses equally spaced angles on a
    half circle with a seeded offset; k>=3 maps a scrambled Halton sequence
    through the normal quantile and normalizes.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        return np.array([[1.0], [-1.0]])
    if N < 2 * k:
        raise ValueError(f"need at least {2 * k} samples for k={k}")
    half = (N + 1) // 2
    rng = np.random.default_rng(seed)
    if k == 2:
        offset = rng.uniform(0, np.pi / half)
        ang = offset + np.pi * np.arange(half) / half
        base = np.column_stack([np.cos(ang), np.sin(ang)])
    else:
        u = qmc.Halton(d=k, scramble=True, seed=rng).random(half)
        g = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
        base = g / np.linalg.norm(g, axis=1, keepdims=True)
    out = np.empty((2 * half, k))
    out[0::2] = base
    out[1::2] = -base
    return out[:N] if N % 2 == 0 else out[: 2 * half]
