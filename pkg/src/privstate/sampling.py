"""Seeded random constructions used by tests, the CLI, and stochastic estimators."""
from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .operators import DensityOperator


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed d x d unitary via QR of a Ginibre matrix with phase fix."""
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    ph = np.diagonal(r).copy()
    ph = ph / np.abs(ph)
    return q * ph


def random_density(dims: Sequence[int], rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    """Random full-rank (or rank-limited) density operator from a Ginibre factor."""
    dims = tuple(int(d) for d in dims)
    total = int(np.prod(dims))
    r = total if rank is None else int(rank)
    g = rng.normal(size=(total, r)) + 1j * rng.normal(size=(total, r))
    m = g @ g.conj().T
    m /= np.trace(m).real
    return DensityOperator(dims, m)


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_separable(
    left_dim: int,
    right_dim: int,
    n_terms: int,
    rng: np.random.Generator,
) -> DensityOperator:
    """Convex mixture of random product pure states across the (left, right) cut."""
    weights = rng.dirichlet(np.ones(n_terms))
    total = left_dim * right_dim
    m = np.zeros((total, total), dtype=np.complex128)
    for w in weights:
        psi = np.kron(random_pure(left_dim, rng), random_pure(right_dim, rng))
        m += w * np.outer(psi, psi.conj())
    return DensityOperator((left_dim, right_dim), m)
