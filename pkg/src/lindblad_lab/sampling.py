"""Seeded random instances: states, unitaries, generators."""
from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from . import linalg as la
from .generator import LindbladGenerator, modular_blocks


def rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_complex(n: int, rng, m: int | None = None) -> np.ndarray:
    m = n if m is None else m
    return rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))


def random_hermitian(n: int, rng) -> np.ndarray:
    a = random_complex(n, rng)
    return a + la.dag(a)


def random_unitary(n: int, rng) -> np.ndarray:
    if n == 1:
        return np.ones((1, 1), complex)
    return unitary_group.rvs(n, random_state=rng)


def random_density(n: int, rng, min_eig: float = 0.0, rank: int | None = None) -> np.ndarray:
    """Random density matrix; with ``min_eig > 0`` its spectrum is bounded below."""
    rank = n if rank is None else rank
    g = random_complex(n, rng, rank)
    rho = g @ la.dag(g)
    rho = rho / np.trace(rho).real
    if min_eig > 0:
        rho = (1 - n * min_eig) * rho + min_eig * np.eye(n)
    return 0.5 * (rho + la.dag(rho))


def random_generator(n: int, rng, m: int = 2, hamiltonian: bool = True) -> LindbladGenerator:
    jumps = [random_complex(n, rng) for _ in range(m)]
    weights = rng.uniform(0.2, 1.5, size=m)
    h = random_hermitian(n, rng) if hamiltonian else np.zeros((n, n), complex)
    return LindbladGenerator.from_jumps(jumps, h, weights)


def random_db_generator(sigma, rng, jumps_per_block: int = 1, keep: float = 1.0) -> LindbladGenerator:
    """Random sigma-detailed-balanced generator.

    Each modular eigenspace (omega > 0) receives ``jumps_per_block`` random
    jumps V together with V* at weight e^omega times larger; the omega = 0
    space receives random self-adjoint jumps. Blocks are kept with
    probability ``keep``.
    """
    jumps, weights = [], []
    for w, basis in modular_blocks(sigma):
        if w < 0 or rng.uniform() > keep:
            continue
        for _ in range(jumps_per_block):
            if w == 0.0:
                coef = rng.standard_normal(len(basis))
            else:
                coef = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
            coef = coef / np.linalg.norm(coef)
            v = sum(c * b for c, b in zip(coef, basis))
            c = rng.uniform(0.3, 1.5)
            jumps.append(v)
            weights.append(c)
            if w > 0:
                jumps.append(la.dag(v))
                weights.append(c * np.exp(w))
    n = sigma.shape[0]
    return LindbladGenerator.from_jumps(jumps, np.zeros((n, n), complex), weights, dim=n)
