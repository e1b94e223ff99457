"""Gauss-Hermite rules and seeded Monte Carlo for Gauss states.

Both backends integrate a function against a multivariate normal law
N(mu, nu).  Rules use the probabilists' convention so that nodes and
weights integrate against the standard normal density directly.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import DimMismatch, FactorizationFailure, SizeLimit

MAX_NODES = 512
MAX_DIM = 3
PSD_TOL = 1e-10
DEFAULT_SEED = 0x5EED
DEFAULT_PATHS = 2**20
MC_BLOCK = 2**16


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor rule: ``nodes`` has shape (m, dim), ``weights`` shape (m,)."""

    dim: int
    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.weights)


@dataclass(frozen=True)
class McConfig:
    seed: int = DEFAULT_SEED
    paths: int = DEFAULT_PATHS
    workers: int = 1


def _christoffel_weights(x: np.ndarray) -> np.ndarray:
    # w_i = 1 / sum_k p_k(x_i)^2 with p_k the orthonormal Hermite_e
    # polynomials; the running sum is rescaled to stay finite for large n
    n = len(x)
    p_prev = np.zeros_like(x)
    p_cur = np.ones_like(x)
    total = np.ones_like(x)
    log_scale = np.zeros_like(x)
    for k in range(1, n):
        p_next = (x * p_cur - math.sqrt(k - 1) * p_prev) / math.sqrt(k)
        p_prev, p_cur = p_cur, p_next
        total += p_cur * p_cur
        big = total > 1e200
        if big.any():
            total[big] *= 1e-200
            p_prev[big] *= 1e-100
            p_cur[big] *= 1e-100
            log_scale[big] += 200 * math.log(10.0)
    return np.exp(-(np.log(total) + log_scale))


@lru_cache(maxsize=64)
def _rule_1d(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n == 1:
        return np.zeros(1), np.ones(1)
    # Golub-Welsch: Jacobi matrix of the probabilists' recurrence
    x = eigh_tridiagonal(np.zeros(n), np.sqrt(np.arange(1.0, n)), eigvals_only=True)
    x = 0.5 * (x - x[::-1])  # exact symmetry about the origin
    w = _christoffel_weights(x)
    w = 0.5 * (w + w[::-1])
    # extreme weights below the double range underflow; they carry no mass
    keep = w > 0
    x, w = x[keep], w[keep]
    w = w / math.fsum(w)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_hermite_rule(n: int, dim: int = 1) -> QuadratureRule:
    """Tensor Gauss-Hermite rule with ``n`` nodes per axis, weights summing to 1."""
    if not (1 <= n <= MAX_NODES):
        raise SizeLimit(f"node count {n} outside [1, {MAX_NODES}]")
    if not (1 <= dim <= MAX_DIM):
        raise SizeLimit(f"dimension {dim} outside [1, {MAX_DIM}]")
    x, w = _rule_1d(n)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return QuadratureRule(dim, nodes, weights)


def covariance_factor(nu) -> np.ndarray:
    """Return L with L L^T = nu, tolerating rank deficiency."""
    nu = np.atleast_2d(np.asarray(nu, dtype=float))
    nu = 0.5 * (nu + nu.T)
    lam, vec = np.linalg.eigh(nu)
    if lam.size and lam[0] < -PSD_TOL:
        raise FactorizationFailure(f"covariance has eigenvalue {lam[0]:.3e} < 0")
    lam = np.clip(lam, 0.0, None)
    return vec * np.sqrt(lam)


def _mu_nu(state):
    mu = np.atleast_1d(np.asarray(state.mu, dtype=float))
    nu = np.atleast_2d(np.asarray(state.nu, dtype=float))
    return mu, nu


def _evaluate(f, pts, vectorized):
    if vectorized:
        return np.asarray(f(pts), dtype=float).reshape(len(pts))
    return np.array([f(p) for p in pts], dtype=float)


def integrate_gauss(state, f: Callable, rule: QuadratureRule, vectorized: bool = True) -> float:
    """Sum_i w_i f(mu + L node_i).

    With ``vectorized`` the function receives an (m, d) array of points and
    must return m values; otherwise it is called once per point.
    """
    mu, nu = _mu_nu(state)
    if rule.dim != len(mu):
        raise DimMismatch(f"rule dimension {rule.dim} != state dimension {len(mu)}")
    L = covariance_factor(nu)
    pts = mu + rule.nodes @ L.T
    vals = _evaluate(f, pts, vectorized)
    return float(np.dot(rule.weights, vals))


def _mc_block(state_mu, L, f, seed, block, count, vectorized, shift):
    bitgen = np.random.Philox(key=np.array([seed, block], dtype=np.uint64))
    z = np.random.Generator(bitgen).standard_normal((count, len(state_mu)))
    vals = _evaluate(f, state_mu + z @ L.T, vectorized)
    if shift is None:
        shift = vals[0]
    d = vals - shift
    return shift, float(np.sum(d)), float(np.sum(d * d))


def mc_integrate(state, f: Callable, cfg: McConfig = McConfig(), vectorized: bool = True):
    """Monte Carlo estimate and standard error.

    Paths are generated in fixed blocks, each from a Philox stream keyed by
    (seed, block index), and reduced in block order, so the result does not
    depend on ``cfg.workers``.
    """
    if cfg.paths < 1:
        raise SizeLimit("paths must be positive")
    mu, nu = _mu_nu(state)
    L = covariance_factor(nu)
    seed = int(cfg.seed) & 0xFFFFFFFFFFFFFFFF
    nblocks = -(-cfg.paths // MC_BLOCK)
    counts = [min(MC_BLOCK, cfg.paths - b * MC_BLOCK) for b in range(nblocks)]

    # first block fixes the shift used for a stable variance
    shift, s1, s2 = _mc_block(mu, L, f, seed, 0, counts[0], vectorized, None)
    sums1, sums2 = [s1], [s2]

    def run(b):
        return _mc_block(mu, L, f, seed, b, counts[b], vectorized, shift)[1:]

    rest = range(1, nblocks)
    if cfg.workers > 1 and nblocks > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(run, rest))
    else:
        results = [run(b) for b in rest]
    for a, b in results:
        sums1.append(a)
        sums2.append(b)

    n = cfg.paths
    S1, S2 = math.fsum(sums1), math.fsum(sums2)
    mean = shift + S1 / n
    if n > 1:
        var = max((S2 - S1 * S1 / n) / (n - 1), 0.0)
    else:
        var = 0.0
    return float(mean), math.sqrt(var / n)
