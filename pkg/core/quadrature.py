"""Cubature drivers over the unit cube [0, 1)^dim.

Integrands take an ``(N, dim)`` array of points and return either an ``(N,)``
array of values or a ``(values, excluded)`` pair where ``excluded`` marks
nodes that must not contribute (for example near a singularity). Excluded and
non-finite values contribute zero and are counted in ``skipped``.

All drivers evaluate points in fixed-size chunks and combine them in chunk
order, so results do not depend on the number of worker threads.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np

logger = logging.getLogger(__name__)

CHUNK_SIZE = 1 << 16
KOROBOV_GENERATOR = 1571


@dataclass
class CubatureResult:
    value: float
    error: float
    evaluations: int
    skipped: int = 0
    converged: bool = True
    rounds: int = 0

    @property
    def excluded_fraction(self) -> float:
        return self.skipped / self.evaluations if self.evaluations else 0.0


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    if order < 1:
        raise ValueError("Gauss-Legendre order must be at least 1")
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return (nodes + 1.0) / 2.0, weights / 2.0


@lru_cache(maxsize=32)
def _tensor_rule(order: int, dim: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = gauss_legendre(order)
    grid = np.array(list(itertools.product(nodes, repeat=dim)), dtype=float)
    grid_weights = np.array(
        [math.prod(w) for w in itertools.product(weights, repeat=dim)], dtype=float
    )
    return grid.reshape(-1, dim), grid_weights


@lru_cache(maxsize=8)
def _child_offsets(dim: int) -> np.ndarray:
    return np.array(list(itertools.product((0.0, 0.5), repeat=dim)), dtype=float).reshape(-1, dim)


def _call(f: Callable, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    result = f(points)
    if isinstance(result, tuple):
        values, excluded = result
        excluded = np.asarray(excluded, dtype=bool).copy()
    else:
        values, excluded = result, np.zeros(len(points), dtype=bool)
    values = np.asarray(values, dtype=float).copy()
    excluded |= ~np.isfinite(values)
    values[excluded] = 0.0
    return values, excluded


def evaluate_chunked(
    f: Callable, points: np.ndarray, threads: int = 1
) -> Tuple[np.ndarray, int]:
    """Evaluate ``f`` over ``points`` chunk by chunk; returns values and skip count."""
    chunks = [points[i:i + CHUNK_SIZE] for i in range(0, len(points), CHUNK_SIZE)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda chunk: _call(f, chunk), chunks))
    else:
        parts = [_call(f, chunk) for chunk in chunks]
    if not parts:
        return np.zeros(0), 0
    values = np.concatenate([p[0] for p in parts])
    skipped = int(sum(int(p[1].sum()) for p in parts))
    return values, skipped


class _CellRule:
    """Tensor Gauss-Legendre estimates for batches of dyadic cubes."""

    def __init__(self, f: Callable, dim: int, order: int, threads: int) -> None:
        self.f = f
        self.dim = dim
        self.nodes, self.weights = _tensor_rule(order, dim)
        self.offsets = _child_offsets(dim)
        self.threads = threads
        self.evaluations = 0
        self.skipped = 0

    def estimate(self, lower: np.ndarray, size: np.ndarray) -> np.ndarray:
        count = len(lower)
        if count == 0:
            return np.zeros(0)
        points = lower[:, None, :] + size[:, None, None] * self.nodes[None, :, :]
        values, skipped = evaluate_chunked(self.f, points.reshape(-1, self.dim), self.threads)
        self.evaluations += len(values)
        self.skipped += skipped
        return values.reshape(count, -1) @ self.weights * size ** self.dim

    def children(self, lower: np.ndarray, size: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        child_lower = lower[:, None, :] + size[:, None, None] * self.offsets[None, :, :]
        child_size = np.repeat(size / 2.0, len(self.offsets))
        return child_lower.reshape(-1, self.dim), child_size

    def child_estimates(self, lower: np.ndarray, size: np.ndarray) -> np.ndarray:
        child_lower, child_size = self.children(lower, size)
        return self.estimate(child_lower, child_size).reshape(len(lower), len(self.offsets))


def adaptive_cubature(
    f: Callable,
    dim: int,
    *,
    tol: float = 1e-7,
    max_depth: int = 14,
    order: int = 8,
    max_evals: int = 50_000_000,
    initial_depth: int = 1,
    threads: int = 1,
) -> CubatureResult:
    """Adaptive tensor Gauss-Legendre cubature with dyadic subdivision.

    Every cell keeps its own estimate and the sum over its 2^dim children; the
    difference is the cell's error. Each round splits the cells carrying the
    largest half of the total error.
    """
    if dim < 1:
        raise ValueError("Cubature dimension must be at least 1")
    rule = _CellRule(f, dim, order, threads)
    side = 2 ** initial_depth
    corners = np.array(list(itertools.product(range(side), repeat=dim)), dtype=float)
    lower = corners.reshape(-1, dim) / side
    size = np.full(len(lower), 1.0 / side)
    depth = np.full(len(lower), initial_depth, dtype=int)
    coarse = rule.estimate(lower, size)
    fine_parts = rule.child_estimates(lower, size)

    rounds = 0
    converged = False
    while True:
        fine = fine_parts.sum(axis=1)
        errors = np.abs(coarse - fine)
        total_error = float(errors.sum())
        if total_error <= tol:
            converged = True
            break
        if rule.evaluations >= max_evals:
            logger.warning(
                "Cubature budget of %d evaluations exhausted with error %.3e", max_evals, total_error
            )
            break
        splittable = np.flatnonzero(depth < max_depth)
        splittable_error = float(errors[splittable].sum())
        if splittable.size == 0 or splittable_error <= 0.01 * total_error:
            logger.info("Cubature reached depth %d with error %.3e", max_depth, total_error)
            break
        order_idx = splittable[np.argsort(-errors[splittable], kind="stable")]
        cumulative = np.cumsum(errors[order_idx])
        cut = int(np.searchsorted(cumulative, 0.5 * splittable_error)) + 1
        selected = np.sort(order_idx[:cut])

        new_lower, new_size = rule.children(lower[selected], size[selected])
        new_coarse = fine_parts[selected].reshape(-1)
        new_fine_parts = rule.child_estimates(new_lower, new_size)
        new_depth = np.repeat(depth[selected] + 1, 2 ** dim)

        keep = np.ones(len(lower), dtype=bool)
        keep[selected] = False
        lower = np.concatenate([lower[keep], new_lower])
        size = np.concatenate([size[keep], new_size])
        depth = np.concatenate([depth[keep], new_depth])
        coarse = np.concatenate([coarse[keep], new_coarse])
        fine_parts = np.concatenate([fine_parts[keep], new_fine_parts])
        rounds += 1
        logger.debug(
            "Cubature round %d: %d cells, error %.3e, %d evaluations",
            rounds, len(lower), total_error, rule.evaluations,
        )

    fine = fine_parts.sum(axis=1)
    value = float(fine.sum())
    error = float(np.abs(coarse - fine).sum())
    return CubatureResult(
        value=value,
        error=error,
        evaluations=rule.evaluations,
        skipped=rule.skipped,
        converged=converged,
        rounds=rounds,
    )


def lattice_points(dim: int, count: int) -> np.ndarray:
    """Rank-1 Korobov lattice with ``count`` points (a power of two)."""
    generator = np.array([pow(KOROBOV_GENERATOR, k, count) for k in range(dim)], dtype=np.int64)
    index = np.arange(count, dtype=np.int64)
    return ((index[:, None] * generator[None, :]) % count) / float(count)


def lattice_rule(
    f: Callable,
    dim: int,
    *,
    samples: int,
    randomizations: int = 8,
    seed: int = 0,
    threads: int = 1,
) -> CubatureResult:
    """Randomly shifted rank-1 lattice rule; error is the standard error over shifts."""
    if randomizations < 2:
        raise ValueError("At least two randomizations are needed for an error estimate")
    per_shift = max(1, samples // randomizations)
    count = 1 << int(math.floor(math.log2(per_shift)))
    base = lattice_points(dim, count)
    rng = np.random.default_rng(seed)
    shifts = rng.random((randomizations, dim))
    means = np.empty(randomizations)
    skipped = 0
    for r, shift in enumerate(shifts):
        values, skipped_r = evaluate_chunked(f, np.mod(base + shift[None, :], 1.0), threads)
        means[r] = values.sum() / count
        skipped += skipped_r
    error = float(means.std(ddof=1) / math.sqrt(randomizations))
    logger.debug("Lattice rule: %d points x %d shifts, error %.3e", count, randomizations, error)
    return CubatureResult(
        value=float(means.mean()),
        error=error,
        evaluations=count * randomizations,
        skipped=skipped,
        rounds=randomizations,
    )


def monte_carlo(
    f: Callable,
    dim: int,
    *,
    samples: int,
    randomizations: int = 8,
    seed: int = 0,
    threads: int = 1,
) -> CubatureResult:
    """Plain Monte Carlo; error is the standard error over equal batches."""
    if randomizations < 2:
        raise ValueError("At least two batches are needed for an error estimate")
    per_batch = max(1, samples // randomizations)
    rng = np.random.default_rng(seed)
    means = np.empty(randomizations)
    skipped = 0
    for r in range(randomizations):
        values, skipped_r = evaluate_chunked(f, rng.random((per_batch, dim)), threads)
        means[r] = values.mean()
        skipped += skipped_r
    return CubatureResult(
        value=float(means.mean()),
        error=float(means.std(ddof=1) / math.sqrt(randomizations)),
        evaluations=per_batch * randomizations,
        skipped=skipped,
        rounds=randomizations,
    )
