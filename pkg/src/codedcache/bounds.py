"""Infinite-file-size load of the leader-based scheme under random placement."""

from __future__ import annotations

import itertools
import warnings

import numpy as np

from .model import DemandDistribution, SystemConfig, distinct_count_distribution


def distinct_files_law(cfg: SystemConfig, dist="uniform", samples: int = 200_000, seed=0) -> dict[int, float]:
    """Law of the number of distinct demanded files: exact for uniform demands, sampled otherwise."""
    dist = DemandDistribution.parse(dist)
    if dist.is_uniform:
        return distinct_count_distribution(cfg.num_files, cfg.num_users)
    rng = np.random.default_rng(seed)
    draws = rng.choice(cfg.num_files, size=(samples, cfg.num_users), p=dist.probabilities(cfg.num_files))
    draws.sort(axis=1)
    counts = 1 + (np.diff(draws, axis=1) != 0).sum(axis=1)
    values, freq = np.unique(counts, return_counts=True)
    return {int(v): f / samples for v, f in zip(values, freq)}


def yma_bound(cfg: SystemConfig, dist="uniform", samples: int = 200_000, seed=0) -> float:
    """Average load ``(N-M)/M * E[1 - ((N-M)/N)^|N(d)|]``.

    The expression is singular at ``M = 0``; there the uncoded limit
    ``E[|N(d)|]`` is returned with a warning.
    """
    law = distinct_files_law(cfg, dist, samples, seed)
    n, m = cfg.num_files, cfg.memory
    if m == 0:
        warnings.warn("bound is singular at M=0; returning E[|N(d)|]", stacklevel=2)
        return float(sum(j * p for j, p in law.items()))
    keep = (n - m) / n
    return (n - m) / m * sum(p * (1 - keep**j) for j, p in law.items())


def yma_bound_bruteforce(cfg: SystemConfig) -> float:
    """Same bound by enumerating all ``N**K`` equiprobable demand vectors."""
    n, k, m = cfg.num_files, cfg.num_users, cfg.memory
    if m == 0:
        raise ValueError("brute-force bound needs M > 0")
    keep = (n - m) / n
    total = 0.0
    for d in itertools.product(range(n), repeat=k):
        total += 1 - keep ** len(set(d))
    return (n - m) / m * total / n**k
