"""Monte Carlo driver: per-trial realizations, scheme dispatch, statistics and export.

Within one trial every scheme sees the same placement and demand. The
realization of trial ``t`` at memory ``M`` depends only on
``(seed, M, t)``, so growing ``trials`` or the memory grid never changes
earlier results.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable

import numpy as np

from .bounds import yma_bound
from .gf2 import decodable_all
from .graph_schemes import ahglc_delivery, hglc_delivery
from .model import (
    CacheState,
    DemandVector,
    DemandDistribution,
    SystemConfig,
    partition_subfiles,
    prefix_placement,
    random_placement,
    sample_demands,
)
from .xor_schemes import (
    decman_delivery,
    hcd_delivery,
    leader_set,
    mhcd_delivery,
    uncoded_delivery,
    yma_delivery,
)

logger = logging.getLogger(__name__)

SCHEMES = ("uncoded", "decman", "yma", "hcd", "mhcd", "hglc", "ahglc")
DEFAULT_GRID = (0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5)
CSV_COLUMNS = ("scheme", "M", "trial", "load_bits", "load_files", "decodable", "elapsed_ms", "seed")


@dataclass
class ExperimentSpec:
    num_files: int = 4
    num_users: int = 8
    file_bits: int = 400
    memories: tuple[float, ...] = DEFAULT_GRID
    schemes: tuple[str, ...] = SCHEMES
    trials: int = 100
    seed: int = 0
    dist: str = "uniform"
    verify: bool = True
    packet_count: int | None = None
    timing: bool = False
    random_leaders: bool = False
    workers: int = 1

    def __post_init__(self) -> None:
        self.memories = tuple(float(m) for m in self.memories)
        self.schemes = tuple(self.schemes)
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown:
            raise ValueError(f"unknown schemes {sorted(unknown)}; choose from {', '.join(SCHEMES)}")
        DemandDistribution.parse(self.dist)
        for m in self.memories:
            self.config(m)

    def config(self, memory: float) -> SystemConfig:
        return SystemConfig(self.num_files, self.num_users, self.file_bits, memory, self.packet_count)

    def to_json(self) -> dict:
        data = asdict(self)
        data["memories"] = list(self.memories)
        data["schemes"] = list(self.schemes)
        return data

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentSpec":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})


@dataclass(frozen=True)
class TrialResult:
    scheme: str
    memory: float
    trial: int
    load_bits: int
    load_files: float
    decodable: bool | None
    elapsed_ms: float
    seed: int
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None or self.decodable is False

    def row(self) -> list:
        dec = "" if self.decodable is None else str(self.decodable).lower()
        return [self.scheme, repr(self.memory), self.trial, self.load_bits, repr(self.load_files), dec,
                repr(self.elapsed_ms), self.seed]


@dataclass
class Realization:
    cfg: SystemConfig
    cache: CacheState
    demand: DemandVector
    seed: int
    streams: dict


def _memory_key(memory: float) -> int:
    return int(round(memory * 1_000_000))


def realize(spec: ExperimentSpec, memory: float, trial: int) -> Realization:
    root = np.random.SeedSequence(spec.seed, spawn_key=(_memory_key(memory), trial))
    placement, demand, *per_scheme = root.spawn(2 + len(SCHEMES))
    cfg = spec.config(memory)
    return Realization(
        cfg,
        random_placement(cfg, placement),
        sample_demands(cfg, spec.dist, demand),
        int(root.generate_state(1)[0]),
        dict(zip(SCHEMES, per_scheme)),
    )


def run_scheme(name: str, real: Realization, random_leaders: bool = False, tables=None):
    """Run one scheme on a realization; returns ``(cache_used, log)``."""
    cfg, cache, demand = real.cfg, real.cache, real.demand
    seed = real.streams[name]
    if name == "uncoded":
        prefix = prefix_placement(cfg)
        return prefix, uncoded_delivery(prefix, demand, cfg)
    if name in ("hglc", "ahglc"):
        fn = hglc_delivery if name == "hglc" else ahglc_delivery
        return cache, fn(cache, demand, cfg, seed)
    tables = tables or partition_subfiles(cache)
    if name == "decman":
        return cache, decman_delivery(cache, demand, cfg, tables=tables)
    if name == "hcd":
        return cache, hcd_delivery(cache, demand, cfg, tables=tables)
    leaders = leader_set(demand, seed, randomize=random_leaders)
    if name == "yma":
        return cache, yma_delivery(cache, demand, leaders, cfg, tables=tables)
    if name == "mhcd":
        return cache, mhcd_delivery(cache, demand, leaders, cfg, tables=tables)
    raise ValueError(f"unknown scheme {name!r}")


def _evaluate(spec: ExperimentSpec, real: Realization, name: str, memory: float, trial: int, tables) -> TrialResult:
    start = time.perf_counter()
    try:
        cache, log = run_scheme(name, real, spec.random_leaders, tables)
    except Exception as exc:  # recorded, never dropped
        logger.exception("scheme %s failed at M=%s trial=%d", name, memory, trial)
        return TrialResult(name, memory, trial, -1, math.nan, False, 0.0, real.seed, repr(exc))
    elapsed = (time.perf_counter() - start) * 1000 if spec.timing else 0.0
    ok = all(decodable_all(cache, log, real.demand)) if spec.verify else None
    if ok is False:
        logger.error("decode failure: scheme %s M=%s trial=%d", name, memory, trial)
    return TrialResult(name, memory, trial, log.total_bits, log.load, ok, elapsed, real.seed)


def run_trials(spec: ExperimentSpec, memory: float, trial: int, schemes: Iterable[str] | None = None) -> list[TrialResult]:
    """All requested schemes on one shared placement and demand."""
    real = realize(spec, memory, trial)
    tables = partition_subfiles(real.cache)
    return [_evaluate(spec, real, name, memory, trial, tables) for name in (schemes or spec.schemes)]


def run_trial(spec: ExperimentSpec, scheme: str, memory: float, trial: int) -> TrialResult:
    return run_trials(spec, memory, trial, [scheme])[0]


def _task(args) -> list[TrialResult]:
    spec, memory, trial = args
    return run_trials(spec, memory, trial)


def monte_carlo(spec: ExperimentSpec, progress: bool = False) -> list[TrialResult]:
    """Every (memory, trial) of the grid; results ordered by memory, trial, then scheme."""
    tasks = [(spec, m, t) for m in spec.memories for t in range(spec.trials)]
    if spec.workers > 1:
        with ProcessPoolExecutor(spec.workers) as pool:
            chunks = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (8 * spec.workers))))
    else:
        chunks = []
        for i, task in enumerate(tasks):
            chunks.append(_task(task))
            if progress and (i + 1) % max(1, len(tasks) // 20) == 0:
                logger.info("%d/%d trials", i + 1, len(tasks))
    return [r for chunk in chunks for r in chunk]


@dataclass(frozen=True)
class SchemeStats:
    scheme: str
    memory: float
    trials: int
    mean: float
    std: float
    ci95: float
    failures: int
    std_defined: bool
    bound: float | None = None


def summarize(results: Iterable[TrialResult], spec: ExperimentSpec | None = None) -> list[SchemeStats]:
    """Mean, sample std and normal 95% CI half-width per (scheme, memory)."""
    groups: dict[tuple[str, float], list[TrialResult]] = {}
    for r in results:
        groups.setdefault((r.scheme, r.memory), []).append(r)
    out = []
    for (scheme, memory), rs in sorted(groups.items(), key=lambda kv: (SCHEMES.index(kv[0][0]), kv[0][1])):
        rs = sorted(rs, key=lambda r: r.trial)
        loads = np.array([r.load_files for r in rs if r.error is None])
        n = len(loads)
        mean = float(loads.mean()) if n else math.nan
        std = float(loads.std(ddof=1)) if n > 1 else 0.0
        bound = None
        if spec is not None and DemandDistribution.parse(spec.dist).is_uniform and memory > 0:
            bound = yma_bound(spec.config(memory))
        out.append(
            SchemeStats(scheme, memory, n, mean, std, 1.96 * std / math.sqrt(n) if n else math.nan,
                        sum(r.failed for r in rs), n > 1, bound)
        )
    return out


def stats_table(stats: Iterable[SchemeStats]) -> dict[tuple[str, float], SchemeStats]:
    return {(s.scheme, s.memory): s for s in stats}


def _open_for_write(path):
    path = Path(path)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        return path.open("w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror or exc}") from exc


def write_csv(results: list[TrialResult], path) -> None:
    if not results:
        raise ValueError("no results to export")
    with _open_for_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in results:
            writer.writerow(r.row())


def write_json(results: list[TrialResult], path, spec: ExperimentSpec | None = None) -> None:
    if not results:
        raise ValueError("no results to export")
    payload = {"spec": spec.to_json() if spec else None, "results": [asdict(r) for r in results]}
    with _open_for_write(path) as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def read_json(path) -> tuple[ExperimentSpec | None, list[TrialResult]]:
    with open(path) as fh:
        payload = json.load(fh)
    spec = ExperimentSpec.from_json(payload["spec"]) if payload.get("spec") else None
    return spec, [TrialResult(**r) for r in payload["results"]]


def write_summary(stats: list[SchemeStats], path) -> None:
    with _open_for_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["scheme", "M", "trials", "mean", "std", "ci95", "failures", "std_defined", "bound"])
        for s in stats:
            writer.writerow([s.scheme, repr(s.memory), s.trials, repr(s.mean), repr(s.std), repr(s.ci95),
                             s.failures, str(s.std_defined).lower(), "" if s.bound is None else repr(s.bound)])


def export(results: list[TrialResult], fmt: str, path, spec: ExperimentSpec | None = None) -> Path:
    """Write per-trial results plus a ``<stem>.summary.csv`` next to them."""
    path = Path(path)
    if fmt == "csv":
        write_csv(results, path)
    elif fmt == "json":
        write_json(results, path, spec)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    summary = path.with_name(path.stem + ".summary.csv")
    write_summary(summarize(results, spec), summary)
    return summary


def trace(spec: ExperimentSpec, memory: float, trial: int, schemes: Iterable[str] | None = None) -> dict:
    """Full record of one trial: caches, demand and every codeword of every scheme."""
    real = realize(spec, memory, trial)
    tables = partition_subfiles(real.cache)
    out = {
        "spec": spec.to_json(),
        "M": memory,
        "trial": trial,
        "seed": real.seed,
        "demand": real.demand.to_json(),
        "cache": real.cache.to_json(),
        "schemes": {},
    }
    for name in schemes or spec.schemes:
        cache, log = run_scheme(name, real, spec.random_leaders, tables)
        entry = log.to_json()
        entry["decodable"] = decodable_all(cache, log, real.demand)
        if log.info:
            entry["info"] = log.info
        out["schemes"][name] = entry
    return out

