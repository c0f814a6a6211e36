"""Problem dimensions, cache placement, demands and sub-file bookkeeping.

User ids and file ids are 1-based everywhere in the public API. Bit indices
are 0-based. A set of users is a ``frozenset`` of user ids.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

UserSet = frozenset


@dataclass(frozen=True)
class SystemConfig:
    """Dimensions of one caching system.

    ``memory`` is the cache size in file units (M), ``packet_count`` the
    number of packets per file used by the graph schemes (defaults to one
    packet per bit).
    """

    num_files: int
    num_users: int
    file_bits: int
    memory: float = 0.0
    packet_count: int | None = None

    def __post_init__(self) -> None:
        if self.num_files < 1 or self.num_users < 1 or self.file_bits < 1:
            raise ValueError("num_files, num_users and file_bits must be positive")
        if not 0 <= self.memory <= self.num_files:
            raise ValueError(f"memory must lie in [0, {self.num_files}], got {self.memory}")
        if self.packet_count is None:
            object.__setattr__(self, "packet_count", self.file_bits)
        if self.packet_count < 1 or self.file_bits % self.packet_count:
            raise ValueError(
                f"packet_count {self.packet_count} must divide file_bits {self.file_bits}"
            )

    @property
    def cached_bits_per_file(self) -> int:
        # the epsilon guards against 0.29 * 100 == 28.999...
        return min(self.file_bits, math.floor(self.memory * self.file_bits / self.num_files + 1e-9))

    @property
    def packet_bits(self) -> int:
        return self.file_bits // self.packet_count

    @property
    def users(self) -> range:
        return range(1, self.num_users + 1)

    @property
    def files(self) -> range:
        return range(1, self.num_files + 1)

    def with_memory(self, memory: float) -> "SystemConfig":
        return SystemConfig(self.num_files, self.num_users, self.file_bits, memory, self.packet_count)


class CacheState:
    """Cache contents of all users as a boolean array ``mask[user-1, file-1, bit]``."""

    def __init__(self, mask: np.ndarray):
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim != 3:
            raise ValueError("cache mask must have shape (users, files, bits)")
        self.mask = mask

    @classmethod
    def empty(cls, cfg: SystemConfig) -> "CacheState":
        return cls(np.zeros((cfg.num_users, cfg.num_files, cfg.file_bits), dtype=bool))

    @classmethod
    def from_positions(
        cls, cfg: SystemConfig, positions: dict[int, Iterable[tuple[int, int]]]
    ) -> "CacheState":
        state = cls.empty(cfg)
        for user, pos in positions.items():
            for file, bit in pos:
                state.mask[user - 1, file - 1, bit] = True
        return state

    @property
    def num_users(self) -> int:
        return self.mask.shape[0]

    @property
    def num_files(self) -> int:
        return self.mask.shape[1]

    @property
    def file_bits(self) -> int:
        return self.mask.shape[2]

    def holds(self, user: int, file: int, bit: int) -> bool:
        return bool(self.mask[user - 1, file - 1, bit])

    def cached_bits(self, user: int, file: int) -> np.ndarray:
        return np.flatnonzero(self.mask[user - 1, file - 1])

    def positions(self, user: int) -> set[tuple[int, int]]:
        files, bits = np.nonzero(self.mask[user - 1])
        return {(int(f) + 1, int(b)) for f, b in zip(files, bits)}

    def cacher_codes(self) -> np.ndarray:
        """Per (file, bit) the bitmask of caching users, bit ``k-1`` for user ``k``."""
        weights = (np.int64(1) << np.arange(self.num_users, dtype=np.int64))
        return np.tensordot(weights, self.mask.astype(np.int64), axes=(0, 0))

    def to_json(self) -> dict:
        return {
            "num_users": self.num_users,
            "num_files": self.num_files,
            "file_bits": self.file_bits,
            "cached": {
                str(k): {str(i): self.cached_bits(k, i).tolist() for i in range(1, self.num_files + 1)}
                for k in range(1, self.num_users + 1)
            },
        }

    @classmethod
    def from_json(cls, data: dict) -> "CacheState":
        mask = np.zeros((data["num_users"], data["num_files"], data["file_bits"]), dtype=bool)
        for k, per_file in data["cached"].items():
            for i, bits in per_file.items():
                mask[int(k) - 1, int(i) - 1, bits] = True
        return cls(mask)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CacheState) and np.array_equal(self.mask, other.mask)

    def __repr__(self) -> str:
        return f"CacheState(users={self.num_users}, files={self.num_files}, bits={self.file_bits})"


@dataclass(frozen=True)
class DemandVector:
    demands: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "demands", tuple(int(d) for d in self.demands))
        if not self.demands or min(self.demands) < 1:
            raise ValueError("demands must be a non-empty sequence of 1-based file ids")

    @property
    def num_users(self) -> int:
        return len(self.demands)

    @property
    def distinct(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.demands)))

    def of(self, user: int) -> int:
        return self.demands[user - 1]

    def demanders(self, file: int) -> tuple[int, ...]:
        return tuple(k for k, d in enumerate(self.demands, start=1) if d == file)

    def to_json(self) -> list[int]:
        return list(self.demands)


@dataclass(frozen=True)
class DemandDistribution:
    """Uniform (exponent 0) or Zipf popularity over the file library."""

    zipf_exponent: float = 0.0

    def __post_init__(self) -> None:
        if self.zipf_exponent < 0:
            raise ValueError(f"Zipf exponent must be non-negative, got {self.zipf_exponent}")

    @property
    def is_uniform(self) -> bool:
        return self.zipf_exponent == 0

    def probabilities(self, num_files: int) -> np.ndarray:
        weights = np.arange(1, num_files + 1, dtype=float) ** -self.zipf_exponent
        return weights / weights.sum()

    @classmethod
    def parse(cls, text: "str | float | DemandDistribution") -> "DemandDistribution":
        if isinstance(text, DemandDistribution):
            return text
        if isinstance(text, (int, float)):
            return cls(float(text))
        text = text.strip().lower()
        if text == "uniform":
            return cls()
        if text.startswith("zipf:"):
            return cls(float(text.split(":", 1)[1]))
        raise ValueError(f"unknown demand distribution {text!r}; use 'uniform' or 'zipf:EXP'")

    def __str__(self) -> str:
        return "uniform" if self.is_uniform else f"zipf:{self.zipf_exponent:g}"


def random_placement(cfg: SystemConfig, seed=None) -> CacheState:
    """Each user independently caches ``floor(M F / N)`` uniformly chosen bits of every file."""
    rng = np.random.default_rng(seed)
    state = CacheState.empty(cfg)
    count = cfg.cached_bits_per_file
    if count == 0:
        return state
    if count == cfg.file_bits:
        state.mask[:] = True
        return state
    for k in range(cfg.num_users):
        for i in range(cfg.num_files):
            state.mask[k, i, rng.choice(cfg.file_bits, size=count, replace=False)] = True
    return state


def prefix_placement(cfg: SystemConfig) -> CacheState:
    """Every user caches the same first ``floor(M F / N)`` bits of each file (uncoded baseline)."""
    state = CacheState.empty(cfg)
    state.mask[:, :, : cfg.cached_bits_per_file] = True
    return state


def random_packet_placement(cfg: SystemConfig, seed=None) -> CacheState:
    """Packet-granular placement: each user caches ``floor(M B / N)`` whole packets per file."""
    rng = np.random.default_rng(seed)
    state = CacheState.empty(cfg)
    count = min(cfg.packet_count, math.floor(cfg.memory * cfg.packet_count / cfg.num_files + 1e-9))
    size = cfg.packet_bits
    for k in range(cfg.num_users):
        for i in range(cfg.num_files):
            for p in rng.choice(cfg.packet_count, size=count, replace=False):
                state.mask[k, i, p * size : (p + 1) * size] = True
    return state


def sample_demands(cfg: SystemConfig, dist="uniform", seed=None) -> DemandVector:
    dist = DemandDistribution.parse(dist)
    rng = np.random.default_rng(seed)
    if dist.is_uniform:
        draws = rng.integers(1, cfg.num_files + 1, size=cfg.num_users)
    else:
        draws = rng.choice(cfg.num_files, size=cfg.num_users, p=dist.probabilities(cfg.num_files)) + 1
    return DemandVector(tuple(int(d) for d in draws))


def subfile_fraction(cfg: SystemConfig, w_size: int) -> float:
    """Limit fraction of a file cached by exactly one given set of ``w_size`` users."""
    if not 0 <= w_size <= cfg.num_users:
        raise ValueError(f"w_size must lie in [0, {cfg.num_users}]")
    q = cfg.memory / cfg.num_files
    return q**w_size * (1 - q) ** (cfg.num_users - w_size)


def subsets(users: Iterable[int], size: int) -> list[frozenset[int]]:
    """All ``size``-subsets of ``users`` in lexicographic order of their sorted ids."""
    return [frozenset(c) for c in itertools.combinations(sorted(users), size)]


def set_key(users: frozenset[int]) -> tuple[int, ...]:
    return tuple(sorted(users))


def mask_to_set(code: int) -> frozenset[int]:
    return frozenset(k + 1 for k in range(code.bit_length()) if code >> k & 1)


def format_set(users: Iterable[int]) -> str:
    return "{" + ",".join(str(u) for u in sorted(users)) + "}"


class SubFileTables:
    """Bits of every file grouped by the exact set of users caching them.

    ``partition[(i, W)]`` holds the ascending bit indices of file ``i`` cached
    by exactly the users in ``W``; only non-empty cells are stored. For the
    borrowing schemes, ``individual[(k, J)]`` tracks what user ``k`` still
    needs from the cell ``(d_k, J)`` and ``common[(i, J)]`` the bits still
    needed by every demander of file ``i`` outside ``J``. ``common`` is kept
    equal to the intersection of the matching ``individual`` entries.
    """

    def __init__(self, partition: dict[tuple[int, frozenset[int]], list[int]], num_users: int):
        self.partition = partition
        self.num_users = num_users
        self.demand: DemandVector | None = None
        self.common: dict[tuple[int, frozenset[int]], list[int]] = {}
        self.individual: dict[tuple[int, frozenset[int]], list[int]] = {}

    def cell(self, file: int, users: frozenset[int]) -> list[int]:
        return self.partition.get((file, users), [])

    def cells(self, file: int) -> list[tuple[frozenset[int], list[int]]]:
        return [(w, bits) for (i, w), bits in self.partition.items() if i == file]

    def start_delivery(self, demand: DemandVector) -> "SubFileTables":
        """Copy with ``common``/``individual`` initialised from the partition."""
        tables = SubFileTables(self.partition, self.num_users)
        tables.demand = demand
        for (i, w), bits in self.partition.items():
            users = [k for k in demand.demanders(i) if k not in w]
            if not users:
                continue
            tables.common[(i, w)] = list(bits)
            for k in users:
                tables.individual[(k, w)] = list(bits)
        return tables

    def interested(self, file: int, users: frozenset[int]) -> tuple[int, ...]:
        """Demanders of ``file`` outside ``users``."""
        return tuple(k for k in self.demand.demanders(file) if k not in users)

    def get_common(self, file: int, users: frozenset[int]) -> list[int]:
        return self.common.get((file, users), [])

    def get_individual(self, user: int, users: frozenset[int]) -> list[int]:
        return self.individual.get((user, users), [])

    def remove_common(self, file: int, users: frozenset[int], bits: Iterable[int]) -> None:
        """Bits delivered to every demander of ``(file, users)``."""
        drop = set(bits)
        if not drop:
            return
        for k in self.interested(file, users):
            self._drop_individual(k, users, drop)
        self._drop(self.common, (file, users), drop)

    def remove_individual(self, user: int, users: frozenset[int], bits: Iterable[int]) -> None:
        """Bits delivered to one user; they also leave the shared cell."""
        drop = set(bits)
        if not drop:
            return
        self._drop_individual(user, users, drop)
        self._drop(self.common, (self.demand.of(user), users), drop)

    def _drop_individual(self, user, users, drop) -> None:
        self._drop(self.individual, (user, users), drop)

    @staticmethod
    def _drop(table: dict, key, drop: set[int]) -> None:
        bits = table.get(key)
        if bits:
            table[key] = [b for b in bits if b not in drop]

    def outstanding(self) -> int:
        return sum(len(v) for v in self.individual.values())


def partition_subfiles(cache: CacheState, cfg: SystemConfig | None = None) -> SubFileTables:
    codes = cache.cacher_codes()
    partition: dict[tuple[int, frozenset[int]], list[int]] = {}
    for i in range(cache.num_files):
        order = np.argsort(codes[i], kind="stable")
        values, starts = np.unique(codes[i][order], return_index=True)
        bounds = list(starts[1:]) + [len(order)]
        for code, lo, hi in zip(values, starts, bounds):
            partition[(i + 1, mask_to_set(int(code)))] = sorted(order[lo:hi].tolist())
    keys = sorted(partition, key=lambda key: (key[0], set_key(key[1])))
    return SubFileTables({key: partition[key] for key in keys}, cache.num_users)


def distinct_count_distribution(num_files: int, num_users: int) -> dict[int, float]:
    """Exact law of the number of distinct values among ``num_users`` uniform draws from ``num_files``."""
    # Stirling numbers of the second kind S(K, j)
    stirling = [[0] * (num_users + 1) for _ in range(num_users + 1)]
    stirling[0][0] = 1
    for n in range(1, num_users + 1):
        for j in range(1, n + 1):
            stirling[n][j] = j * stirling[n - 1][j] + stirling[n - 1][j - 1]
    total = num_files**num_users
    return {
        j: math.comb(num_files, j) * math.factorial(j) * stirling[num_users][j] / total
        for j in range(1, min(num_files, num_users) + 1)
    }


def demand_vectors(num_files: int, num_users: int) -> Sequence[tuple[int, ...]]:
    return list(itertools.product(range(1, num_files + 1), repeat=num_users))
