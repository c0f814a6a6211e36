"""Delivery schemes that XOR whole sub-files: uncoded, decMAN with zero
padding, the leader-based scheme, HCD and MHCD.

Every scheme returns a :class:`TransmissionLog`. HCD and MHCD fill short
sub-files with bits borrowed from higher-type sub-files instead of zeros.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import (
    CacheState,
    DemandVector,
    SubFileTables,
    SystemConfig,
    format_set,
    partition_subfiles,
    set_key,
    subsets,
)
from .transmission import PAD, TransmissionLog

ROUND_ROBIN = "round_robin"
SEQUENTIAL = "sequential"


@dataclass(frozen=True)
class LeaderSet:
    leaders: dict[int, int]

    @property
    def users(self) -> frozenset[int]:
        return frozenset(self.leaders.values())

    def __contains__(self, user: int) -> bool:
        return user in self.users

    def __len__(self) -> int:
        return len(self.leaders)


@dataclass
class DeliveryAudit:
    """Optional record of what a borrowing scheme claims to have delivered.

    ``events`` holds ``(user, file, bits, log_length)``: ``bits`` of ``file``
    were dropped from the user's pending sub-files once the first
    ``log_length`` codewords had been sent. ``groups`` holds one dict per
    MHCD multicast group.
    """

    events: list[tuple[int, int, tuple[int, ...], int]] = field(default_factory=list)
    groups: list[dict] = field(default_factory=list)


def leader_set(demand: DemandVector, seed=None, randomize: bool = False) -> LeaderSet:
    """One demander per distinct file: the lowest-indexed one, or a seeded random pick."""
    rng = np.random.default_rng(seed) if randomize else None
    leaders = {}
    for i in demand.distinct:
        users = demand.demanders(i)
        leaders[i] = int(rng.choice(users)) if rng is not None else users[0]
    return LeaderSet(leaders)


def getbits(candidates: Sequence[Sequence[int]], quota: int, mode: str = ROUND_ROBIN) -> list[int]:
    """Collect ``quota`` bits from candidate sub-files.

    Everything is returned when the candidates hold at most ``quota`` bits.
    Otherwise candidates are ordered longest first (ties keep input order)
    and bits are taken round-robin, position ``b`` of every candidate before
    position ``b + 1``. ``mode="sequential"`` instead drains each candidate
    from its head in turn.
    """
    if quota <= 0:
        return []
    if sum(len(c) for c in candidates) <= quota:
        return [b for c in candidates for b in c]
    ordered = sorted(candidates, key=len, reverse=True)
    out: list[int] = []
    if mode == SEQUENTIAL:
        for c in ordered:
            out.extend(c[: quota - len(out)])
            if len(out) == quota:
                return out
        return out
    if mode != ROUND_ROBIN:
        raise ValueError(f"unknown getbits mode {mode!r}")
    b = 0
    while True:
        for c in ordered:
            if b < len(c):
                out.append(c[b])
                if len(out) == quota:
                    return out
        b += 1


def _label(file: int, users) -> str:
    return f"F[{file},{format_set(users)}]"


def uncoded_delivery(cache: CacheState, demand: DemandVector, cfg: SystemConfig | None = None) -> TransmissionLog:
    """Per distinct demanded file, send every bit missed by at least one demander."""
    out = TransmissionLog(cache.file_bits)
    for i in demand.distinct:
        users = np.array(demand.demanders(i)) - 1
        missing = np.flatnonzero(~cache.mask[users, i - 1].all(axis=0))
        out.send_segments([(i, missing.tolist(), f"F[{i}]")])
    return out


def _man_delivery(tables: SubFileTables, demand: DemandVector, keep) -> TransmissionLog:
    out = TransmissionLog(0)
    users = range(1, demand.num_users + 1)
    for size in range(1, demand.num_users + 1):
        for s_set in subsets(users, size):
            if not keep(s_set):
                continue
            out.send_segments(
                (demand.of(s), tables.cell(demand.of(s), s_set - {s}), _label(demand.of(s), s_set - {s}))
                for s in sorted(s_set)
            )
    return out


def decman_delivery(
    cache: CacheState, demand: DemandVector, cfg: SystemConfig | None = None, tables: SubFileTables | None = None
) -> TransmissionLog:
    """One zero-padded XOR per non-empty user set, every demanded sub-file treated as distinct."""
    tables = tables or partition_subfiles(cache)
    out = _man_delivery(tables, demand, lambda s: True)
    out.file_bits = cache.file_bits
    return out


def yma_delivery(
    cache: CacheState,
    demand: DemandVector,
    leaders: LeaderSet | None = None,
    cfg: SystemConfig | None = None,
    tables: SubFileTables | None = None,
) -> TransmissionLog:
    """decMAN restricted to user sets containing a leader; the rest are linear combinations."""
    tables = tables or partition_subfiles(cache)
    lead = (leaders or leader_set(demand)).users
    out = _man_delivery(tables, demand, lambda s: bool(s & lead))
    out.file_bits = cache.file_bits
    return out


class _Borrower:
    """Shared state of HCD and MHCD over one :class:`SubFileTables` copy."""

    def __init__(self, tables: SubFileTables, demand: DemandVector, file_bits: int, mode: str, audit):
        self.t = tables
        self.d = demand
        self.K = demand.num_users
        self.users = frozenset(range(1, self.K + 1))
        self.out = TransmissionLog(file_bits)
        self.mode = mode
        self.audit = audit
        self.pending: list[tuple[int, int, tuple[int, ...]]] = []

    def deliver(self, user: int, bits) -> None:
        if self.audit is not None:
            real = tuple(int(b) for b in bits if b != PAD)
            if real:
                self.pending.append((user, self.d.of(user), real))

    def commit(self) -> None:
        if self.audit is not None:
            n = len(self.out)
            self.audit.events.extend((u, f, b, n) for u, f, b in self.pending)
            self.pending.clear()

    def supersets(self, base: frozenset[int], size: int, exclude: frozenset[int]) -> list[frozenset[int]]:
        free = self.users - base - exclude
        return [base | x for x in subsets(free, size - len(base))]

    def send_uncached(self) -> None:
        """Every demanded bit cached by nobody goes out uncoded, once per file."""
        empty = frozenset()
        for i in self.d.distinct:
            bits = list(self.t.get_common(i, empty))
            self.out.send_segments([(i, bits, _label(i, empty))])
            for k in self.t.interested(i, empty):
                self.deliver(k, bits)
            self.t.remove_common(i, empty, bits)
        self.commit()

    def borrow_individual(self, s: int, base: frozenset[int], quota: int, step: int) -> list[int]:
        got_all: list[int] = []
        for size in range(step + 1, self.K):
            if quota <= 0:
                break
            keys = [j for j in self.supersets(base, size, frozenset({s})) if self.t.get_individual(s, j)]
            got = getbits([self.t.get_individual(s, j) for j in keys], quota, self.mode)
            for j in keys:
                self.t.remove_individual(s, j, got)
            got_all.extend(got)
            quota -= len(got)
        return got_all

    def borrow_common(self, i: int, base: frozenset[int], quota: int, step: int) -> list[int]:
        exclude = frozenset(self.t.interested(i, base))
        got_all: list[int] = []
        for size in range(step + 1, self.K):
            if quota <= 0:
                break
            keys = [j for j in self.supersets(base, size, exclude) if self.t.get_common(i, j)]
            got = getbits([self.t.get_common(i, j) for j in keys], quota, self.mode)
            for j in keys:
                self.t.remove_common(i, j, got)
            got_all.extend(got)
            quota -= len(got)
        return got_all

    def cleanup(self, step: int) -> None:
        """Per-user coded delivery of what remains at this step, borrowing from higher types."""
        for s_set in subsets(self.users, step + 1):
            members = sorted(s_set)
            pending = {s: list(self.t.get_individual(s, s_set - {s})) for s in members}
            longest = max(len(v) for v in pending.values())
            if longest == 0:
                continue
            segments = []
            for s in members:
                base = s_set - {s}
                seg = list(pending[s])
                label = _label(self.d.of(s), base)
                if len(seg) < longest:
                    borrowed = self.borrow_individual(s, base, longest - len(seg), step)
                    if borrowed:
                        label += "+borrowed"
                    seg += borrowed
                    self.deliver(s, borrowed)
                    seg += [PAD] * (longest - len(seg))
                segments.append((self.d.of(s), seg, label))
            self.out.send_segments(segments)
            for s in members:
                self.deliver(s, pending[s])
                self.t.remove_individual(s, s_set - {s}, pending[s])
            self.commit()

    def multicast(self, step: int, leaders: frozenset[int]) -> None:
        """Shared-segment coding of every group with enough repeated demands."""
        distinct = self.d.distinct
        group_keys = [
            frozenset(c)
            for size in range(1, min(step + 1, len(distinct)) + 1)
            for c in subsets(distinct, size)
        ]
        touched: set[tuple[int, frozenset[int]]] = set()
        for files in group_keys:
            users_t = [k for k in self.users if self.d.of(k) in files]
            if len(users_t) - len(files) <= step:
                continue
            members = [
                s_set
                for s_set in subsets(users_t, step + 1)
                if {self.d.of(s) for s in s_set} == files and s_set & leaders
            ]
            if not members:
                continue
            pairs = sorted(
                {(self.d.of(s), s_set - {s}) for s_set in members for s in s_set},
                key=lambda p: (p[0], set_key(p[1])),
            )
            if touched.intersection(pairs):
                raise AssertionError("multicast groups share a sub-file")
            touched.update(pairs)
            quota = min(
                max(len(self.t.get_common(self.d.of(s), s_set - {s})) for s in s_set) for s_set in members
            )
            if quota == 0:
                continue
            shared: dict[tuple[int, frozenset[int]], list[int]] = {}
            borrowed_any: dict[tuple[int, frozenset[int]], bool] = {}
            for i, j in pairs:
                own = self.t.get_common(i, j)
                seg = list(own[:quota])
                borrowed = []
                if len(seg) < quota:
                    borrowed = self.borrow_common(i, j, quota - len(seg), step)
                seg += borrowed
                self.t.remove_common(i, j, seg[: len(seg) - len(borrowed)])
                for k in self.t.interested(i, j):
                    self.deliver(k, seg)
                seg += [PAD] * (quota - len(seg))
                shared[(i, j)] = seg
                borrowed_any[(i, j)] = bool(borrowed)
            for s_set in members:
                self.out.send_segments(
                    (
                        self.d.of(s),
                        shared[(self.d.of(s), s_set - {s})],
                        f"Y[{self.d.of(s)},{format_set(s_set - {s})}]",
                    )
                    for s in sorted(s_set)
                )
            self.commit()
            if self.audit is not None:
                self.audit.groups.append(
                    {
                        "step": step,
                        "files": tuple(sorted(files)),
                        "quota": quota,
                        "members": [set_key(s) for s in members],
                        "segments": {(i, set_key(j)): tuple(v) for (i, j), v in shared.items()},
                        "borrowed": {(i, set_key(j)): v for (i, j), v in borrowed_any.items()},
                    }
                )


def hcd_delivery(
    cache: CacheState,
    demand: DemandVector,
    cfg: SystemConfig | None = None,
    tables: SubFileTables | None = None,
    mode: str = ROUND_ROBIN,
    audit: DeliveryAudit | None = None,
) -> TransmissionLog:
    """Heterogeneous coded delivery: uncached bits uncoded, then per-user XORs with borrowing."""
    tables = (tables or partition_subfiles(cache)).start_delivery(demand)
    state = _Borrower(tables, demand, cache.file_bits, mode, audit)
    state.send_uncached()
    for step in range(1, demand.num_users):
        state.cleanup(step)
    assert tables.outstanding() == 0
    return state.out


def mhcd_delivery(
    cache: CacheState,
    demand: DemandVector,
    leaders: LeaderSet | None = None,
    cfg: SystemConfig | None = None,
    tables: SubFileTables | None = None,
    mode: str = ROUND_ROBIN,
    audit: DeliveryAudit | None = None,
) -> TransmissionLog:
    """Multicasting heterogeneous coded delivery.

    Per step ``t`` the sets containing a leader are grouped by the files they
    request; in groups with more than ``t`` surplus demanders every sub-file
    is cut or filled to a common length and reused verbatim in each XOR of
    the group. What is left at that step goes out as in HCD.
    """
    tables = (tables or partition_subfiles(cache)).start_delivery(demand)
    lead = (leaders or leader_set(demand)).users
    state = _Borrower(tables, demand, cache.file_bits, mode, audit)
    state.send_uncached()
    for step in range(1, demand.num_users):
        state.multicast(step, lead)
        state.cleanup(step)
    assert tables.outstanding() == 0
    return state.out
