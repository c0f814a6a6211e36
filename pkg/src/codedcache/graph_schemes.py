"""Index-coding delivery over the conflict graph: greedy hierarchical local
coloring (high-to-low baseline and the low-to-high variant) followed by a
random linear compression of the color codewords.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .gf2 import BitMatrix, ColorKnowledge, build_rlc
from .model import CacheState, DemandVector, SystemConfig
from .transmission import Codeword, TransmissionLog


def _popcount(masks: np.ndarray) -> np.ndarray:
    out = np.zeros(masks.shape, dtype=np.int64)
    m = masks.copy()
    while m.any():
        out += (m & 1).astype(np.int64)
        m >>= 1
    return out


def _mask_set(code: int) -> frozenset[int]:
    return frozenset(k + 1 for k in range(int(code).bit_length()) if code >> k & 1)


@dataclass
class ConflictGraph:
    """One node per (user, packet) with the packet demanded and not cached by that user.

    ``know[v]`` is the bitmask (bit ``k-1`` for user ``k``) of users that
    demand or cache the node's packet; ``pkt_cachers`` is indexed by the
    global packet id ``(file-1) * B + packet``.
    """

    num_users: int
    packet_count: int
    packet_bits: int
    user: np.ndarray
    file: np.ndarray
    packet: np.ndarray
    know: np.ndarray
    pkt_cachers: np.ndarray

    def __len__(self) -> int:
        return len(self.user)

    @property
    def gpkt(self) -> np.ndarray:
        return (self.file - 1) * self.packet_count + self.packet

    @property
    def level(self) -> np.ndarray:
        return _popcount(self.know)

    def hierarchy(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.level == i)

    def knowers(self, v: int) -> frozenset[int]:
        return _mask_set(self.know[v])

    def caches(self, user: int, gpkt: int) -> bool:
        return bool(self.pkt_cachers[gpkt] >> (user - 1) & 1)

    def has_edge(self, src: int, dst: int) -> bool:
        """Directed edge ``src -> dst``: src's user lacks dst's packet and the packets differ."""
        g = self.gpkt
        return g[src] != g[dst] and not self.caches(int(self.user[src]), int(g[dst]))

    def edges(self):
        for a in range(len(self)):
            for b in range(len(self)):
                if a != b and self.has_edge(a, b):
                    yield a, b

    def to_json(self) -> dict:
        return {
            "nodes": [
                {
                    "user": int(self.user[v]),
                    "packet": [int(self.file[v]), int(self.packet[v])],
                    "knowers": sorted(self.knowers(v)),
                }
                for v in range(len(self))
            ],
            "edges": [list(e) for e in self.edges()],
        }


def build_conflict_graph(cache: CacheState, demand: DemandVector, cfg: SystemConfig | None = None) -> ConflictGraph:
    K, N, F = cache.mask.shape
    B = cfg.packet_count if cfg is not None else F
    size = F // B
    # a packet counts as cached only if all its bits are
    cached = cache.mask.reshape(K, N, B, size).all(axis=3)
    weights = np.int64(1) << np.arange(K, dtype=np.int64)
    pkt_cachers = np.tensordot(weights, cached.astype(np.int64), axes=(0, 0)).reshape(-1)
    demanders = np.zeros(N + 1, dtype=np.int64)
    for k, d in enumerate(demand.demands):
        demanders[d] |= np.int64(1) << k
    users, files, packets = [], [], []
    for k, d in enumerate(demand.demands, start=1):
        missing = np.flatnonzero(~cached[k - 1, d - 1])
        users.append(np.full(len(missing), k))
        files.append(np.full(len(missing), d))
        packets.append(missing)
    user = np.concatenate(users).astype(np.int64)
    file = np.concatenate(files).astype(np.int64)
    packet = np.concatenate(packets).astype(np.int64)
    know = demanders[file] | pkt_cachers[(file - 1) * B + packet]
    return ConflictGraph(K, B, size, user, file, packet, know, pkt_cachers)


@dataclass
class Coloring:
    color: np.ndarray
    num_colors: int
    relaxation: int = 0

    def classes(self) -> list[np.ndarray]:
        order = np.argsort(self.color, kind="stable")
        bounds = np.searchsorted(self.color[order], np.arange(self.num_colors + 1))
        return [order[bounds[c] : bounds[c + 1]] for c in range(self.num_colors)]

    def packets(self, g: ConflictGraph) -> list[np.ndarray]:
        gp = g.gpkt
        return [np.unique(gp[nodes]) for nodes in self.classes()]


def coloring_is_valid(g: ConflictGraph, col: Coloring) -> bool:
    """Every node colored once and every class free of edges in either direction."""
    if len(col.color) != len(g) or (len(g) and col.color.min() < 0):
        return False
    gp = g.gpkt
    for nodes in col.classes():
        for a in nodes:
            for b in nodes:
                if a != b and gp[a] != gp[b] and not g.caches(int(g.user[a]), int(gp[b])):
                    return False
    return True


def _kernel_seed(seed) -> int:
    return int(np.random.default_rng(seed).integers(0, 2**31 - 1))


def _kernel_args(g: ConflictGraph):
    return (
        np.ascontiguousarray(g.user - 1),
        np.ascontiguousarray(g.gpkt),
        np.ascontiguousarray(g.know),
        np.ascontiguousarray(g.level),
        np.ascontiguousarray(g.pkt_cachers),
    )


def hglc_color(g: ConflictGraph, seed=None) -> Coloring:
    """Baseline: hierarchies from highest to lowest; nodes without a large enough set drop a level."""
    if not len(g):
        return Coloring(np.zeros(0, dtype=np.int64), 0)
    color, n = _kernels.hglc_kernel(*_kernel_args(g), g.num_users, _kernel_seed(seed))
    return Coloring(color, int(n))


def ahglc_color(g: ConflictGraph, seed=None) -> Coloring:
    """Hierarchies from lowest to highest, searching knower-supersets first.

    A set is accepted when it reaches ``i - m`` nodes; ``m`` grows by one
    after every sweep that leaves nodes uncolored.
    """
    if not len(g):
        return Coloring(np.zeros(0, dtype=np.int64), 0)
    user, gpkt, know, level, cachers = _kernel_args(g)
    order = np.argsort(gpkt, kind="stable")
    ptr = np.searchsorted(gpkt[order], np.arange(len(cachers) + 1))
    color, n, m = _kernels.ahglc_kernel(
        user, gpkt, know, level, cachers, ptr.astype(np.int64), order.astype(np.int64),
        g.num_users, _kernel_seed(seed),
    )
    return Coloring(color, int(n), int(m))


def color_knowledge(g: ConflictGraph, col: Coloring) -> tuple[ColorKnowledge, list[np.ndarray]]:
    packets = col.packets(g)
    known_mask = np.array(
        [np.bitwise_and.reduce(g.pkt_cachers[p]) if len(p) else 0 for p in packets], dtype=np.int64
    )
    known = tuple(
        frozenset(np.flatnonzero(known_mask >> k & 1).tolist()) for k in range(g.num_users)
    )
    return ColorKnowledge(col.num_colors, known), packets


def _packet_codeword(g: ConflictGraph, gpkts: np.ndarray, label: str) -> Codeword | None:
    if not len(gpkts):
        return None
    files = gpkts // g.packet_count + 1
    start = (gpkts % g.packet_count) * g.packet_bits
    bits = start[:, None] + np.arange(g.packet_bits, dtype=np.int64)[None, :]
    return Codeword(tuple(files.tolist()), bits, (label,) * len(gpkts))


def coloring_to_log(
    col: Coloring, g: ConflictGraph, cache: CacheState | None = None, cfg: SystemConfig | None = None,
    seed=None, attempts: int = 10,
) -> TransmissionLog:
    """One XOR of packets per color, then compressed by a random binary matrix when one is found."""
    file_bits = g.packet_count * g.packet_bits
    out = TransmissionLog(file_bits)
    if col.num_colors == 0:
        out.info.update(colors=0, rows=0, rlc="empty")
        return out
    ck, packets = color_knowledge(g, col)
    c = build_rlc(ck, seed, attempts)
    compressed = c.rows < ck.num_colors
    out.info.update(
        colors=ck.num_colors,
        rows=c.rows,
        min_known=ck.num_colors - ck.compressed_rows,
        rlc="compressed" if compressed else ("none" if ck.compressed_rows == ck.num_colors else "fallback"),
    )
    if not compressed:
        for idx, p in enumerate(packets):
            out.send(_packet_codeword(g, p, f"color[{idx}]"))
        return out
    dense = c.to_dense()
    universe, index = np.unique(np.concatenate(packets), return_inverse=True)
    # rows x packets incidence of the combined codewords; XOR cancels a packet shared by two colors
    combined = np.zeros((c.rows, len(universe)), dtype=np.uint8)
    start = 0
    for col, p in enumerate(packets):
        cols = index[start : start + len(p)]
        start += len(p)
        combined[:, cols] ^= dense[:, col : col + 1]
    files = universe // g.packet_count + 1
    start = (universe % g.packet_count) * g.packet_bits
    bits = start[:, None] + np.arange(g.packet_bits, dtype=np.int64)[None, :]
    rows, cols = np.nonzero(combined)
    cuts = np.searchsorted(rows, np.arange(1, c.rows))
    for r, idx in enumerate(np.split(cols, cuts)):
        if len(idx):
            out.codewords.append(
                Codeword(tuple(files[idx].tolist()), bits[idx], (f"rlc[{r}]",) * len(idx))
            )
    return out


def hglc_delivery(cache: CacheState, demand: DemandVector, cfg: SystemConfig | None = None, seed=None) -> TransmissionLog:
    rng = np.random.default_rng(seed)
    g = build_conflict_graph(cache, demand, cfg)
    col = hglc_color(g, rng.integers(2**31))
    return coloring_to_log(col, g, cache, cfg, rng.integers(2**31))


def ahglc_delivery(cache: CacheState, demand: DemandVector, cfg: SystemConfig | None = None, seed=None) -> TransmissionLog:
    rng = np.random.default_rng(seed)
    g = build_conflict_graph(cache, demand, cfg)
    col = ahglc_color(g, rng.integers(2**31))
    return coloring_to_log(col, g, cache, cfg, rng.integers(2**31))
