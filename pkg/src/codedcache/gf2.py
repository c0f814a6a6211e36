"""GF(2) linear algebra: padded XOR, packed bit matrices, random linear
compression of a coloring, and the decodability oracle."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._kernels import rank_words, rref_words
from .model import CacheState, DemandVector, SystemConfig
from .transmission import PAD, Codeword, TransmissionLog

logger = logging.getLogger(__name__)


def xor_pad(segments: Sequence[Sequence[int]]) -> np.ndarray:
    """XOR of bit sequences after zero-padding each at the tail to the longest length."""
    if not len(segments):
        raise ValueError("xor_pad needs at least one segment")
    length = max(len(s) for s in segments)
    out = np.zeros(length, dtype=np.uint8)
    for s in segments:
        out[: len(s)] ^= np.asarray(s, dtype=np.uint8)
    return out


def pack_rows(dense: np.ndarray) -> np.ndarray:
    """Pack a 0/1 matrix into little-endian uint64 words, column ``c`` at word ``c // 64``."""
    dense = np.asarray(dense, dtype=np.uint8)
    rows, cols = dense.shape
    nbytes = max(1, -(-cols // 64)) * 8
    packed = np.zeros((rows, nbytes), dtype=np.uint8)
    if cols:
        b = np.packbits(dense, axis=1, bitorder="little")
        packed[:, : b.shape[1]] = b
    return packed.view("<u8").astype(np.uint64)


class BitMatrix:
    """Dense GF(2) matrix stored as packed machine words."""

    def __init__(self, words: np.ndarray, cols: int):
        self.words = np.ascontiguousarray(words, dtype=np.uint64)
        self.cols = cols

    @classmethod
    def from_dense(cls, dense) -> "BitMatrix":
        dense = np.atleast_2d(np.asarray(dense, dtype=np.uint8))
        return cls(pack_rows(dense), dense.shape[1])

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_dense(np.eye(n, dtype=np.uint8))

    @classmethod
    def random(cls, rows: int, cols: int, rng: np.random.Generator) -> "BitMatrix":
        return cls.from_dense(rng.integers(0, 2, size=(rows, cols), dtype=np.uint8))

    @property
    def rows(self) -> int:
        return self.words.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def to_dense(self) -> np.ndarray:
        raw = self.words.astype("<u8").view(np.uint8)
        return np.unpackbits(raw, axis=1, bitorder="little")[:, : self.cols]

    def columns(self, idx) -> "BitMatrix":
        idx = np.asarray(idx, dtype=np.int64)
        return BitMatrix.from_dense(self.to_dense()[:, idx].reshape(self.rows, len(idx)))

    def rank(self) -> int:
        if self.rows == 0 or self.cols == 0:
            return 0
        return int(rank_words(self.words.copy()))

    def is_identity(self) -> bool:
        return self.rows == self.cols and np.array_equal(self.to_dense(), np.eye(self.rows, dtype=np.uint8))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, BitMatrix) and self.cols == other.cols and np.array_equal(self.words, other.words)

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"


def rank(m) -> int:
    if not isinstance(m, BitMatrix):
        m = BitMatrix.from_dense(m)
    return m.rank()


@dataclass(frozen=True)
class ColorKnowledge:
    """``known[k-1]`` is the set of 0-based colors whose packets user ``k`` fully caches."""

    num_colors: int
    known: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        for a in self.known:
            if a and (min(a) < 0 or max(a) >= self.num_colors):
                raise ValueError("known colors must lie in [0, num_colors)")

    @property
    def compressed_rows(self) -> int:
        return self.num_colors - min((len(a) for a in self.known), default=0)


def rlc_conditions_hold(c: BitMatrix, ck: ColorKnowledge) -> bool:
    """Every user's unknown-color columns of ``c`` have full column rank."""
    dense_t = np.ascontiguousarray(c.to_dense().T)
    packed_t = pack_rows(dense_t)
    for a in sorted(ck.known, key=len):
        unknown = np.array([x for x in range(ck.num_colors) if x not in a], dtype=np.int64)
        if len(unknown) and rank_words(packed_t[unknown].copy()) < len(unknown):
            return False
    return True


def null_space(c: BitMatrix) -> np.ndarray:
    """Basis of ``{x : C x = 0}`` as the columns of a dense ``cols x d`` 0/1 matrix."""
    words = c.words.copy()
    r, pivots = rref_words(words, c.cols)
    free = np.setdiff1d(np.arange(c.cols), pivots, assume_unique=True)
    basis = np.zeros((c.cols, len(free)), dtype=np.uint8)
    basis[free, np.arange(len(free))] = 1
    if r and len(free):
        shifts = (free & 63).astype(np.uint64)
        basis[pivots] = ((words[:r, free >> 6] >> shifts) & np.uint64(1)).astype(np.uint8)
    return basis


def _conditions_via_kernel(c: BitMatrix, known: list[np.ndarray]) -> bool:
    # columns outside A_k are independent iff no kernel vector vanishes on A_k,
    # i.e. the kernel basis restricted to the rows A_k keeps full column rank
    basis = null_space(c)
    d = basis.shape[1]
    if d == 0:
        return True
    for a in known:
        if len(a) < d or rank_words(pack_rows(basis[a])) < d:
            return False
    return True


def build_rlc(ck: ColorKnowledge, seed=None, attempts: int = 10) -> BitMatrix:
    """Random binary compression matrix letting each user recover all colors.

    Draws up to ``attempts`` random ``(L - min_k |A_k|) x L`` matrices and
    returns the first whose columns outside each ``A_k`` are independent;
    falls back to the ``L x L`` identity.
    """
    L = ck.num_colors
    if L < 1:
        raise ValueError("need at least one color")
    rows = ck.compressed_rows
    if rows == L:
        # nothing to compress: the identity already meets every condition
        return BitMatrix.identity(L)
    rng = np.random.default_rng(seed)
    # smallest known sets first so failing draws are rejected early
    known = [np.array(sorted(a), dtype=np.int64) for a in sorted(ck.known, key=len)]
    for attempt in range(attempts):
        c = BitMatrix.from_dense(rng.integers(0, 2, size=(rows, L), dtype=np.uint8))
        if _conditions_via_kernel(c, known):
            logger.debug("rlc: L=%d rows=%d found on attempt %d", L, rows, attempt + 1)
            return c
    logger.debug("rlc: L=%d rows=%d fell back to identity after %d draws", L, rows, attempts)
    return BitMatrix.identity(L)


def codeword_matrix(codewords: Sequence[Codeword], num_files: int, file_bits: int) -> np.ndarray:
    """Dense 0/1 matrix with one row per codeword offset over the ``N*F`` file bits."""
    total = sum(c.length for c in codewords)
    dense = np.zeros((total, num_files * file_bits), dtype=np.uint8)
    if not total:
        return dense
    rows, cols = [], []
    base = 0
    for c in codewords:
        r = np.broadcast_to(np.arange(base, base + c.length), c.bits.shape)
        f = np.asarray(c.files, dtype=np.int64)[:, None] - 1
        keep = c.bits != PAD
        rows.append(r[keep])
        cols.append((f * file_bits + c.bits)[keep])
        base += c.length
    np.bitwise_xor.at(dense, (np.concatenate(rows), np.concatenate(cols)), 1)
    return dense


def _span_contains(dense: np.ndarray, unknown: np.ndarray, targets: np.ndarray) -> bool:
    """All unit vectors at ``targets`` lie in the row span restricted to ``unknown`` columns.

    With R the row space, dim(R meet span(targets)) = rank(R) - rank(R off targets).
    """
    if not len(targets):
        return True
    if dense.shape[0] < len(targets):
        return False
    full = rank_words(pack_rows(dense[:, unknown]))
    if full < len(targets):
        return False
    rest = np.setdiff1d(unknown, targets, assume_unique=True)
    off = rank_words(pack_rows(dense[:, rest])) if len(rest) else 0
    return full - off == len(targets)


def positions_decodable(
    cache: CacheState, codewords: Sequence[Codeword], user: int, positions, dense=None
) -> bool:
    """True iff ``user`` can recover every global position ``(file-1)*F + bit`` listed."""
    n, f = cache.num_files, cache.file_bits
    if dense is None:
        dense = codeword_matrix(codewords, n, f)
    cached = cache.mask[user - 1].reshape(-1)
    unknown = np.flatnonzero(~cached)
    targets = np.asarray(sorted(p for p in set(int(x) for x in positions) if not cached[p]), dtype=np.int64)
    return _span_contains(dense, unknown, targets)


def decodable(
    cache: CacheState,
    log: TransmissionLog,
    user: int,
    demanded_file: int,
    cfg: SystemConfig | None = None,
) -> bool:
    f = cache.file_bits
    wanted = np.arange((demanded_file - 1) * f, demanded_file * f)
    return positions_decodable(cache, log.codewords, user, wanted)


def decodable_all(cache: CacheState, log: TransmissionLog, demand: DemandVector) -> list[bool]:
    """Decodability flag per user, sharing the codeword matrix across users."""
    n, f = cache.num_files, cache.file_bits
    dense = codeword_matrix(log.codewords, n, f)
    out = []
    for k, d in enumerate(demand.demands, start=1):
        wanted = np.arange((d - 1) * f, d * f)
        out.append(positions_decodable(cache, log.codewords, k, wanted, dense=dense))
    return out
