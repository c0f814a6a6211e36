"""Codewords over GF(2) and the per-trial transmission log."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

PAD = -1


@dataclass(frozen=True, eq=False)
class Codeword:
    """Bitwise XOR of aligned segments.

    Row ``t`` of ``bits`` lists the bit indices of file ``files[t]`` placed
    at offsets ``0..length-1``; ``PAD`` entries are zeros. Shorter segments
    are padded at the tail.
    """

    files: tuple[int, ...]
    bits: np.ndarray
    labels: tuple[str, ...]

    @property
    def length(self) -> int:
        return self.bits.shape[1]

    @classmethod
    def from_segments(
        cls, segments: Iterable[tuple[int, Sequence[int], str]]
    ) -> "Codeword | None":
        """Build from ``(file, bits, label)`` triples; ``None`` if every segment is empty."""
        segments = [(f, list(b), lab) for f, b, lab in segments if len(b)]
        if not segments:
            return None
        length = max(len(b) for _, b, _ in segments)
        bits = np.full((len(segments), length), PAD, dtype=np.int64)
        for row, (_, b, _) in enumerate(segments):
            bits[row, : len(b)] = b
        return cls(
            tuple(int(f) for f, _, _ in segments), bits, tuple(lab for _, _, lab in segments)
        )

    def segments(self) -> list[tuple[int, list[int], str]]:
        return [
            (f, [int(x) for x in row if x != PAD], lab)
            for f, row, lab in zip(self.files, self.bits, self.labels)
        ]

    def to_json(self) -> dict:
        return {
            "length": self.length,
            "segments": [
                {"file": f, "bits": row.tolist(), "label": lab}
                for f, row, lab in zip(self.files, self.bits, self.labels)
            ],
        }

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Codeword)
            and self.files == other.files
            and self.labels == other.labels
            and np.array_equal(self.bits, other.bits)
        )

    def __hash__(self) -> int:
        return hash((self.files, self.labels, self.bits.tobytes()))


@dataclass
class TransmissionLog:
    file_bits: int
    codewords: list[Codeword] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def send(self, codeword: Codeword | None) -> None:
        if codeword is not None:
            self.codewords.append(codeword)

    def send_segments(self, segments: Iterable[tuple[int, Sequence[int], str]]) -> None:
        self.send(Codeword.from_segments(segments))

    @property
    def total_bits(self) -> int:
        return sum(c.length for c in self.codewords)

    @property
    def load(self) -> float:
        return self.total_bits / self.file_bits

    def __len__(self) -> int:
        return len(self.codewords)

    def prefix(self, count: int) -> "TransmissionLog":
        return TransmissionLog(self.file_bits, self.codewords[:count])

    def to_json(self) -> dict:
        return {
            "file_bits": self.file_bits,
            "total_bits": self.total_bits,
            "load": self.load,
            "codewords": [c.to_json() for c in self.codewords],
        }
