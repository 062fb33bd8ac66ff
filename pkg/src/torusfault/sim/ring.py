"""TX command ring shared between host (writer) and DNP (reader)."""

from __future__ import annotations

from dataclasses import dataclass


class RingFull(RuntimeError):
    pass


@dataclass
class CommandRing:
    size: int = 64
    wr_ptr: int = 0
    rd_ptr: int = 0

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("ring needs at least two slots")
        if not (0 <= self.wr_ptr < self.size and 0 <= self.rd_ptr < self.size):
            raise ValueError("pointers out of range")

    @property
    def pending(self) -> int:
        return (self.wr_ptr - self.rd_ptr) % self.size

    def push(self, count: int = 1) -> int:
        # one slot stays empty so a full ring is distinguishable from an empty one
        if self.pending + count > self.size - 1:
            raise RingFull(f"{self.pending} pending, cannot push {count}")
        self.wr_ptr = (self.wr_ptr + count) % self.size
        return self.pending

    def pull(self, batch: int) -> int:
        n = min(self.pending, batch)
        self.rd_ptr = (self.rd_ptr + n) % self.size
        return n
