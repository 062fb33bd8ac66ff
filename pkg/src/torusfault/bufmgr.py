"""RDMA buffer registration.

Two interchangeable stores for persistent buffer descriptors:

* :class:`ReferencePool` - unbounded, insertion ordered, list semantics.
* :class:`BufferTable` - fixed 32 slots held in register files
  (BVA/BLN/BFL/BMW) with an occupancy mask ``bm``, a slot index ``bi`` and
  the two condition flags ``bc`` (buffer) and ``rc`` (range).

The table counts abstract costs (slot probes and range/equality checks)
in place of pipeline cycles.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterator, List, Optional

SLOTS = 32
U64 = (1 << 64) - 1
U32 = (1 << 32) - 1

TRACE_HEADER = ["phase", "op", "arg_vaddr", "arg_len", "result", "probes"]


@dataclass(frozen=True)
class BufferDescriptor:
    virt_addr: int
    len: int
    flags: int = 0
    magic_word: int = 0

    def __post_init__(self):
        if not 0 <= self.virt_addr <= U64:
            raise ValueError("virt_addr must be a 64-bit unsigned value")
        if not 0 < self.len <= U32:
            raise ValueError("len must be a positive 32-bit value")
        if not 0 <= self.flags <= U32 or not 0 <= self.magic_word <= U64:
            raise ValueError("flags is 32 bits, magic_word is 64 bits")
        if self.virt_addr + self.len - 1 > U64:
            raise ValueError("buffer wraps past the end of the 64-bit address space")

    @property
    def last(self) -> int:
        return self.virt_addr + self.len - 1


def check_addr_in_range(start: int, end: int, virt_addr: int, length: int) -> bool:
    """True when ``[start, end]`` lies inside the buffer ``[virt_addr, virt_addr+length-1]``."""
    return virt_addr <= start and end <= virt_addr + length - 1


class BufferTable:
    """32-entry register-bank store."""

    def __init__(self):
        self.bva = [0] * SLOTS
        self.bln = [0] * SLOTS
        self.bfl = [0] * SLOTS
        self.bmw = [0] * SLOTS
        self.bm = 0
        self.bi = 0
        self.bc = False
        self.rc = False
        self.probes = 0
        self.checks = 0

    def __len__(self) -> int:
        return bin(self.bm).count("1")

    def reset_counters(self) -> None:
        self.probes = 0
        self.checks = 0

    def _slot(self, k: int) -> BufferDescriptor:
        return BufferDescriptor(self.bva[k], self.bln[k], self.bfl[k], self.bmw[k])

    # intrinsic operations

    def buf_free(self) -> bool:
        """Claim the lowest clear bit of ``bm`` into ``bi``; ``bc`` tells success."""
        for k in range(SLOTS):
            self.probes += 1
            if not self.bm >> k & 1:
                self.bi = k
                self.bm |= 1 << k
                self.bc = True
                return True
        self.bc = False
        return False

    def bufadd(self, d: BufferDescriptor) -> None:
        k = self.bi
        self.bva[k], self.bln[k], self.bfl[k], self.bmw[k] = d.virt_addr, d.len, d.flags, d.magic_word

    def add(self, d: BufferDescriptor) -> bool:
        if self.buf_free():
            self.bufadd(d)
        return self.bc

    def buf_first(self) -> bool:
        self.bi = 0
        return self._seek()

    def buf_next(self) -> bool:
        self.bi += 1
        return self._seek()

    def _seek(self) -> bool:
        while self.bi < SLOTS:
            if self.bm >> self.bi & 1:
                self.bc = True
                self.probes += 1
                return True
            self.bi += 1
        self.bi = SLOTS - 1
        self.bc = False
        return False

    def live_slots(self) -> Iterator[int]:
        ok = self.buf_first()
        while ok:
            yield self.bi
            ok = self.buf_next()

    def search(self, start: int, end: int) -> Optional[BufferDescriptor]:
        if start > end:
            raise ValueError("start must not exceed end")
        self.rc = False
        for k in self.live_slots():
            self.checks += 1
            self.rc = check_addr_in_range(start, end, self.bva[k], self.bln[k])
            if self.rc:
                return self._slot(k)
        return None

    def remove(self, virt_addr: int, length: int) -> bool:
        for k in self.live_slots():
            self.checks += 1
            if self.bva[k] == virt_addr and self.bln[k] == length:
                self.bm &= ~(1 << k)
                return True
        return False

    def descriptors(self) -> List[BufferDescriptor]:
        return [self._slot(k) for k in range(SLOTS) if self.bm >> k & 1]


class ReferencePool:
    """Unbounded list store with the original firmware's semantics."""

    def __init__(self):
        self._items: List[BufferDescriptor] = []

    def __len__(self) -> int:
        return len(self._items)

    def add(self, d: BufferDescriptor) -> bool:
        self._items.append(d)
        return True

    def search(self, start: int, end: int) -> Optional[BufferDescriptor]:
        if start > end:
            raise ValueError("start must not exceed end")
        for d in self._items:
            if check_addr_in_range(start, end, d.virt_addr, d.len):
                return d
        return None

    def remove(self, virt_addr: int, length: int) -> bool:
        for i, d in enumerate(self._items):
            if d.virt_addr == virt_addr and d.len == length:
                del self._items[i]
                return True
        return False

    def descriptors(self) -> List[BufferDescriptor]:
        return list(self._items)


# benchmark

def benchmark_buffer(k: int) -> BufferDescriptor:
    """Deterministic non-overlapping buffer used for slot ``k``."""
    return BufferDescriptor(0x1000 * (k + 1), 0x800, flags=0, magic_word=k)


@dataclass(frozen=True)
class TraceRow:
    phase: str
    op: str
    arg_vaddr: int
    arg_len: int
    result: str
    probes: int

    def as_csv(self) -> list:
        return [self.phase, self.op, f"0x{self.arg_vaddr:X}", f"0x{self.arg_len:X}", self.result, self.probes]


def run_benchmark(table: Optional[BufferTable] = None) -> List[TraceRow]:
    """Append 32 buffers, search 0/16/31, remove 0/16/31, search 16 again."""
    table = table or BufferTable()
    rows = []

    def record(phase, op, d, result):
        rows.append(TraceRow(phase, op, d.virt_addr, d.len, result, table.probes))
        table.reset_counters()

    table.reset_counters()
    for k in range(SLOTS):
        d = benchmark_buffer(k)
        ok = table.add(d)
        record("append_0_31", "append", d, "ok" if ok else "full")
    for k in (0, 16, 31):
        d = benchmark_buffer(k)
        found = table.search(d.virt_addr, d.last)
        record("search_0_16_31", "search", d, "found" if found else "not_found")
    for k in (0, 16, 31):
        d = benchmark_buffer(k)
        ok = table.remove(d.virt_addr, d.len)
        record("remove_0_16_31", "remove", d, "removed" if ok else "absent")
    d = benchmark_buffer(16)
    found = table.search(d.virt_addr, d.last)
    record("search_16", "search", d, "found" if found else "not_found")
    return rows


def trace_csv(rows: List[TraceRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for r in rows:
        w.writerow(r.as_csv())
    return buf.getvalue()
