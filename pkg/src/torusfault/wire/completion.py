"""Event Queue completion words.

A completion is two 128-bit words. For TX/GPU/NIOS sources the first
word is a CMD1 (or NIOS CMD) and the second repeats a source-specific
64-bit magic in both halves. RX completions carry the packet HEADER and
``physical address (bits 127-64) | footer bits 63-0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .registers import WORD128_MASK, _check_word

MASK64 = (1 << 64) - 1

TAG_NONE = 0b00   # dummy command, dismissed without an event
TAG_EQ = 0b01     # post an event to the completion queue


class UnknownMagic(ValueError):
    pass


class CompletionSource(Enum):
    TX_DMA0 = "tx_dma0"
    TX_DMA1 = "tx_dma1"
    GPU_TX = "gpu_tx"
    RX = "rx"
    NIOS = "nios"


MAGIC_HALVES = {
    CompletionSource.TX_DMA0: 0x11111111_DAD0DAD0,
    CompletionSource.TX_DMA1: 0x22222222_DAD0DAD0,
    CompletionSource.GPU_TX: 0x00000000_DAD0DAD0,
    CompletionSource.NIOS: 0x33333333_DAD0DAD0,
}
_SIGNATURE = 0xDAD0DAD0


def magic_word(source: CompletionSource) -> int:
    """Full 128-bit second completion word for a non-RX source."""
    half = MAGIC_HALVES[source]
    return half << 64 | half


def source_for_magic(word: int) -> Optional[CompletionSource]:
    for src, half in MAGIC_HALVES.items():
        if word == half << 64 | half:
            return src
    return None


def _looks_like_magic(word: int) -> bool:
    hi, lo = word >> 64, word & MASK64
    return hi == lo and (lo & 0xFFFFFFFF) == _SIGNATURE


@dataclass(frozen=True)
class Command1:
    """CMD1 / NIOS CMD layout; pad bits are always encoded as zero."""

    tag: int = TAG_EQ
    code: int = 0
    port_id: int = 0
    data: int = 0
    magic: int = 0   # TX queue entry address

    _WIDTHS = {"tag": 2, "code": 15, "port_id": 2, "data": 32, "magic": 64}

    def __post_init__(self):
        for name, width in self._WIDTHS.items():
            v = getattr(self, name)
            if not 0 <= v < (1 << width):
                raise ValueError(f"{name}={v} does not fit in {width} bits")

    @property
    def is_dummy(self) -> bool:
        return self.tag == TAG_NONE

    def to_word(self) -> int:
        return (self.tag << 2 | self.code << 4 | self.port_id << 19
                | self.data << 32 | self.magic << 64)

    @classmethod
    def from_word(cls, word: int) -> "Command1":
        _check_word(word, 128)
        return cls(
            tag=word >> 2 & 0b11,
            code=word >> 4 & 0x7FFF,
            port_id=word >> 19 & 0b11,
            data=word >> 32 & 0xFFFFFFFF,
            magic=word >> 64,
        )


@dataclass(frozen=True)
class CompletionEvent:
    source: CompletionSource
    first_word: int
    second_word: int

    def __post_init__(self):
        _check_word(self.first_word, 128)
        _check_word(self.second_word, 128)

    @classmethod
    def from_command(cls, source: CompletionSource, cmd: Command1) -> "CompletionEvent":
        if source is CompletionSource.RX:
            raise ValueError("RX completions carry a header, use from_rx()")
        return cls(source, cmd.to_word(), magic_word(source))

    @classmethod
    def from_rx(cls, header: int, phys_addr: int, footer: int) -> "CompletionEvent":
        if not 0 <= phys_addr <= MASK64:
            raise ValueError("physical address must be 64 bits")
        _check_word(footer, 128)
        return cls(CompletionSource.RX, header, phys_addr << 64 | (footer & MASK64))

    @property
    def command(self) -> Command1:
        if self.source is CompletionSource.RX:
            raise ValueError("RX completions have no CMD1")
        return Command1.from_word(self.first_word)

    @property
    def phys_addr(self) -> int:
        return self.second_word >> 64

    @property
    def footer_low(self) -> int:
        return self.second_word & MASK64

    def encode(self) -> tuple[int, int]:
        return self.first_word, self.second_word

    def to_bytes(self) -> bytes:
        """32-byte little-endian image, as written by the 32-byte PCI transfer."""
        return self.first_word.to_bytes(16, "little") + self.second_word.to_bytes(16, "little")

    @classmethod
    def decode(cls, first_word: int, second_word: int,
               source: Optional[CompletionSource] = None) -> "CompletionEvent":
        """Recover an event from its two words.

        Without a ``source`` hint, a second word matching a known magic selects
        that source; one that has the magic shape (equal halves ending in
        ``DAD0DAD0``) but an unknown prefix raises :class:`UnknownMagic`; any
        other word is taken as an RX completion.
        """
        _check_word(first_word, 128)
        _check_word(second_word, 128)
        found = source_for_magic(second_word)
        if source is None:
            if found is not None:
                return cls(found, first_word, second_word)
            if _looks_like_magic(second_word):
                raise UnknownMagic(f"unrecognised completion magic 0x{second_word:032X}")
            return cls(CompletionSource.RX, first_word, second_word)
        if source is not CompletionSource.RX and found is not source:
            raise UnknownMagic(f"second word 0x{second_word:032X} is not the {source.value} magic")
        return cls(source, first_word, second_word & WORD128_MASK)
